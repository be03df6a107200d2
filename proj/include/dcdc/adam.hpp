#ifndef DCDC_ADAM_HPP
#define DCDC_ADAM_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace dcdc {

struct AdamState {
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  std::int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n, double lr_ = 1e-3)
      : m(n, 0.0), v(n, 0.0), lr(lr_) {}
};

// Standard Adam update with bias correction. Mutates state and theta in
// place; the result is a pure function of (state, theta, grad, lr_scale).
inline void adam_step(AdamState& state, std::span<double> theta, std::span<const double> grad,
                      double lr_scale = 1.0) {
  if (theta.size() != grad.size() || theta.size() != state.m.size())
    throw std::invalid_argument("adam_step: length mismatch");
  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = state.lr * lr_scale;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    theta[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

}  // namespace dcdc

#endif  // DCDC_ADAM_HPP
