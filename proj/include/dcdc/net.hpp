#ifndef DCDC_NET_HPP
#define DCDC_NET_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "dcdc/geometry.hpp"
#include "dcdc/rng.hpp"

namespace dcdc {

// Feed-forward network: sigmoid hidden layers, scalar linear output passed
// through softplus plus a fixed offset so V(x) >= offset > 0 everywhere.
struct NetSpec {
  int input_dim = 1;
  std::vector<int> layer_widths;  // hidden widths, at least one
  double output_offset = 0.01;

  void validate() const {
    if (input_dim < 1) throw std::invalid_argument("NetSpec: input_dim >= 1");
    if (layer_widths.empty()) throw std::invalid_argument("NetSpec: need a hidden layer");
    for (int w : layer_widths)
      if (w < 1) throw std::invalid_argument("NetSpec: widths must be positive");
  }
};

inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

class ValueNet {
 public:
  // Scratch buffers for forward/backward passes; reusable across calls.
  struct Workspace {
    std::vector<std::vector<double>> act;    // activations per hidden layer
    std::vector<std::vector<double>> delta;  // backprop errors per hidden layer
  };

  // Empty placeholder; usable only after assignment from a real net.
  ValueNet() = default;

  ValueNet(NetSpec spec, std::vector<double> params) : spec_(std::move(spec)), params_(std::move(params)) {
    spec_.validate();
    build_layout();
    if (params_.size() != static_cast<std::size_t>(param_count_))
      throw std::invalid_argument("ValueNet: parameter vector length mismatch");
  }

  explicit ValueNet(NetSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    build_layout();
    params_.assign(param_count_, 0.0);
  }

  // Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer.
  static ValueNet random_init(NetSpec spec, SplitRng& rng) {
    ValueNet net(std::move(spec));
    int fan_in = net.spec_.input_dim;
    std::size_t pos = 0;
    for (std::size_t l = 0; l < net.widths_.size(); ++l) {
      const int out = net.widths_[l];
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (int i = 0; i < out * fan_in + out; ++i) net.params_[pos++] = rng.uniform(-bound, bound);
      fan_in = out;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int i = 0; i < fan_in + 1; ++i) net.params_[pos++] = rng.uniform(-bound, bound);
    return net;
  }

  const NetSpec& spec() const { return spec_; }
  int param_count() const { return param_count_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  Workspace make_workspace() const {
    Workspace ws;
    ws.act.resize(widths_.size());
    ws.delta.resize(widths_.size());
    for (std::size_t l = 0; l < widths_.size(); ++l) {
      ws.act[l].resize(widths_[l]);
      ws.delta[l].resize(widths_[l]);
    }
    return ws;
  }

  double forward(const Vec& x, Workspace& ws) const {
    check_input(x);
    const double z = run_forward(x, ws);
    return softplus(z) + spec_.output_offset;
  }

  double forward(const Vec& x) const {
    Workspace ws = make_workspace();
    return forward(x, ws);
  }

  // V(x) and acc += coeff * dV/dtheta in one pass.
  double value_and_accumulate_grad(const Vec& x, double coeff, std::span<double> acc,
                                   Workspace& ws) const {
    check_input(x);
    if (acc.size() != static_cast<std::size_t>(param_count_))
      throw std::invalid_argument("gradient accumulator length mismatch");
    const double z_out = run_forward(x, ws);
    const double value = softplus(z_out) + spec_.output_offset;
    const double g_out = coeff / (1.0 + std::exp(-z_out));  // softplus'

    const std::size_t L = widths_.size();
    const auto& aL = ws.act[L - 1];
    // Output layer.
    {
      double* w = acc.data() + out_w_off_;
      for (int j = 0; j < widths_[L - 1]; ++j) w[j] += g_out * aL[j];
      acc[static_cast<std::size_t>(out_b_off_)] += g_out;
    }
    // Top hidden layer error.
    {
      const double* w = params_.data() + out_w_off_;
      auto& d = ws.delta[L - 1];
      for (int j = 0; j < widths_[L - 1]; ++j)
        d[j] = g_out * w[j] * aL[j] * (1.0 - aL[j]);
    }
    // Remaining layers, top down.
    for (std::size_t l = L; l-- > 0;) {
      const int out = widths_[l];
      const int in = l == 0 ? spec_.input_dim : widths_[l - 1];
      const double* prev = l == 0 ? x.data() : ws.act[l - 1].data();
      const auto& d = ws.delta[l];
      double* gw = acc.data() + w_off_[l];
      double* gb = acc.data() + b_off_[l];
      for (int i = 0; i < out; ++i) {
        const double di = d[i];
        double* row = gw + static_cast<std::ptrdiff_t>(i) * in;
        for (int j = 0; j < in; ++j) row[j] += di * prev[j];
        gb[i] += di;
      }
      if (l > 0) {
        const double* W = params_.data() + w_off_[l];
        auto& dprev = ws.delta[l - 1];
        const auto& aprev = ws.act[l - 1];
        for (int j = 0; j < in; ++j) dprev[j] = 0.0;
        for (int i = 0; i < out; ++i) {
          const double di = d[i];
          const double* row = W + static_cast<std::ptrdiff_t>(i) * in;
          for (int j = 0; j < in; ++j) dprev[j] += di * row[j];
        }
        for (int j = 0; j < in; ++j) dprev[j] *= aprev[j] * (1.0 - aprev[j]);
      }
    }
    return value;
  }

  std::vector<double> grad_params(const Vec& x) const {
    std::vector<double> g(param_count_, 0.0);
    Workspace ws = make_workspace();
    value_and_accumulate_grad(x, 1.0, g, ws);
    return g;
  }

 private:
  void check_input(const Vec& x) const {
    if (static_cast<int>(x.size()) != spec_.input_dim)
      throw std::invalid_argument("ValueNet: input dimension mismatch");
  }

  void build_layout() {
    widths_ = spec_.layer_widths;
    w_off_.resize(widths_.size());
    b_off_.resize(widths_.size());
    int pos = 0;
    int fan_in = spec_.input_dim;
    for (std::size_t l = 0; l < widths_.size(); ++l) {
      w_off_[l] = pos;
      pos += widths_[l] * fan_in;
      b_off_[l] = pos;
      pos += widths_[l];
      fan_in = widths_[l];
    }
    out_w_off_ = pos;
    pos += fan_in;
    out_b_off_ = pos;
    pos += 1;
    param_count_ = pos;
  }

  double run_forward(const Vec& x, Workspace& ws) const {
    const double* in = x.data();
    int in_n = spec_.input_dim;
    for (std::size_t l = 0; l < widths_.size(); ++l) {
      const int out = widths_[l];
      const double* W = params_.data() + w_off_[l];
      const double* b = params_.data() + b_off_[l];
      auto& a = ws.act[l];
      for (int i = 0; i < out; ++i) {
        const double* row = W + static_cast<std::ptrdiff_t>(i) * in_n;
        double z = b[i];
        for (int j = 0; j < in_n; ++j) z += row[j] * in[j];
        a[i] = 1.0 / (1.0 + std::exp(-z));
      }
      in = a.data();
      in_n = out;
    }
    const double* w = params_.data() + out_w_off_;
    double z = params_[static_cast<std::size_t>(out_b_off_)];
    for (int j = 0; j < in_n; ++j) z += w[j] * in[j];
    return z;
  }

  NetSpec spec_;
  std::vector<double> params_;
  std::vector<int> widths_;
  std::vector<int> w_off_, b_off_;
  int out_w_off_ = 0, out_b_off_ = 0;
  int param_count_ = 0;
};

}  // namespace dcdc

#endif  // DCDC_NET_HPP
