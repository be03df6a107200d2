#ifndef DCDC_GEOMETRY_HPP
#define DCDC_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "dcdc/rng.hpp"

namespace dcdc {

using Vec = std::vector<double>;

inline double norm2(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double norm2(const Vec& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

struct DomainViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Axis-aligned box; the state space of every chain in this library.
struct DomainBox {
  Vec lower;
  Vec upper;

  DomainBox(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size() || lower.empty())
      throw std::invalid_argument("DomainBox: bound length mismatch");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i]))
        throw std::invalid_argument("DomainBox: lower must be < upper");
  }

  int dim() const { return static_cast<int>(lower.size()); }

  bool contains(const Vec& x, double tol = 1e-9) const {
    if (x.size() != lower.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double slack = tol * (upper[i] - lower[i]);
      if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
    }
    return true;
  }

  void require(const Vec& x) const {
    if (!contains(x)) throw DomainViolation("point outside domain box");
  }

  Vec clamp(Vec x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = std::min(std::max(x[i], lower[i]), upper[i]);
    return x;
  }

  Vec sample_uniform(SplitRng& rng) const {
    Vec x(lower.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(lower[i], upper[i]);
    return x;
  }

  double diameter() const {
    double s = 0.0;
    for (std::size_t i = 0; i < lower.size(); ++i) {
      const double w = upper[i] - lower[i];
      s += w * w;
    }
    return std::sqrt(s);
  }

  double volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lower.size(); ++i) v *= upper[i] - lower[i];
    return v;
  }
};

// Positive target function U, bounded away from zero.
struct UFunction {
  std::function<double(const Vec&)> eval;
  double inf_value = 0.0;

  double operator()(const Vec& x) const { return eval(x); }
};

inline UFunction constant_u(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("constant_u: level must be positive");
  return UFunction{[c](const Vec&) { return c; }, c};
}

}  // namespace dcdc

#endif  // DCDC_GEOMETRY_HPP
