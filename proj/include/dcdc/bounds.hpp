#ifndef DCDC_BOUNDS_HPP
#define DCDC_BOUNDS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcdc/certifier.hpp"
#include "dcdc/chain.hpp"
#include "dcdc/geometry.hpp"
#include "dcdc/parallel.hpp"

namespace dcdc {

struct CertificateInvalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Initial distribution of X0 for the pre-multiplier simulation: a fixed point
// or the uniform reference distribution on the domain.
struct InitialDistribution {
  bool fixed = true;
  Vec x0;

  static InitialDistribution at(Vec x) { return {true, std::move(x)}; }
  static InitialDistribution reference() { return {false, {}}; }
};

struct BoundConfig {
  InitialDistribution x0;
  std::int64_t mc_paths = 100'000;
  std::uint64_t seed = 0;
  double dv = 0.0;  // Lipschitz estimate of V, used to widen the M-extrema
  std::optional<double> exact_inf_u;  // set when V solves the CDE exactly (analytic mode)
  int threads = 0;
};

struct ExponentialBound {
  double rate = 0.0;              // r = 1 - u_eff / sup V
  double pre_multiplier = 0.0;    // shipped C, inflated by 2 standard errors
  double pre_multiplier_se = 0.0;
  double numerator = 0.0;         // E ||X0-X1|| V(X0 + U~ (X1-X0)), raw mean
  double u_eff = 0.0;             // u_tilde - eps, or the exact inf U in analytic mode
  double inf_v = 0.0, sup_v = 0.0;          // raw extrema over M
  double inf_v_wide = 0.0, sup_v_wide = 0.0;  // widened by dv * covering radius
  bool interpolant_fallback = false;  // some interpolants left the box; sup V used there
  std::string initial_distribution;
};

namespace detail {

struct McNumerator {
  double mean = 0.0;
  double se = 0.0;
  bool fallback = false;
};

inline McNumerator transition_numerator(const ChainModel& chain, const ValueFn& value,
                                        const BoundConfig& cfg, double sup_v_wide) {
  if (cfg.mc_paths < 2) throw std::invalid_argument("bound: mc_paths >= 2");
  if (cfg.x0.fixed) chain.domain.require(cfg.x0.x0);
  SplitRng root(cfg.seed);
  const std::int64_t n = cfg.mc_paths;
  std::vector<double> terms(static_cast<std::size_t>(n));
  std::vector<char> fell(static_cast<std::size_t>(n), 0);
  parallel_for(n, cfg.threads, [&](std::int64_t i) {
    SplitRng rng = root.split(static_cast<std::uint64_t>(i));
    const Vec x0 = cfg.x0.fixed ? cfg.x0.x0 : chain.sample_reference(rng);
    const SampledMap map = chain.sample_map(rng);
    const Vec x1 = map.apply_fn(x0);
    const double ut = rng.uniform01();
    Vec y(x0.size());
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = x0[k] + ut * (x1[k] - x0[k]);
    double v;
    if (chain.domain.contains(y)) {
      v = value(y);
    } else {
      v = sup_v_wide;
      fell[static_cast<std::size_t>(i)] = 1;
    }
    terms[static_cast<std::size_t>(i)] = norm2(x0, x1) * v;
  });
  McNumerator out;
  double sum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    sum += terms[static_cast<std::size_t>(i)];
    out.fallback = out.fallback || fell[static_cast<std::size_t>(i)];
  }
  out.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double t : terms) ss += (t - out.mean) * (t - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

}  // namespace detail

// Theorem-3 conversion: W(X_n, X_inf) <= C r^n with r = 1 - u_eff/sup V and
// C computed by simulating the single transition X0 -> X1. The M-extrema of
// V are widened by dv * covering radius before plugging in; the shipped C is
// the Monte-Carlo mean inflated by two standard errors.
inline ExponentialBound exponential_bound(const Certificate& cert, const ChainModel& chain,
                                          const ValueFn& value, const BoundConfig& cfg) {
  double u_eff;
  if (cfg.exact_inf_u) {
    u_eff = *cfg.exact_inf_u;
    if (!(u_eff > 0.0)) throw std::invalid_argument("exponential_bound: exact inf U must be positive");
  } else {
    if (!cert.valid)
      throw CertificateInvalid("exponential_bound: certificate margin u_tilde <= eps");
    u_eff = cert.u_tilde - cert.eps;
  }
  ExponentialBound b;
  b.u_eff = u_eff;
  b.inf_v = cert.inf_v;
  b.sup_v = cert.sup_v;
  const double widen = cfg.dv * cert.covering_radius;
  b.inf_v_wide = cert.inf_v - widen;
  b.sup_v_wide = cert.sup_v + widen;
  if (!(b.inf_v_wide > 0.0))
    throw CertificateInvalid("exponential_bound: widened inf V is not positive");
  b.rate = 1.0 - u_eff / b.sup_v_wide;
  if (!(b.rate > 0.0 && b.rate < 1.0))
    throw CertificateInvalid("exponential_bound: degenerate certificate, r not in (0,1)");

  const detail::McNumerator num = detail::transition_numerator(chain, value, cfg, b.sup_v_wide);
  b.numerator = num.mean;
  const double denom = u_eff * (b.inf_v_wide / b.sup_v_wide);
  b.pre_multiplier = (num.mean + 2.0 * num.se) / denom;
  b.pre_multiplier_se = num.se / denom;
  b.interpolant_fallback = num.fallback;
  b.initial_distribution = cfg.x0.fixed ? "fixed" : "reference";
  return b;
}

// ---------------------------------------------------------------------------
// Theorem-4 conversion from a chained-CDE run.

struct PolynomialBound {
  int order = 1;  // m
  double numerator = 0.0;       // shipped (mean + 2 se)
  double numerator_se = 0.0;
  double inf_v0 = 0.0;
  bool interpolant_fallback = false;
  std::string initial_distribution;

  // W(X_n, X_inf) <= numerator / (inf V0 * prod_{k=1}^{m-1} (1 + n/k)).
  double evaluate(double n) const {
    double denom = inf_v0;
    for (int k = 1; k <= order - 1; ++k) denom *= 1.0 + n / static_cast<double>(k);
    return numerator / denom;
  }
};

// stage_certs[k] must certify KV_{k+1} <= V_{k+1} - U_k pointwise (with-U
// convention); value_m is the final-stage solution V_m.
inline PolynomialBound polynomial_bound(const std::vector<Certificate>& stage_certs,
                                        const ValueFn& value_m, const ChainModel& chain,
                                        double inf_v0, const BoundConfig& cfg) {
  if (stage_certs.empty()) throw std::invalid_argument("polynomial_bound: need >= 1 stage");
  if (!(inf_v0 > 0.0)) throw std::invalid_argument("polynomial_bound: inf V0 must be positive");
  for (std::size_t k = 0; k < stage_certs.size(); ++k) {
    if (!stage_certs[k].valid_pointwise_u)
      throw CertificateInvalid("polynomial_bound: stage " + std::to_string(k + 1) +
                               " certificate does not hold pointwise");
  }
  PolynomialBound b;
  b.order = static_cast<int>(stage_certs.size());
  b.inf_v0 = inf_v0;
  // Conservative plug-in for V_m outside-sample values: widen with the final
  // stage extrema only.
  const detail::McNumerator num =
      detail::transition_numerator(chain, value_m, cfg, stage_certs.back().sup_v);
  b.numerator = num.mean + 2.0 * num.se;
  b.numerator_se = num.se;
  b.interpolant_fallback = num.fallback;
  b.initial_distribution = cfg.x0.fixed ? "fixed" : "reference";
  return b;
}

// ---------------------------------------------------------------------------
// Tabulated report of a bound over a horizon, plus first threshold crossings.

struct BoundReportRow {
  double n = 0.0;
  double value = 0.0;
};

struct BoundReport {
  std::vector<BoundReportRow> rows;
  // first n at which the bound drops below 1, 0.1, 0.01; -1 when it never does
  std::vector<std::pair<double, double>> crossings;
};

inline double first_crossing(const std::function<double(double)>& bound, double threshold,
                             double n_max = 1e12) {
  if (bound(0.0) < threshold) return 0.0;
  if (bound(n_max) >= threshold) return -1.0;
  double lo = 0.0, hi = n_max;  // bound(lo) >= th > bound(hi)
  while (hi - lo > 0.5) {
    const double mid = std::floor((lo + hi) / 2.0);
    if (bound(mid) < threshold)
      hi = mid;
    else
      lo = mid + 1.0;
  }
  return std::ceil(hi);
}

inline BoundReport bound_report(const std::function<double(double)>& bound,
                                const std::vector<double>& horizon) {
  BoundReport rep;
  rep.rows.reserve(horizon.size());
  for (double n : horizon) rep.rows.push_back({n, bound(n)});
  for (double th : {1.0, 0.1, 0.01}) rep.crossings.emplace_back(th, first_crossing(bound, th));
  return rep;
}

inline std::function<double(double)> evaluator(const ExponentialBound& b) {
  return [b](double n) { return b.pre_multiplier * std::pow(b.rate, n); };
}

inline std::function<double(double)> evaluator(const PolynomialBound& b) {
  return [b](double n) { return b.evaluate(n); };
}

}  // namespace dcdc

#endif  // DCDC_BOUNDS_HPP
