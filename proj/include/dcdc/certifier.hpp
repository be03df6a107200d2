#ifndef DCDC_CERTIFIER_HPP
#define DCDC_CERTIFIER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dcdc/chain.hpp"
#include "dcdc/geometry.hpp"
#include "dcdc/parallel.hpp"
#include "dcdc/rng.hpp"

namespace dcdc {

using ValueFn = std::function<double(const Vec&)>;

enum class PointSource { kAuto, kLattice, kUniform };

struct CertConfig {
  std::int64_t M = 4096;   // evaluation points
  std::int64_t N = 1000;   // maps per point
  double eps = 0.01;
  double delta = 0.05;
  PointSource source = PointSource::kAuto;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = auto

  void validate() const {
    if (M < 1 || N < 2) throw std::invalid_argument("CertConfig: M >= 1, N >= 2");
    if (!(eps > 0.0) || !(delta > 0.0 && delta < 1.0))
      throw std::invalid_argument("CertConfig: bad eps/delta");
  }
};

struct ResidualStats {
  double max = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;
};

inline ResidualStats residual_stats(const std::vector<double>& r) {
  ResidualStats s;
  s.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double v : r) {
    s.max = std::max(s.max, v);
    sum += v;
  }
  s.mean = sum / static_cast<double>(r.size());
  double ss = 0.0;
  for (double v : r) ss += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(ss / static_cast<double>(r.size()));
  return s;
}

// Empirical verification record over the point set M with N maps per point.
// Residuals are stored in both conventions: K_hat V - V (without the +U
// term, handy for plots) and K_hat V - V + U (the drift margin).
struct Certificate {
  bool valid = false;            // u_tilde > eps (drift-margin validity, Theorem 3 route)
  bool valid_pointwise_u = false;  // max residual with U <= -eps (sequence-stage validity)
  std::vector<Vec> points;
  std::vector<double> v_values;
  std::vector<double> residual_no_u;    // K_hat V - V
  std::vector<double> residual_with_u;  // K_hat V - V + U
  ResidualStats stats_no_u;
  ResidualStats stats_with_u;
  double u_tilde = 0.0;  // inf over M of [V - K_hat V]
  double inf_v = 0.0;
  double sup_v = 0.0;
  double covering_radius = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  std::int64_t M = 0;
  std::int64_t N = 0;
  std::uint64_t seed = 0;
  std::string point_source;
  std::string chain_id;
  std::string net_id;
  bool df_smoothness_caveat = false;  // Df piecewise constant: Theorem 5's E D^2f assumption fails
};

// K_hat_N V(x) = (1/N) sum Df_k(x) V(f_k(x)) over N fresh maps.
inline double empirical_K(const ValueFn& value, const ChainModel& chain, const Vec& x,
                          std::int64_t n, SplitRng& rng) {
  chain.domain.require(x);
  if (n < 1) throw std::invalid_argument("empirical_K: N >= 1");
  double acc = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    SampledMap map = chain.sample_map(rng);
    const double df = map.lipschitz_fn(x);
    if (df != 0.0) acc += df * value(map.apply_fn(x));
  }
  return acc / static_cast<double>(n);
}

inline std::vector<Vec> lattice_points(const DomainBox& box, std::int64_t m) {
  const int d = box.dim();
  std::vector<Vec> pts;
  if (d == 1) {
    pts.reserve(m);
    for (std::int64_t i = 0; i < m; ++i) {
      const double t = m == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(m - 1);
      pts.push_back({box.lower[0] + t * (box.upper[0] - box.lower[0])});
    }
    return pts;
  }
  const std::int64_t side =
      std::max<std::int64_t>(2, static_cast<std::int64_t>(std::llround(
                                    std::ceil(std::pow(static_cast<double>(m), 1.0 / d)))));
  std::vector<std::int64_t> idx(d, 0);
  for (;;) {
    Vec p(d);
    for (int k = 0; k < d; ++k) {
      const double t = static_cast<double>(idx[k]) / static_cast<double>(side - 1);
      p[k] = box.lower[k] + t * (box.upper[k] - box.lower[k]);
    }
    pts.push_back(std::move(p));
    int k = 0;
    while (k < d && ++idx[k] == side) idx[k++] = 0;
    if (k == d) break;
  }
  return pts;
}

inline double lattice_covering_radius(const DomainBox& box, std::int64_t points_per_side_total) {
  const int d = box.dim();
  const std::int64_t side =
      d == 1 ? points_per_side_total
             : std::max<std::int64_t>(2, static_cast<std::int64_t>(std::llround(std::ceil(
                                             std::pow(static_cast<double>(points_per_side_total),
                                                      1.0 / d)))));
  double s = 0.0;
  for (int k = 0; k < d; ++k) {
    const double h = (box.upper[k] - box.lower[k]) / static_cast<double>(std::max<std::int64_t>(side - 1, 1));
    s += h * h;
  }
  return 0.5 * std::sqrt(s);
}

// Verifies the drift inequality on the sampled point set: evaluates the
// residual at every point, records both conventions, the certified margin
// u_tilde = inf_M [V - K_hat V], and the extrema of V over M. An invalid
// certificate is a structured result, not an error.
inline Certificate certify(const ValueFn& value, const ChainModel& chain, const UFunction& u,
                           const CertConfig& cfg, std::string chain_id = {},
                           std::string net_id = {}) {
  cfg.validate();
  Certificate cert;
  cert.eps = cfg.eps;
  cert.delta = cfg.delta;
  cert.N = cfg.N;
  cert.seed = cfg.seed;
  cert.chain_id = std::move(chain_id);
  cert.net_id = std::move(net_id);
  cert.df_smoothness_caveat = chain.piecewise_df;

  SplitRng root(cfg.seed);
  PointSource src = cfg.source;
  if (src == PointSource::kAuto)
    src = chain.domain.dim() <= 2 ? PointSource::kLattice : PointSource::kUniform;
  if (src == PointSource::kLattice) {
    cert.points = lattice_points(chain.domain, cfg.M);
    cert.covering_radius = lattice_covering_radius(chain.domain, cfg.M);
    cert.point_source = "lattice";
  } else {
    SplitRng prng = root.split(0);
    cert.points.reserve(cfg.M);
    for (std::int64_t i = 0; i < cfg.M; ++i) cert.points.push_back(chain.domain.sample_uniform(prng));
    // High-probability covering radius heuristic for uniform sampling.
    cert.covering_radius =
        chain.domain.diameter() *
        std::pow(std::log(static_cast<double>(cfg.M) + 1.0) / static_cast<double>(cfg.M),
                 1.0 / chain.domain.dim());
    cert.point_source = "uniform";
  }
  cert.M = static_cast<std::int64_t>(cert.points.size());

  const std::int64_t mpts = cert.M;
  cert.v_values.assign(mpts, 0.0);
  cert.residual_no_u.assign(mpts, 0.0);
  cert.residual_with_u.assign(mpts, 0.0);

  parallel_for(mpts, cfg.threads, [&](std::int64_t i) {
    SplitRng rng = root.split(static_cast<std::uint64_t>(i) + 1);
    const Vec& x = cert.points[static_cast<std::size_t>(i)];
    const double v = value(x);
    const double k = empirical_K(value, chain, x, cfg.N, rng);
    cert.v_values[static_cast<std::size_t>(i)] = v;
    cert.residual_no_u[static_cast<std::size_t>(i)] = k - v;
    cert.residual_with_u[static_cast<std::size_t>(i)] = k - v + u(x);
  });

  cert.stats_no_u = residual_stats(cert.residual_no_u);
  cert.stats_with_u = residual_stats(cert.residual_with_u);
  cert.u_tilde = -cert.stats_no_u.max;
  cert.inf_v = *std::min_element(cert.v_values.begin(), cert.v_values.end());
  cert.sup_v = *std::max_element(cert.v_values.begin(), cert.v_values.end());
  cert.valid = cert.u_tilde > cfg.eps;
  cert.valid_pointwise_u = cert.stats_with_u.max <= -cfg.eps;
  return cert;
}

// ---------------------------------------------------------------------------
// Theorem-5 style (M, N) prescriptions.

struct ComplexityEstimate {
  double lipschitz_l_tilde = 0.0;
  double sub_cube_count = 0.0;  // (2 L sqrt(d) / eps)^d
  double recommended_m = 0.0;   // ceil(2 C log(C e) / delta)
  double recommended_n = 0.0;   // ceil(8 supV^2 E Df^2 / (delta eps^2))
  bool symbolic = false;        // sub-cube count exceeded 1e15; lattice certification infeasible
  // inputs, echoed for the report
  double dv = 0.0, du = 0.0, sup_v = 0.0, edf2 = 0.0, ed2f = 0.0;
  double eps = 0.0, delta = 0.0;
  int dim = 0;
};

inline ComplexityEstimate theorem5_sizes(double eps, double delta, double dv, double du,
                                         double sup_v, double edf2, double ed2f, int d) {
  if (!(eps > 0.0) || !(delta > 0.0 && delta < 1.0) || d < 1 || dv < 0.0 || du < 0.0 ||
      !(sup_v > 0.0) || !(edf2 > 0.0) || ed2f < 0.0)
    throw std::invalid_argument("theorem5_sizes: estimates must be positive");
  ComplexityEstimate est;
  est.eps = eps;
  est.delta = delta;
  est.dim = d;
  est.dv = dv;
  est.du = du;
  est.sup_v = sup_v;
  est.edf2 = edf2;
  est.ed2f = ed2f;
  est.lipschitz_l_tilde = dv * edf2 + sup_v * ed2f + dv + du;
  est.sub_cube_count =
      std::pow(2.0 * est.lipschitz_l_tilde * std::sqrt(static_cast<double>(d)) / eps, d);
  est.recommended_n = std::ceil(8.0 * sup_v * sup_v * edf2 / (delta * eps * eps));
  if (est.sub_cube_count > 1e15 || !std::isfinite(est.sub_cube_count)) {
    est.symbolic = true;
    est.recommended_m = std::numeric_limits<double>::infinity();
  } else {
    const double c = est.sub_cube_count;
    est.recommended_m = std::ceil(2.0 * c * std::log(c * std::exp(1.0)) / delta);
  }
  return est;
}

// ---------------------------------------------------------------------------
// Plug-in estimates for the Theorem-5 constants.

struct LipschitzInputs {
  double dv = 0.0;        // max finite-difference slope of V over random close pairs
  double edf2 = 0.0;      // E Df^2 (closed form where the chain provides one)
  double edf2_se = 0.0;   // 0 for closed forms
  double ed2f = 0.0;      // Lipschitz bound on Df; 0 with caveat for indicator chains
  bool edf2_closed_form = false;
  bool d2f_caveat = false;
};

inline LipschitzInputs estimate_lipschitz_inputs(const ValueFn& value, const ChainModel& chain,
                                                 std::int64_t probes, SplitRng& rng) {
  if (probes < 1000) throw std::invalid_argument("estimate_lipschitz_inputs: probes >= 1000");
  LipschitzInputs est;
  const int d = chain.domain.dim();
  const double h = 1e-4 * chain.domain.diameter();
  for (std::int64_t i = 0; i < probes; ++i) {
    Vec x = chain.domain.sample_uniform(rng);
    Vec dir(d);
    double n = 0.0;
    for (int k = 0; k < d; ++k) {
      dir[k] = rng.uniform(-1.0, 1.0);
      n += dir[k] * dir[k];
    }
    n = std::sqrt(n);
    if (n == 0.0) continue;
    Vec y = x;
    for (int k = 0; k < d; ++k) y[k] += h * dir[k] / n;
    y = chain.domain.clamp(std::move(y));
    const double step = norm2(x, y);
    if (step <= 0.0) continue;
    est.dv = std::max(est.dv, std::abs(value(y) - value(x)) / step);
  }
  if (chain.exact_edf2) {
    est.edf2 = *chain.exact_edf2;
    est.edf2_closed_form = true;
  } else {
    double sum = 0.0, sumsq = 0.0;
    for (std::int64_t i = 0; i < probes; ++i) {
      Vec x = chain.domain.sample_uniform(rng);
      SampledMap map = chain.sample_map(rng);
      const double v = map.lipschitz_fn(x);
      sum += v * v;
      sumsq += v * v * v * v;
    }
    const double p = static_cast<double>(probes);
    est.edf2 = sum / p;
    est.edf2_se = std::sqrt(std::max(sumsq / p - est.edf2 * est.edf2, 0.0) / p);
  }
  est.ed2f = chain.d2f_bound.value_or(0.0);
  est.d2f_caveat = chain.piecewise_df;
  return est;
}

// ---------------------------------------------------------------------------
// Independent oracle for the space-discounted reward
// V*(x) = E_x[ sum_k U(X_k) prod_{l<=k} Df_l(X_{l-1}) ], truncated at the
// horizon with a geometric tail estimate from the surviving product mass.

struct VstarResult {
  double estimate = 0.0;
  double std_error = 0.0;
  double tail_bound = 0.0;
  bool converged = true;
};

inline VstarResult vstar_oracle(const ChainModel& chain, const UFunction& u, const Vec& x0,
                                int horizon, int paths, SplitRng& rng) {
  chain.domain.require(x0);
  if (horizon < 2 || paths < 1) throw std::invalid_argument("vstar_oracle: bad horizon/paths");
  double sum = 0.0, sumsq = 0.0;
  double prod_half = 0.0, prod_end = 0.0;
  double sup_u_seen = 0.0;
  const int half = horizon / 2;
  for (int p = 0; p < paths; ++p) {
    Vec x = x0;
    double prod = 1.0;
    double total = u(x);
    sup_u_seen = std::max(sup_u_seen, u(x));
    for (int k = 1; k <= horizon; ++k) {
      SampledMap map = chain.sample_map(rng);
      prod *= map.lipschitz_fn(x);
      if (prod == 0.0) break;
      x = map.apply_fn(x);
      const double ux = u(x);
      sup_u_seen = std::max(sup_u_seen, ux);
      total += ux * prod;
      if (k == half) prod_half += prod;
    }
    prod_end += prod;
    sum += total;
    sumsq += total * total;
  }
  const double n = static_cast<double>(paths);
  VstarResult res;
  res.estimate = sum / n;
  res.std_error = std::sqrt(std::max(sumsq / n - res.estimate * res.estimate, 0.0) / n);
  const double pe = prod_end / n;
  const double ph = prod_half / n;
  if (pe <= 0.0) {
    res.tail_bound = 0.0;
  } else if (ph > 0.0 && pe < ph) {
    const double q = std::pow(pe / ph, 1.0 / static_cast<double>(horizon - half));
    res.tail_bound = sup_u_seen * pe * q / (1.0 - q);
  } else {
    res.tail_bound = std::numeric_limits<double>::infinity();
  }
  res.converged = res.tail_bound <= std::max(res.std_error, 1e-12);
  return res;
}

}  // namespace dcdc

#endif  // DCDC_CERTIFIER_HPP
