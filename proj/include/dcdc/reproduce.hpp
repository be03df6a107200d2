#ifndef DCDC_REPRODUCE_HPP
#define DCDC_REPRODUCE_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dcdc/pipeline.hpp"

namespace dcdc {

namespace detail {

inline void add_check(ReproduceSummary& s, const std::string& name, bool pass, double value,
                      const std::string& detail = {}) {
  s.checks.push_back({name, pass, value, detail});
}

// Synchronous-coupling Wasserstein estimate for quad_sgd_1d: two chains fed
// the same Z contract exactly by (1-alpha) per step, so
// W(X_n, X_inf) <= (1-alpha)^n E|X0 - X0_inf|.
struct CouplingEstimate {
  double mean_d0 = 0.0;
  double se_d0 = 0.0;
};

inline CouplingEstimate quad_coupling_estimate(const ChainModel& chain, SplitRng& rng,
                                               int pairs = 20000, int burn_in = 300) {
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const Vec x0 = chain.sample_reference(rng);
    Vec y = chain.sample_reference(rng);
    for (int k = 0; k < burn_in; ++k) y = chain.sample_map(rng).apply_fn(y);
    const double d = std::abs(x0[0] - y[0]);
    sum += d;
    sumsq += d * d;
  }
  CouplingEstimate est;
  const double n = pairs;
  est.mean_d0 = sum / n;
  est.se_d0 = std::sqrt(std::max(sumsq / n - est.mean_d0 * est.mean_d0, 0.0) / n);
  return est;
}

inline bool coupling_dominated(double c, double r, const CouplingEstimate& est, double alpha,
                               int n_max = 100) {
  for (int n = 0; n <= n_max; ++n) {
    const double bound = c * std::pow(r, n);
    const double w_est = std::pow(1.0 - alpha, n) * (est.mean_d0 - 3.0 * est.se_d0);
    if (bound < w_est) return false;
  }
  return true;
}

}  // namespace detail

struct ReproduceOutput {
  ReproduceSummary summary;
  ExperimentConfig cfg;
  TrainOutput train_out;
  CertifyOutput cert_out;
};

// Runs the full train -> certify -> bound pipeline for one built-in
// experiment and evaluates the per-experiment targets.
inline ReproduceOutput reproduce_experiment(const std::string& name, json overrides = {},
                                            int threads = 0) {
  json raw = builtin_experiment_config(name);
  if (!overrides.empty()) raw.merge_patch(overrides);
  ExperimentConfig cfg = parse_experiment_config(raw);
  cfg.cert_cfg.threads = threads;
  cfg.bound_cfg.threads = threads;

  ReproduceSummary summary;
  summary.experiment = name;

  TrainOutput tr = run_train(cfg);
  Checkpoint ckpt{tr.result.net, cfg.seed, cfg.config_hash()};
  CertifyOutput ce = run_certify(cfg, ckpt);
  const Certificate& cert = ce.cert;
  summary.extra["train_seconds"] = tr.seconds;
  summary.extra["iterations_run"] = tr.result.iterations_run;
  summary.extra["u_tilde"] = cert.u_tilde;
  summary.extra["max_residual_no_u"] = cert.stats_no_u.max;
  summary.extra["sup_v"] = cert.sup_v;
  summary.extra["inf_v"] = cert.inf_v;

  if (name == "quad1d") {
    const double alpha = cfg.raw.at("chain").value("alpha", 0.1);
    const double target = cfg.train_cfg.u.inf_value / alpha;
    double max_rel_err = 0.0, max_abs_resid = 0.0;
    for (double v : cert.v_values) max_rel_err = std::max(max_rel_err, std::abs(v - target) / target);
    for (double r : cert.residual_with_u) max_abs_resid = std::max(max_abs_resid, std::abs(r));
    detail::add_check(summary, "value_within_10pct_of_analytic", max_rel_err <= 0.10, max_rel_err);
    detail::add_check(summary, "sup_residual_le_0.02", max_abs_resid <= 0.02, max_abs_resid);

    // Analytic-V plug-in: r must be exactly 1 - u/ (u/alpha) = 1 - alpha.
    ExperimentConfig acfg = cfg;
    acfg.analytic_v = true;
    acfg.out_dir = cfg.out_dir + "/analytic";
    CertifyOutput ace = run_certify(acfg, ckpt);
    BoundOutput abd = run_bound(acfg, ace.cert, nullptr);
    detail::add_check(summary, "analytic_rate_exact", abd.bound.rate == 1.0 - alpha,
                      abd.bound.rate);

    const ChainModel chain = build_chain(cfg);
    SplitRng crng = SplitRng(cfg.seed).split(0xC0);
    const auto coup = detail::quad_coupling_estimate(chain, crng);
    summary.extra["coupling_mean_d0"] = coup.mean_d0;
    const bool dominated =
        detail::coupling_dominated(abd.bound.pre_multiplier, abd.bound.rate, coup, alpha);
    detail::add_check(summary, "coupling_dominated", dominated, coup.mean_d0);

    BoundOutput bd = run_bound(cfg, cert, &ckpt);
    summary.extra["trained_rate"] = bd.bound.rate;
    summary.extra["trained_C"] = bd.bound.pre_multiplier;
    detail::add_check(summary, "runtime_le_600s", tr.seconds <= 600.0, tr.seconds);
  } else if (name == "logistic") {
    detail::add_check(summary, "max_residual_le_-0.08", cert.stats_no_u.max <= -0.08,
                      cert.stats_no_u.max);
    BoundOutput bd = run_bound(cfg, cert, &ckpt);
    summary.extra["rate"] = bd.bound.rate;
    summary.extra["C"] = bd.bound.pre_multiplier;
    detail::add_check(summary, "rate_in_window",
                      bd.bound.rate >= 1.0 - 1.6e-3 && bd.bound.rate <= 1.0 - 0.7e-3,
                      bd.bound.rate);
    detail::add_check(summary, "C_in_[6,11]",
                      bd.bound.pre_multiplier >= 6.0 && bd.bound.pre_multiplier <= 11.0,
                      bd.bound.pre_multiplier);
    detail::add_check(summary, "runtime_le_1800s", tr.seconds <= 1800.0, tr.seconds);

    // Empirical absorption check for the training box: long runs started on
    // the boundary, counting steps the raw map would have left the box.
    const ChainModel chain = build_chain(cfg);
    SplitRng arng = SplitRng(cfg.seed).split(0xAB);
    const double half = cfg.raw.at("chain").value("box_half", 3.0);
    long clip_events = 0;
    for (int s = 0; s < 4; ++s) {
      Vec x{s % 2 == 0 ? half : -half, s < 2 ? half : -half};
      for (int k = 0; k < 250000; ++k) {
        x = chain.sample_map(arng).apply_fn(x);
        if (std::abs(x[0]) >= half || std::abs(x[1]) >= half) ++clip_events;
      }
    }
    summary.extra["boundary_run_steps"] = 1000000;
    summary.extra["boundary_clip_events"] = clip_events;
  } else if (name == "tandem") {
    BoundOutput bd = run_bound(cfg, cert, &ckpt);
    summary.extra["rate"] = bd.bound.rate;
    summary.extra["C"] = bd.bound.pre_multiplier;
    detail::add_check(summary, "rate_in_window",
                      bd.bound.rate >= 1.0 - 0.023 && bd.bound.rate <= 1.0 - 0.011,
                      bd.bound.rate);
    detail::add_check(summary, "C_in_[4.2,7.2]",
                      bd.bound.pre_multiplier >= 4.2 && bd.bound.pre_multiplier <= 7.2,
                      bd.bound.pre_multiplier);
    const double rel = plane_fit_relative_residual(cert.points, cert.v_values);
    detail::add_check(summary, "plane_fit_rel_residual_le_15pct", rel <= 0.15, rel);
    detail::add_check(summary, "residual_std_le_0.02", cert.stats_no_u.std_dev <= 0.02,
                      cert.stats_no_u.std_dev);
  } else if (name == "walk") {
    double vmax = cert.v_values.front();
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < cert.v_values.size(); ++i) {
      if (cert.v_values[i] > vmax) {
        vmax = cert.v_values[i];
        argmax = i;
      }
    }
    const double xmax = cert.points[argmax][0];
    double sym_defect = 0.0;
    const std::size_t m = cert.v_values.size();
    for (std::size_t i = 0; i < m / 2; ++i)
      sym_defect = std::max(sym_defect, std::abs(cert.v_values[i] - cert.v_values[m - 1 - i]));
    detail::add_check(summary, "max_in_[0.7,1.3]", vmax >= 0.7 && vmax <= 1.3, vmax);
    detail::add_check(summary, "argmax_within_0.15", std::abs(xmax) <= 0.15, xmax);
    detail::add_check(summary, "symmetry_defect_le_10pct", sym_defect <= 0.1 * vmax, sym_defect);
    summary.extra["v_max"] = vmax;
    summary.extra["argmax"] = xmax;
    BoundOutput bd = run_bound(cfg, cert, &ckpt);
    summary.extra["rate"] = bd.bound.rate;
    summary.extra["C"] = bd.bound.pre_multiplier;
  } else {
    throw ConfigError("unknown experiment: " + name);
  }

  write_text_file(cfg.out_dir + "/summary.json", summary.to_json().dump(2) + "\n");
  return ReproduceOutput{std::move(summary), std::move(cfg), std::move(tr), std::move(ce)};
}

}  // namespace dcdc

#endif  // DCDC_REPRODUCE_HPP
