#ifndef DCDC_TRAINER_HPP
#define DCDC_TRAINER_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dcdc/adam.hpp"
#include "dcdc/certifier.hpp"
#include "dcdc/chain.hpp"
#include "dcdc/geometry.hpp"
#include "dcdc/net.hpp"
#include "dcdc/rng.hpp"

namespace dcdc {

struct TrainConfig {
  std::int64_t iterations = 1'000'000;
  int batch_size = 32;  // triples averaged per step
  UFunction u = constant_u(0.1);
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 0;  // 0 = only final
  std::int64_t probe_every = 10'000;
  int probe_points = 512;
  int probe_maps = 128;
  std::int64_t log_every = 100;
  double lr = 1e-3;
  double final_lr = 1e-3;          // geometric decay toward this after decay_start
  double decay_start_frac = 0.5;   // fraction of iterations at full lr
  int early_stop_consecutive = 5;  // probes with max residual < 0 before stopping

  void validate() const {
    if (iterations < 1 || batch_size < 1) throw std::invalid_argument("TrainConfig: T >= 1, batch >= 1");
    if (probe_maps < 100) throw std::invalid_argument("TrainConfig: probe_maps >= 100");
    if (!(u.inf_value > 0.0)) throw std::invalid_argument("TrainConfig: U must be bounded away from 0");
  }
};

struct ProbeRecord {
  std::int64_t iteration = 0;
  double max_residual = 0.0;
  double mean_residual = 0.0;
  double std_residual = 0.0;
};

struct ResidualProbe {
  std::vector<Vec> points;
  int maps_per_point = 0;
  std::vector<ProbeRecord> history;  // residual convention: K_hat V - V + U
};

struct LossRecord {
  std::int64_t iteration = 0;
  double loss = 0.0;  // mean of the unbiased product estimator over the window
};

struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(std::int64_t iter, double theta_norm, double last_loss)
      : std::runtime_error(make_message(iter, theta_norm, last_loss)),
        iteration(iter),
        theta_norm(theta_norm),
        last_batch_loss(last_loss) {}
  std::int64_t iteration;
  double theta_norm;
  double last_batch_loss;

 private:
  static std::string make_message(std::int64_t iter, double tn, double ll) {
    std::ostringstream os;
    os << "training diverged at iteration " << iter << " (|theta| = " << tn
       << ", last batch loss = " << ll << ")";
    return os.str();
  }
};

struct TrainResult {
  ValueNet net;
  ResidualProbe probe;
  std::vector<LossRecord> loss_log;
  bool early_stopped = false;
  std::int64_t iterations_run = 0;
};

// Single-triple unbiased gradient estimate of the integrated squared residual:
// 2 [Df1(X0) V(f1(X0)) - V(X0) + U(X0)] [Df-1(X0) V'(f-1(X0)) - V'(X0)].
inline std::vector<double> loss_grad_estimate(const ValueNet& net, const ChainModel& chain,
                                              const UFunction& u, const TransitionTriple& triple) {
  chain.domain.require(triple.x0);
  ValueNet::Workspace ws = net.make_workspace();
  std::vector<double> grad(net.param_count(), 0.0);

  const double v0 = net.forward(triple.x0, ws);
  const double df1 = triple.f1.lipschitz_fn(triple.x0);
  const double v1 = df1 != 0.0 ? net.forward(triple.f1.apply_fn(triple.x0), ws) : 0.0;
  const double scalar = 2.0 * (df1 * v1 - v0 + u(triple.x0));

  const double dfm1 = triple.fm1.lipschitz_fn(triple.x0);
  if (dfm1 != 0.0)
    net.value_and_accumulate_grad(triple.fm1.apply_fn(triple.x0), scalar * dfm1, grad, ws);
  net.value_and_accumulate_grad(triple.x0, -scalar, grad, ws);
  return grad;
}

namespace detail {

inline ResidualProbe make_probe(const ChainModel& chain, const TrainConfig& cfg) {
  ResidualProbe probe;
  probe.points = lattice_points(chain.domain, cfg.probe_points);
  probe.maps_per_point = cfg.probe_maps;
  return probe;
}

inline ProbeRecord run_probe(const ValueNet& net, const ChainModel& chain, const UFunction& u,
                             ResidualProbe& probe, std::int64_t iter, SplitRng probe_rng) {
  std::vector<double> res(probe.points.size());
  ValueNet::Workspace ws = net.make_workspace();
  for (std::size_t i = 0; i < probe.points.size(); ++i) {
    const Vec& x = probe.points[i];
    SplitRng rng = probe_rng.split(i);
    double acc = 0.0;
    for (int k = 0; k < probe.maps_per_point; ++k) {
      SampledMap map = chain.sample_map(rng);
      const double df = map.lipschitz_fn(x);
      if (df != 0.0) acc += df * net.forward(map.apply_fn(x), ws);
    }
    res[i] = acc / probe.maps_per_point - net.forward(x, ws) + u(x);
  }
  const ResidualStats st = residual_stats(res);
  ProbeRecord rec{iter, st.max, st.mean, st.std_dev};
  probe.history.push_back(rec);
  return rec;
}

}  // namespace detail

// Algorithm-1 loop: minimizes the integrated residual of KV = V - U with the
// unbiased product-form gradient, averaged over batch_size triples per step,
// Adam updates, periodic residual probes, and optional checkpoints.
inline TrainResult train(
    ValueNet net, const ChainModel& chain, const TrainConfig& cfg,
    const std::function<void(std::int64_t, const ValueNet&)>& checkpoint_cb = nullptr) {
  cfg.validate();
  const int n_params = net.param_count();
  AdamState adam(static_cast<std::size_t>(n_params), cfg.lr);
  SplitRng root(cfg.seed);

  TrainResult result{std::move(net), detail::make_probe(chain, cfg), {}, false, 0};
  ValueNet& model = result.net;
  ValueNet::Workspace ws = model.make_workspace();
  std::vector<double> grad(static_cast<std::size_t>(n_params));
  std::vector<double> grad_x0(static_cast<std::size_t>(n_params));

  const std::int64_t decay_start =
      static_cast<std::int64_t>(cfg.decay_start_frac * static_cast<double>(cfg.iterations));
  const double decay_ratio = cfg.final_lr / cfg.lr;

  double window_loss = 0.0;
  std::int64_t window_count = 0;
  double last_batch_loss = 0.0;
  int negative_probes = 0;

  for (std::int64_t t = 0; t < cfg.iterations; ++t) {
    SplitRng iter_rng = root.split(static_cast<std::uint64_t>(t) + 1);
    std::fill(grad.begin(), grad.end(), 0.0);
    double batch_loss = 0.0;
    const double inv_b = 1.0 / cfg.batch_size;

    for (int j = 0; j < cfg.batch_size; ++j) {
      SplitRng trng = iter_rng.split(static_cast<std::uint64_t>(j));
      TransitionTriple triple = sample_transition_pair(chain, trng, X0Mode::kReference);

      std::fill(grad_x0.begin(), grad_x0.end(), 0.0);
      const double v0 = model.value_and_accumulate_grad(triple.x0, 1.0, grad_x0, ws);
      const double df1 = triple.f1.lipschitz_fn(triple.x0);
      const double v1 = df1 != 0.0 ? model.forward(triple.f1.apply_fn(triple.x0), ws) : 0.0;
      const double ux = cfg.u(triple.x0);
      const double e1 = df1 * v1 - v0 + ux;
      const double coeff = 2.0 * e1 * inv_b;

      const double dfm1 = triple.fm1.lipschitz_fn(triple.x0);
      double vm1 = 0.0;
      if (dfm1 != 0.0)
        vm1 = model.value_and_accumulate_grad(triple.fm1.apply_fn(triple.x0), coeff * dfm1, grad, ws);
      for (int i = 0; i < n_params; ++i) grad[static_cast<std::size_t>(i)] -= coeff * grad_x0[static_cast<std::size_t>(i)];

      const double e2 = dfm1 * vm1 - v0 + ux;
      batch_loss += e1 * e2 * inv_b;  // unbiased for l(theta)
    }

    if (!std::isfinite(batch_loss)) {
      double tn = 0.0;
      for (double p : model.params()) tn += p * p;
      throw TrainingDiverged(t, std::sqrt(tn), batch_loss);
    }
    last_batch_loss = batch_loss;

    double lr_scale = 1.0;
    if (t >= decay_start && cfg.iterations > decay_start && decay_ratio != 1.0) {
      const double frac = static_cast<double>(t - decay_start) /
                          static_cast<double>(cfg.iterations - decay_start);
      lr_scale = std::pow(decay_ratio, frac);
    }
    adam_step(adam, model.params(), grad, lr_scale);

    window_loss += batch_loss;
    ++window_count;
    result.iterations_run = t + 1;

    if (cfg.log_every > 0 && (t + 1) % cfg.log_every == 0) {
      result.loss_log.push_back({t + 1, window_loss / static_cast<double>(window_count)});
      window_loss = 0.0;
      window_count = 0;
      // Exploding parameters stay finite for a long time before the loss
      // overflows; catch them early.
      double tn = 0.0;
      for (double p : model.params()) tn += p * p;
      tn = std::sqrt(tn);
      if (!(tn < 1e8)) throw TrainingDiverged(t, tn, last_batch_loss);
    }
    if (cfg.checkpoint_every > 0 && (t + 1) % cfg.checkpoint_every == 0 && checkpoint_cb)
      checkpoint_cb(t + 1, model);

    if (cfg.probe_every > 0 && (t + 1) % cfg.probe_every == 0) {
      SplitRng prng = root.split(0xC0FFEEULL).split(static_cast<std::uint64_t>(t) + 1);
      const ProbeRecord rec = detail::run_probe(model, chain, cfg.u, result.probe, t + 1, prng);
      if (!std::isfinite(rec.mean_residual)) {
        double tn = 0.0;
        for (double p : model.params()) tn += p * p;
        throw TrainingDiverged(t, std::sqrt(tn), last_batch_loss);
      }
      negative_probes = rec.max_residual < 0.0 ? negative_probes + 1 : 0;
      if (negative_probes >= cfg.early_stop_consecutive) {
        result.early_stopped = true;
        break;
      }
    }
  }

  // Final probe so the history always ends with the shipped parameters.
  if (result.probe.history.empty() ||
      result.probe.history.back().iteration != result.iterations_run) {
    SplitRng prng = root.split(0xC0FFEEULL).split(static_cast<std::uint64_t>(result.iterations_run));
    detail::run_probe(model, chain, cfg.u, result.probe, result.iterations_run, prng);
  }
  if (checkpoint_cb) checkpoint_cb(result.iterations_run, model);
  return result;
}

// ---------------------------------------------------------------------------
// Chained CDEs for polynomial rates: stage k solves KV_{k+1} = V_{k+1} - U_k
// where U_0 = v0 and U_k is the previous solution clamped below at its
// certified empirical infimum minus eps. A per-stage slack is added to the
// training target so the stage certificate can hold with strict margin.

struct SequenceStage {
  TrainResult training;
  Certificate certificate;  // against the stage base target (no slack)
  double recorded_inf = 0.0;
};

struct SequenceResult {
  std::vector<SequenceStage> stages;
};

inline SequenceResult train_chain_sequence(
    const ChainModel& chain, int m, const UFunction& v0, const TrainConfig& base_cfg,
    const CertConfig& cert_cfg, const std::function<ValueNet(int stage)>& net_factory,
    double slack = 0.0) {
  if (m < 1) throw std::invalid_argument("train_chain_sequence: m >= 1");
  if (slack < 0.0) throw std::invalid_argument("train_chain_sequence: slack >= 0");
  SequenceResult seq;
  UFunction base = v0;
  for (int k = 0; k < m; ++k) {
    TrainConfig cfg = base_cfg;
    cfg.seed = SplitRng(base_cfg.seed).split(static_cast<std::uint64_t>(k)).next_u64();
    if (slack > 0.0) {
      UFunction target;
      const UFunction base_copy = base;
      target.eval = [base_copy, slack](const Vec& x) { return base_copy.eval(x) + slack; };
      target.inf_value = base.inf_value + slack;
      cfg.u = target;
    } else {
      cfg.u = base;
    }

    SequenceStage stage{train(net_factory(k), chain, cfg), {}, 0.0};
    CertConfig ccfg = cert_cfg;
    ccfg.seed = SplitRng(cert_cfg.seed).split(static_cast<std::uint64_t>(k)).next_u64();
    const ValueNet& net = stage.training.net;
    stage.certificate =
        certify([&net](const Vec& x) { return net.forward(x); }, chain, base, ccfg,
                chain.name, "stage-" + std::to_string(k + 1));
    stage.recorded_inf = stage.certificate.inf_v - ccfg.eps;
    if (!(stage.recorded_inf > 0.0))
      throw std::runtime_error("train_chain_sequence: stage " + std::to_string(k + 1) +
                               " certified infimum is not positive");
    seq.stages.push_back(std::move(stage));

    // Next stage target: the solution just trained, clamped below.
    const SequenceStage& done = seq.stages.back();
    auto net_ptr = std::make_shared<ValueNet>(done.training.net);
    const double floor = done.recorded_inf;
    base.eval = [net_ptr, floor](const Vec& x) { return std::max(net_ptr->forward(x), floor); };
    base.inf_value = floor;
  }
  return seq;
}

}  // namespace dcdc

#endif  // DCDC_TRAINER_HPP
