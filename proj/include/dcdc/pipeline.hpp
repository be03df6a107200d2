#ifndef DCDC_PIPELINE_HPP
#define DCDC_PIPELINE_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dcdc/chains.hpp"
#include "dcdc/io.hpp"

namespace dcdc {

// ---------------------------------------------------------------------------
// Experiment configuration: one JSON file with sections chain/net/train/cert/
// bound plus a mandatory seed. See configs/*.json for the documented schema.

struct ExperimentConfig {
  json raw;
  std::string chain_name;
  std::uint64_t seed = 0;
  std::string out_dir;
  NetSpec net_spec;
  TrainConfig train_cfg;
  CertConfig cert_cfg;
  BoundConfig bound_cfg;
  std::optional<std::string> dataset_csv;  // logistic only
  bool analytic_v = false;  // use the known closed-form solution instead of a net

  std::string config_hash() const { return fnv1a_hex(raw.dump()); }
  std::string chain_id() const { return chain_name + ":" + fnv1a_hex(raw.value("chain", json::object()).dump()); }
};

inline ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  try {
    if (!j.contains("seed")) throw ConfigError("config: seed is mandatory");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.out_dir = j.value("out", "runs/out");
    const json& chain = j.at("chain");
    cfg.chain_name = chain.at("name").get<std::string>();
    if (chain.contains("dataset_csv")) cfg.dataset_csv = chain.at("dataset_csv").get<std::string>();

    const json& net = j.at("net");
    cfg.net_spec.layer_widths = net.at("widths").get<std::vector<int>>();
    cfg.net_spec.output_offset = net.value("output_offset", 0.01);

    const json& tr = j.at("train");
    cfg.train_cfg.iterations = tr.value("iterations", std::int64_t{1'000'000});
    cfg.train_cfg.batch_size = tr.value("batch_size", 32);
    cfg.train_cfg.u = constant_u(tr.value("u_const", 0.1));
    cfg.train_cfg.probe_every = tr.value("probe_every", std::int64_t{10'000});
    cfg.train_cfg.probe_points = tr.value("probe_points", 512);
    cfg.train_cfg.probe_maps = tr.value("probe_maps", 128);
    cfg.train_cfg.log_every = tr.value("log_every", std::int64_t{100});
    cfg.train_cfg.checkpoint_every = tr.value("checkpoint_every", std::int64_t{0});
    cfg.train_cfg.lr = tr.value("lr", 1e-3);
    cfg.train_cfg.final_lr = tr.value("final_lr", cfg.train_cfg.lr);
    cfg.train_cfg.decay_start_frac = tr.value("decay_start_frac", 0.5);
    cfg.train_cfg.early_stop_consecutive = tr.value("early_stop_consecutive", 5);
    cfg.train_cfg.seed = cfg.seed;

    const json& ce = j.at("cert");
    cfg.cert_cfg.M = ce.value("M", std::int64_t{4096});
    cfg.cert_cfg.N = ce.value("N", std::int64_t{1000});
    cfg.cert_cfg.eps = ce.value("eps", 0.01);
    cfg.cert_cfg.delta = ce.value("delta", 0.05);
    const std::string src = ce.value("source", "auto");
    cfg.cert_cfg.source = src == "lattice"   ? PointSource::kLattice
                          : src == "uniform" ? PointSource::kUniform
                                             : PointSource::kAuto;
    cfg.cert_cfg.seed = SplitRng(cfg.seed).split(1).next_u64();

    const json& bd = j.at("bound");
    if (bd.contains("x0") && bd.at("x0").is_array())
      cfg.bound_cfg.x0 = InitialDistribution::at(bd.at("x0").get<Vec>());
    else
      cfg.bound_cfg.x0 = InitialDistribution::reference();
    cfg.bound_cfg.mc_paths = bd.value("mc_paths", std::int64_t{100'000});
    cfg.bound_cfg.seed = SplitRng(cfg.seed).split(2).next_u64();
    cfg.analytic_v = j.value("analytic_v", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(load_json_file(path));
}

// Builds the configured chain. The logistic dataset is regenerated from the
// seed unless a CSV path is given.
inline ChainModel build_chain(const ExperimentConfig& cfg) {
  const json& c = cfg.raw.at("chain");
  const std::string& name = cfg.chain_name;
  if (name == "quad_sgd_1d") {
    return quad_sgd_1d(c.value("alpha", 0.1), c.value("z_lo", -0.5), c.value("z_hi", 0.5));
  }
  if (name == "logistic_sgd") {
    std::shared_ptr<const LogisticDataset> ds;
    if (cfg.dataset_csv) {
      ds = std::make_shared<const LogisticDataset>(load_logistic_dataset_csv(*cfg.dataset_csv));
    } else {
      SplitRng rng = SplitRng(cfg.seed).split(0xDA7AULL);
      ds = std::make_shared<const LogisticDataset>(
          generate_logistic_dataset(c.value("m", 100), rng));
    }
    return logistic_sgd(ds, c.value("lambda", 1.0), c.value("alpha", 0.1), c.value("beta", 10),
                        c.value("box_half", 3.0));
  }
  if (name == "tandem_fluid") {
    return tandem_fluid(c.value("c", 1.0), c.value("r1", 1.1), c.value("r2", 1.0),
                        c.value("t_max", 0.2), c.value("z_max", 0.1));
  }
  if (name == "regulated_walk") {
    return regulated_walk(c.value("z_half", 1.0 / 3.0));
  }
  throw ConfigError("unknown chain: " + name);
}

// Closed-form CDE solutions used by analytic-V mode (quad_sgd_1d only).
inline std::optional<ValueFn> analytic_solution(const ExperimentConfig& cfg) {
  if (cfg.chain_name != "quad_sgd_1d") return std::nullopt;
  const double alpha = cfg.raw.at("chain").value("alpha", 0.1);
  const double u = cfg.raw.at("train").value("u_const", 0.1);
  const double v = u / alpha;
  return ValueFn{[v](const Vec&) { return v; }};
}

// ---------------------------------------------------------------------------
// Run-directory pipeline shared by the CLI and the acceptance suite.

struct TrainOutput {
  TrainResult result;
  std::string checkpoint_path;
  double seconds = 0.0;
};

inline std::string run_dir(const ExperimentConfig& cfg) { return cfg.out_dir; }

inline TrainOutput run_train(const ExperimentConfig& cfg) {
  const ChainModel chain = build_chain(cfg);
  NetSpec spec = cfg.net_spec;
  spec.input_dim = chain.domain.dim();
  SplitRng init_rng = SplitRng(cfg.seed).split(3);
  ValueNet net = ValueNet::random_init(spec, init_rng);

  std::filesystem::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir + "/config.json", cfg.raw.dump(2) + "\n");
  const std::string hash = cfg.config_hash();
  const std::string ckpt_path = cfg.out_dir + "/checkpoint.json";

  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result = train(std::move(net), chain, cfg.train_cfg,
                             [&](std::int64_t, const ValueNet& n) {
                               write_text_file(ckpt_path,
                                               checkpoint_to_json(n, cfg.seed, hash).dump() + "\n");
                             });
  const auto t1 = std::chrono::steady_clock::now();

  write_text_file(cfg.out_dir + "/train_log.csv", train_log_csv(result));
  TrainOutput out{std::move(result), ckpt_path,
                  std::chrono::duration<double>(t1 - t0).count()};
  return out;
}

inline ValueFn net_value_fn(std::shared_ptr<const ValueNet> net) {
  return [net](const Vec& x) { return net->forward(x); };
}

struct CertifyOutput {
  Certificate cert;
  std::string certificate_path;
  std::string surface_path;
};

inline CertifyOutput run_certify(const ExperimentConfig& cfg, const Checkpoint& ckpt) {
  const ChainModel chain = build_chain(cfg);
  ValueFn value;
  std::string net_id;
  if (cfg.analytic_v) {
    auto v = analytic_solution(cfg);
    if (!v) throw ConfigError("analytic_v: no closed-form solution for " + cfg.chain_name);
    value = *v;
    net_id = "analytic:" + cfg.chain_name;
  } else {
    value = net_value_fn(std::make_shared<const ValueNet>(ckpt.net));
    net_id = "net:" + fnv1a_hex(json(ckpt.net.params()).dump());
  }
  Certificate cert = certify(value, chain, cfg.train_cfg.u, cfg.cert_cfg, cfg.chain_id(), net_id);

  std::filesystem::create_directories(cfg.out_dir);
  CertifyOutput out{std::move(cert), cfg.out_dir + "/certificate.json",
                    cfg.out_dir + "/surface.csv"};
  json j = certificate_to_json(out.cert);
  j["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  write_text_file(out.certificate_path, j.dump(2) + "\n");
  write_text_file(out.surface_path, surface_csv(out.cert));
  return out;
}

struct BoundOutput {
  ExponentialBound bound;
  std::string bound_path;
};

inline BoundOutput run_bound(const ExperimentConfig& cfg, const Certificate& cert,
                             const Checkpoint* ckpt) {
  const ChainModel chain = build_chain(cfg);
  ValueFn value;
  BoundConfig bcfg = cfg.bound_cfg;
  if (cfg.analytic_v) {
    auto v = analytic_solution(cfg);
    if (!v) throw ConfigError("analytic_v: no closed-form solution for " + cfg.chain_name);
    value = *v;
    bcfg.exact_inf_u = cfg.train_cfg.u.inf_value;
    bcfg.dv = 0.0;
  } else {
    if (!ckpt) throw ConfigError("bound: checkpoint required");
    value = net_value_fn(std::make_shared<const ValueNet>(ckpt->net));
    SplitRng rng = SplitRng(cfg.seed).split(4);
    bcfg.dv = estimate_lipschitz_inputs(value, chain, 2000, rng).dv;
  }
  ExponentialBound bound = exponential_bound(cert, chain, value, bcfg);

  std::filesystem::create_directories(cfg.out_dir);
  BoundOutput out{bound, cfg.out_dir + "/bound.json"};
  write_text_file(out.bound_path, bound_to_json(bound).dump(2) + "\n");

  std::vector<double> horizon{0, 1, 10, 100, 1000, 10000, 100000};
  const BoundReport rep = bound_report(evaluator(bound), horizon);
  write_text_file(cfg.out_dir + "/bound.txt",
                  "W(X_n, X_inf) <= " + std::to_string(bound.pre_multiplier) + " * " +
                      std::to_string(bound.rate) + "^n\n" + bound_report_text(rep));
  return out;
}

// ---------------------------------------------------------------------------
// Built-in experiment configurations reproducing the four studied chains.

inline json builtin_experiment_config(const std::string& name) {
  json j;
  j["seed"] = 20240601;
  j["out"] = "runs/" + name;
  if (name == "quad1d") {
    j["chain"] = {{"name", "quad_sgd_1d"}, {"alpha", 0.1}, {"z_lo", -0.5}, {"z_hi", 0.5}};
    j["net"] = {{"widths", json::array({64})}};
    j["train"] = {{"iterations", 200000}, {"batch_size", 32},   {"u_const", 0.1},
                  {"probe_every", 10000}, {"probe_points", 512}, {"probe_maps", 128},
                  {"lr", 1e-3},           {"final_lr", 1e-5}};
    j["cert"] = {{"M", 512}, {"N", 10000}, {"eps", 0.01}, {"delta", 0.1}, {"source", "lattice"}};
    j["bound"] = {{"x0", "reference"}, {"mc_paths", 100000}};
  } else if (name == "logistic") {
    j["chain"] = {{"name", "logistic_sgd"}, {"lambda", 1.0}, {"alpha", 0.1},
                  {"beta", 10},             {"m", 100},      {"box_half", 3.0}};
    j["net"] = {{"widths", json::array({1000})}};
    j["train"] = {{"iterations", 1000000}, {"batch_size", 8},    {"u_const", 0.1},
                  {"probe_every", 50000},  {"probe_points", 256}, {"probe_maps", 128},
                  {"lr", 1e-3},            {"final_lr", 1e-5},   {"decay_start_frac", 0.4}};
    // eps = 0.02: on the [-3,3]^2 box the CDE solution tops out near 52, so the
    // wider slack keeps the plug-in rate (u_tilde - eps)/sup V in the expected band.
    j["cert"] = {{"M", 4096}, {"N", 16000}, {"eps", 0.02}, {"delta", 0.05}, {"source", "lattice"}};
    j["bound"] = {{"x0", json::array({0.0, 0.0})}, {"mc_paths", 100000}};
  } else if (name == "tandem") {
    j["chain"] = {{"name", "tandem_fluid"}, {"c", 1.0},     {"r1", 1.1},
                  {"r2", 1.0},              {"t_max", 0.2}, {"z_max", 0.1}};
    j["net"] = {{"widths", json::array({40, 40})}};
    j["train"] = {{"iterations", 1000000}, {"batch_size", 8},    {"u_const", 0.1},
                  {"probe_every", 50000},  {"probe_points", 256}, {"probe_maps", 128},
                  {"lr", 1e-3},            {"final_lr", 1e-5},   {"decay_start_frac", 0.4}};
    j["cert"] = {{"M", 9216}, {"N", 120000}, {"eps", 0.01}, {"delta", 0.05}, {"source", "lattice"}};
    j["bound"] = {{"x0", json::array({0.0, 0.0})}, {"mc_paths", 100000}};
  } else if (name == "walk") {
    j["chain"] = {{"name", "regulated_walk"}, {"z_half", 1.0 / 3.0}};
    j["net"] = {{"widths", json::array({128})}};
    j["train"] = {{"iterations", 400000},  {"batch_size", 16},   {"u_const", 0.1},
                  {"probe_every", 20000},  {"probe_points", 512}, {"probe_maps", 128},
                  {"lr", 1e-3},            {"final_lr", 1e-5},   {"decay_start_frac", 0.4}};
    j["cert"] = {{"M", 512}, {"N", 40000}, {"eps", 0.01}, {"delta", 0.05}, {"source", "lattice"}};
    j["bound"] = {{"x0", json::array({0.0})}, {"mc_paths", 100000}};
  } else {
    throw ConfigError("unknown experiment: " + name);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Reproduction targets and the end-to-end summary.

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

struct ReproduceSummary {
  std::string experiment;
  std::vector<CheckResult> checks;
  json extra;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  json to_json() const {
    json j;
    j["experiment"] = experiment;
    j["all_pass"] = all_pass();
    j["checks"] = json::array();
    for (const auto& c : checks)
      j["checks"].push_back(
          {{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"detail", c.detail}});
    j["extra"] = extra;
    return j;
  }
};

// Least-squares plane fit over the 2-D surface; returns relative L2 residual.
inline double plane_fit_relative_residual(const std::vector<Vec>& pts,
                                          const std::vector<double>& v) {
  // Normal equations for v ~ a + b1 x1 + b2 x2.
  double s[3][3] = {{0}}, rhs[3] = {0};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double row[3] = {1.0, pts[i][0], pts[i][1]};
    for (int a = 0; a < 3; ++a) {
      rhs[a] += row[a] * v[i];
      for (int b = 0; b < 3; ++b) s[a][b] += row[a] * row[b];
    }
  }
  // Gaussian elimination, 3x3.
  double m[3][4];
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) m[a][b] = s[a][b];
    m[a][3] = rhs[a];
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    std::swap(m[col], m[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int b = col; b < 4; ++b) m[r][b] -= f * m[col][b];
    }
  }
  const double coef[3] = {m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double fit = coef[0] + coef[1] * pts[i][0] + coef[2] * pts[i][1];
    ss_res += (v[i] - fit) * (v[i] - fit);
    ss_tot += v[i] * v[i];
  }
  return std::sqrt(ss_res / ss_tot);
}

}  // namespace dcdc

#endif  // DCDC_PIPELINE_HPP
