// dcdc: train, certify, and convert contractive-drift certificates into
// explicit Wasserstein convergence bounds for the built-in Markov chains.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "dcdc/reproduce.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitCertFail = 4;

using dcdc::ExperimentConfig;
using dcdc::json;

ExperimentConfig load_cfg(const std::string& path, const std::string& out,
                          std::int64_t seed_override, int threads) {
  json raw = dcdc::load_json_file(path);
  if (seed_override >= 0) raw["seed"] = static_cast<std::uint64_t>(seed_override);
  if (!out.empty()) raw["out"] = out;
  ExperimentConfig cfg = dcdc::parse_experiment_config(raw);
  cfg.cert_cfg.threads = threads;
  cfg.bound_cfg.threads = threads;
  return cfg;
}

dcdc::Checkpoint load_ckpt(const std::string& path) {
  return dcdc::checkpoint_from_json(dcdc::load_json_file(path));
}

int cmd_train(const ExperimentConfig& cfg) {
  dcdc::TrainOutput out = dcdc::run_train(cfg);
  std::printf("trained %lld iterations in %.1fs (early_stop=%d)\n",
              static_cast<long long>(out.result.iterations_run), out.seconds,
              out.result.early_stopped ? 1 : 0);
  std::printf("checkpoint: %s\n", out.checkpoint_path.c_str());
  return kExitOk;
}

int cmd_certify(const ExperimentConfig& cfg, const std::string& ckpt_path) {
  dcdc::Checkpoint ckpt;
  if (!cfg.analytic_v) ckpt = load_ckpt(ckpt_path);
  dcdc::CertifyOutput out = dcdc::run_certify(cfg, ckpt);
  std::printf("u_tilde=%.6g eps=%.3g valid=%d pointwise=%d\n", out.cert.u_tilde, out.cert.eps,
              out.cert.valid ? 1 : 0, out.cert.valid_pointwise_u ? 1 : 0);
  std::printf("certificate: %s\n", out.certificate_path.c_str());
  if (!out.cert.valid && !out.cert.valid_pointwise_u) return kExitCertFail;
  return kExitOk;
}

int cmd_bound(const ExperimentConfig& cfg, const std::string& cert_path,
              const std::string& ckpt_path) {
  dcdc::Certificate cert = dcdc::certificate_from_json(dcdc::load_json_file(cert_path));
  dcdc::Checkpoint ckpt;
  dcdc::Checkpoint* pk = nullptr;
  if (!cfg.analytic_v) {
    ckpt = load_ckpt(ckpt_path);
    const std::string net_id =
        "net:" + dcdc::fnv1a_hex(json(ckpt.net.params()).dump());
    if (cert.net_id != net_id)
      throw dcdc::ConfigError("bound: certificate was issued for a different network (" +
                              cert.net_id + " vs " + net_id + ")");
    pk = &ckpt;
  }
  if (cert.chain_id != cfg.chain_id())
    throw dcdc::ConfigError("bound: certificate chain mismatch (" + cert.chain_id + " vs " +
                            cfg.chain_id() + ")");
  dcdc::BoundOutput out = dcdc::run_bound(cfg, cert, pk);
  std::printf("W(X_n, X_inf) <= %.6g * %.8g^n\n", out.bound.pre_multiplier, out.bound.rate);
  std::printf("bound: %s\n", out.bound_path.c_str());
  return kExitOk;
}

int cmd_reproduce(const std::string& name, const std::string& out, std::int64_t seed_override,
                  int threads) {
  json overrides = json::object();
  if (!out.empty()) overrides["out"] = out;
  if (seed_override >= 0) overrides["seed"] = static_cast<std::uint64_t>(seed_override);
  dcdc::ReproduceOutput rep = dcdc::reproduce_experiment(name, overrides, threads);
  for (const auto& c : rep.summary.checks)
    std::printf("[%s] %s = %.6g %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value,
                c.detail.c_str());
  std::printf("%s: %s\n", name.c_str(), rep.summary.all_pass() ? "all checks passed" : "FAILED");
  return rep.summary.all_pass() ? kExitOk : kExitCertFail;
}

int cmd_report(const std::string& bound_path) {
  const json j = dcdc::load_json_file(bound_path);
  const auto eval = dcdc::bound_evaluator_from_json(j);
  std::vector<double> horizon{0, 1, 10, 100, 1000, 10000, 100000};
  const dcdc::BoundReport rep = dcdc::bound_report(eval, horizon);
  std::fputs(dcdc::bound_report_text(rep).c_str(), stdout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep contractive drift calculator"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, cert_path, out_dir, experiment, bound_path;
  std::int64_t seed_override = -1;
  int threads = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", config_path, "experiment config JSON")->required();
    sub->add_option("--out", out_dir, "output directory override");
    sub->add_option("--seed", seed_override, "seed override");
    sub->add_option("--threads", threads, "worker threads (0 = auto)");
  };

  CLI::App* train = app.add_subcommand("train", "train a value network against the drift equation");
  add_common(train, true);

  CLI::App* certify = app.add_subcommand("certify", "statistically validate a trained solution");
  add_common(certify, true);
  certify->add_option("--checkpoint", ckpt_path, "checkpoint JSON from train");

  CLI::App* bound = app.add_subcommand("bound", "convert a certificate into a convergence bound");
  add_common(bound, true);
  bound->add_option("--certificate", cert_path, "certificate JSON from certify")->required();
  bound->add_option("--checkpoint", ckpt_path, "checkpoint JSON from train");

  CLI::App* reproduce =
      app.add_subcommand("reproduce", "run a built-in experiment end to end and check targets");
  reproduce->add_option("experiment", experiment, "quad1d | logistic | tandem | walk")->required();
  add_common(reproduce, false);

  CLI::App* report = app.add_subcommand("report", "print decay horizons for a stored bound");
  report->add_option("--bound", bound_path, "bound JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(load_cfg(config_path, out_dir, seed_override, threads));
    if (certify->parsed()) {
      ExperimentConfig cfg = load_cfg(config_path, out_dir, seed_override, threads);
      if (!cfg.analytic_v && ckpt_path.empty())
        throw dcdc::ConfigError("certify: --checkpoint required unless analytic_v is set");
      return cmd_certify(cfg, ckpt_path);
    }
    if (bound->parsed()) {
      ExperimentConfig cfg = load_cfg(config_path, out_dir, seed_override, threads);
      if (!cfg.analytic_v && ckpt_path.empty())
        throw dcdc::ConfigError("bound: --checkpoint required unless analytic_v is set");
      return cmd_bound(cfg, cert_path, ckpt_path);
    }
    if (reproduce->parsed()) return cmd_reproduce(experiment, out_dir, seed_override, threads);
    if (report->parsed()) return cmd_report(bound_path);
  } catch (const dcdc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const dcdc::TrainingDiverged& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return kExitDiverged;
  } catch (const dcdc::CertificateInvalid& e) {
    std::fprintf(stderr, "certification failure: %s\n", e.what());
    return kExitCertFail;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
