#ifndef DCDC_IO_HPP
#define DCDC_IO_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dcdc/bounds.hpp"
#include "dcdc/certifier.hpp"
#include "dcdc/net.hpp"
#include "dcdc/trainer.hpp"

namespace dcdc {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("parse error in " + path + ": " + e.what());
  }
  return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

// ---------------------------------------------------------------------------
// Network checkpoints: {spec, theta, seed, training-config-hash}. nlohmann
// prints doubles with shortest round-trip precision, so load/save is lossless.

inline json checkpoint_to_json(const ValueNet& net, std::uint64_t seed,
                               const std::string& config_hash) {
  json j;
  j["format"] = "dcdc-checkpoint-v1";
  j["spec"]["input_dim"] = net.spec().input_dim;
  j["spec"]["layer_widths"] = net.spec().layer_widths;
  j["spec"]["output_offset"] = net.spec().output_offset;
  j["theta"] = net.params();
  j["seed"] = seed;
  j["training_config_hash"] = config_hash;
  return j;
}

struct Checkpoint {
  ValueNet net;
  std::uint64_t seed = 0;
  std::string config_hash;
};

inline Checkpoint checkpoint_from_json(const json& j) {
  if (j.value("format", "") != "dcdc-checkpoint-v1")
    throw ConfigError("not a dcdc checkpoint");
  NetSpec spec;
  spec.input_dim = j.at("spec").at("input_dim").get<int>();
  spec.layer_widths = j.at("spec").at("layer_widths").get<std::vector<int>>();
  spec.output_offset = j.at("spec").at("output_offset").get<double>();
  return Checkpoint{ValueNet(spec, j.at("theta").get<std::vector<double>>()),
                    j.at("seed").get<std::uint64_t>(), j.value("training_config_hash", "")};
}

// ---------------------------------------------------------------------------
// Certificates.

inline json stats_to_json(const ResidualStats& s) {
  return json{{"max", s.max}, {"mean", s.mean}, {"std", s.std_dev}};
}

inline json certificate_to_json(const Certificate& c, bool include_points = false) {
  json j;
  j["format"] = "dcdc-certificate-v1";
  j["valid"] = c.valid;
  j["valid_pointwise_u"] = c.valid_pointwise_u;
  j["u_tilde"] = c.u_tilde;
  j["inf_v"] = c.inf_v;
  j["sup_v"] = c.sup_v;
  j["covering_radius"] = c.covering_radius;
  j["residual_no_u"] = stats_to_json(c.stats_no_u);    // K_hat V - V (without the +U term)
  j["residual_with_u"] = stats_to_json(c.stats_with_u);  // K_hat V - V + U
  j["eps"] = c.eps;
  j["delta"] = c.delta;
  j["M"] = c.M;
  j["N"] = c.N;
  j["seed"] = c.seed;
  j["point_source"] = c.point_source;
  j["chain_id"] = c.chain_id;
  j["net_id"] = c.net_id;
  j["df_smoothness_caveat"] = c.df_smoothness_caveat;
  if (include_points) {
    j["points"] = c.points;
    j["v_values"] = c.v_values;
    j["residuals_no_u"] = c.residual_no_u;
  }
  return j;
}

inline Certificate certificate_from_json(const json& j) {
  if (j.value("format", "") != "dcdc-certificate-v1")
    throw ConfigError("not a dcdc certificate");
  Certificate c;
  c.valid = j.at("valid").get<bool>();
  c.valid_pointwise_u = j.at("valid_pointwise_u").get<bool>();
  c.u_tilde = j.at("u_tilde").get<double>();
  c.inf_v = j.at("inf_v").get<double>();
  c.sup_v = j.at("sup_v").get<double>();
  c.covering_radius = j.at("covering_radius").get<double>();
  auto stats = [](const json& s) {
    return ResidualStats{s.at("max").get<double>(), s.at("mean").get<double>(),
                         s.at("std").get<double>()};
  };
  c.stats_no_u = stats(j.at("residual_no_u"));
  c.stats_with_u = stats(j.at("residual_with_u"));
  c.eps = j.at("eps").get<double>();
  c.delta = j.at("delta").get<double>();
  c.M = j.at("M").get<std::int64_t>();
  c.N = j.at("N").get<std::int64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.point_source = j.at("point_source").get<std::string>();
  c.chain_id = j.at("chain_id").get<std::string>();
  c.net_id = j.at("net_id").get<std::string>();
  c.df_smoothness_caveat = j.at("df_smoothness_caveat").get<bool>();
  if (j.contains("points")) {
    c.points = j.at("points").get<std::vector<Vec>>();
    c.v_values = j.at("v_values").get<std::vector<double>>();
    c.residual_no_u = j.at("residuals_no_u").get<std::vector<double>>();
  }
  return c;
}

// Surface dump for plotting: coordinates, V, residual.
inline std::string surface_csv(const Certificate& c) {
  std::ostringstream out;
  out.precision(17);
  const int d = c.points.empty() ? 0 : static_cast<int>(c.points.front().size());
  for (int k = 0; k < d; ++k) out << "x" << (k + 1) << ",";
  out << "v,residual\n";
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    for (int k = 0; k < d; ++k) out << c.points[i][static_cast<std::size_t>(k)] << ",";
    out << c.v_values[i] << "," << c.residual_no_u[i] << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Bounds.

inline json bound_to_json(const ExponentialBound& b) {
  json j;
  j["format"] = "dcdc-bound-v1";
  j["kind"] = "exponential";
  j["rate"] = b.rate;
  j["C"] = b.pre_multiplier;
  j["C_se"] = b.pre_multiplier_se;
  j["numerator"] = b.numerator;
  j["u_eff"] = b.u_eff;
  j["inf_v"] = b.inf_v;
  j["sup_v"] = b.sup_v;
  j["inf_v_wide"] = b.inf_v_wide;
  j["sup_v_wide"] = b.sup_v_wide;
  j["interpolant_fallback"] = b.interpolant_fallback;
  j["initial_distribution"] = b.initial_distribution;
  return j;
}

inline json bound_to_json(const PolynomialBound& b) {
  json j;
  j["format"] = "dcdc-bound-v1";
  j["kind"] = "polynomial";
  j["order"] = b.order;
  j["numerator"] = b.numerator;
  j["numerator_se"] = b.numerator_se;
  j["inf_v0"] = b.inf_v0;
  j["interpolant_fallback"] = b.interpolant_fallback;
  j["initial_distribution"] = b.initial_distribution;
  return j;
}

inline std::function<double(double)> bound_evaluator_from_json(const json& j) {
  if (j.value("format", "") != "dcdc-bound-v1") throw ConfigError("not a dcdc bound");
  if (j.at("kind") == "exponential") {
    const double c = j.at("C").get<double>();
    const double r = j.at("rate").get<double>();
    return [c, r](double n) { return c * std::pow(r, n); };
  }
  PolynomialBound b;
  b.order = j.at("order").get<int>();
  b.numerator = j.at("numerator").get<double>();
  b.inf_v0 = j.at("inf_v0").get<double>();
  return [b](double n) { return b.evaluate(n); };
}

inline std::string bound_report_text(const BoundReport& rep) {
  std::ostringstream out;
  out << "      n            bound\n";
  for (const auto& row : rep.rows) {
    out << "  " << std::setw(9) << static_cast<long long>(row.n) << "  " << std::scientific
        << std::setprecision(6) << row.value << std::defaultfloat << "\n";
  }
  for (const auto& [th, n] : rep.crossings) {
    if (n < 0)
      out << "  bound never drops below " << th << "\n";
    else
      out << "  bound < " << th << " first at n = " << static_cast<long long>(n) << "\n";
  }
  return out.str();
}

// Training log CSV: iteration, empirical loss, probe statistics interleaved.
inline std::string train_log_csv(const TrainResult& result) {
  std::ostringstream out;
  out.precision(12);
  out << "kind,iteration,loss,max_residual,mean_residual,std_residual\n";
  for (const auto& rec : result.loss_log)
    out << "loss," << rec.iteration << "," << rec.loss << ",,,\n";
  for (const auto& rec : result.probe.history)
    out << "probe," << rec.iteration << ",," << rec.max_residual << "," << rec.mean_residual
        << "," << rec.std_residual << "\n";
  return out.str();
}

}  // namespace dcdc

#endif  // DCDC_IO_HPP
