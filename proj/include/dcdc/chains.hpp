#ifndef DCDC_CHAINS_HPP
#define DCDC_CHAINS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcdc/chain.hpp"

namespace dcdc {

// ---------------------------------------------------------------------------
// 1-D SGD on the quadratic E(x-Z)^2/2: f(x) = x - alpha*(x - Z), Df = 1-alpha.
// The box [z_lo, z_hi] is absorbing since f(x) is a convex combination of x
// and Z.
inline ChainModel quad_sgd_1d(double alpha, double z_lo = -0.5, double z_hi = 0.5) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("quad_sgd_1d: alpha in (0,1)");
  ChainModel chain{"quad_sgd_1d", DomainBox({z_lo}, {z_hi}), nullptr};
  const double df = 1.0 - alpha;
  chain.sample_map = [alpha, df, z_lo, z_hi](SplitRng& rng) {
    const double z = rng.uniform(z_lo, z_hi);
    SampledMap m;
    m.apply_fn = [alpha, z](const Vec& x) { return Vec{x[0] - alpha * (x[0] - z)}; };
    m.lipschitz_fn = [df](const Vec&) { return df; };
    return m;
  };
  chain.exact_edf2 = df * df;
  chain.d2f_bound = 0.0;
  return chain;
}

// ---------------------------------------------------------------------------
// Mini-batch SGD for regularized logistic regression on a fixed dataset.

struct LogisticDataset {
  std::vector<std::array<double, 2>> x;
  std::vector<int> y;

  int size() const { return static_cast<int>(x.size()); }
};

// m points uniform on [-1/2,1/2]^2; label Ber(0.9) when the first coordinate
// is the larger one, Ber(0.1) otherwise.
inline LogisticDataset generate_logistic_dataset(int m, SplitRng& rng) {
  LogisticDataset ds;
  ds.x.resize(m);
  ds.y.resize(m);
  for (int i = 0; i < m; ++i) {
    ds.x[i] = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    const double p = ds.x[i][0] > ds.x[i][1] ? 0.9 : 0.1;
    ds.y[i] = rng.uniform01() < p ? 1 : 0;
  }
  return ds;
}

inline void save_logistic_dataset_csv(const LogisticDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "x1,x2,y\n";
  out.precision(17);
  for (int i = 0; i < ds.size(); ++i)
    out << ds.x[i][0] << ',' << ds.x[i][1] << ',' << ds.y[i] << '\n';
}

inline LogisticDataset load_logistic_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  LogisticDataset ds;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::array<double, 3> v{};
    for (int i = 0; i < 3; ++i) {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("bad CSV row: " + line);
      v[i] = std::stod(tok);
    }
    ds.x.push_back({v[0], v[1]});
    ds.y.push_back(static_cast<int>(v[2]));
  }
  return ds;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// f(b) = b(1 - lambda*alpha/m) + (alpha/beta) sum_{i in B} [y_i - sigma(b'x_i)] x_i
// with B a uniform size-beta subset of the dataset. Df(b) is the spectral
// norm of (1-lambda*alpha/m)I - (alpha/beta) sum sigma'(b'x_i) x_i x_i',
// computed via the eigenvalues of the symmetric 2x2 batch matrix.
//
// Training/certification happens on the box [-half, half]^2, much smaller
// than the absorbing ball of radius m/(lambda*sqrt(2)); apply() projects the
// rare boundary overshoot back onto the box so the box is absorbing.
inline ChainModel logistic_sgd(std::shared_ptr<const LogisticDataset> dataset, double lambda,
                               double alpha, int beta, double box_half = 3.0) {
  const int m = dataset->size();
  if (beta < 1 || beta > m) throw std::invalid_argument("logistic_sgd: bad batch size");
  const double shrink = 1.0 - lambda * alpha / m;
  ChainModel chain{"logistic_sgd", DomainBox({-box_half, -box_half}, {box_half, box_half}),
                   nullptr};
  chain.sample_map = [dataset, shrink, alpha, beta, box_half, m](SplitRng& rng) {
    auto batch = std::make_shared<std::vector<int>>(rng.sample_without_replacement(m, beta));
    const double scale = alpha / beta;
    SampledMap map;
    map.apply_fn = [dataset, batch, shrink, scale, box_half](const Vec& b) {
      double g0 = 0.0, g1 = 0.0;
      for (int i : *batch) {
        const auto& xi = dataset->x[i];
        const double r = dataset->y[i] - sigmoid(b[0] * xi[0] + b[1] * xi[1]);
        g0 += r * xi[0];
        g1 += r * xi[1];
      }
      Vec out{shrink * b[0] + scale * g0, shrink * b[1] + scale * g1};
      out[0] = std::min(std::max(out[0], -box_half), box_half);
      out[1] = std::min(std::max(out[1], -box_half), box_half);
      return out;
    };
    map.lipschitz_fn = [dataset, batch, shrink, scale](const Vec& b) {
      // S = scale * sum sigma'(b'x) x x', symmetric PSD 2x2.
      double s00 = 0.0, s01 = 0.0, s11 = 0.0;
      for (int i : *batch) {
        const auto& xi = dataset->x[i];
        const double p = sigmoid(b[0] * xi[0] + b[1] * xi[1]);
        const double w = scale * p * (1.0 - p);
        s00 += w * xi[0] * xi[0];
        s01 += w * xi[0] * xi[1];
        s11 += w * xi[1] * xi[1];
      }
      const double tr = s00 + s11;
      const double det = s00 * s11 - s01 * s01;
      const double disc = std::sqrt(std::max(tr * tr - 4.0 * det, 0.0));
      const double smax = 0.5 * (tr + disc);
      const double smin = 0.5 * (tr - disc);
      return std::max(std::abs(shrink - smin), std::abs(shrink - smax));
    };
    return map;
  };
  chain.exact_edf2 = shrink * shrink;  // Df <= 1 - lambda*alpha/m
  // |Df(b1)-Df(b2)| <= scale * sup|sigma''| * sum ||x_i||^3 * ||b1-b2||.
  double cubes = 0.0;
  for (const auto& xi : dataset->x) {
    const double n = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1]);
    cubes = std::max(cubes, n * n * n);
  }
  constexpr double kSigppMax = 0.09622504486493762;  // sup |sigma''| = 1/(6*sqrt(3))
  chain.d2f_bound = alpha * kSigppMax * cubes;
  return chain;
}

// ---------------------------------------------------------------------------
// Two-station tandem fluid network observed at arrival epochs. Buffer cap c,
// service rates r1 > r2, interarrival T ~ U[0, t_max], arriving fluid
// Z ~ U[0, z_max].
inline ChainModel tandem_fluid(double c, double r1, double r2, double t_max = 0.2,
                               double z_max = 0.1) {
  if (!(r1 > r2 && r2 > 0.0)) throw std::invalid_argument("tandem_fluid: need r1 > r2 > 0");
  ChainModel chain{"tandem_fluid", DomainBox({0.0, 0.0}, {c, c}), nullptr};
  chain.sample_map = [c, r1, r2, t_max, z_max](SplitRng& rng) {
    const double t = rng.uniform(0.0, t_max);
    const double z = rng.uniform(0.0, z_max);
    SampledMap map;
    map.apply_fn = [c, r1, r2, t, z](const Vec& x) {
      const double drain1 = std::max(x[0] - r1 * t, 0.0);
      const double x1 = std::min(drain1 + z, c);
      const double fill2 = std::min(x[1] + (r1 - r2) * std::min(t, x[0] / r1), c);
      const double x2 = std::max(fill2 - r2 * std::max(t - x[0] / r1, 0.0), 0.0);
      return Vec{x1, x2};
    };
    // The infinitesimal ball collapses iff the system empties before the
    // next arrival; non-strict <= as in the model definition.
    map.lipschitz_fn = [r2, t](const Vec& x) {
      return t <= (x[0] + x[1]) / r2 ? 1.0 : 0.0;
    };
    return map;
  };
  chain.exact_edf2 = 1.0;  // indicator <= 1
  chain.piecewise_df = true;
  chain.d2f_bound = 0.0;
  return chain;
}

// ---------------------------------------------------------------------------
// Two-sided regulated random walk on [-1/2, 1/2]: f(x) = clip(x + Z) with
// Z ~ U[-z_half, z_half]. The clip collapses on saturation, so
// Df(x) = I(|x + Z| < 1/2).
inline ChainModel regulated_walk(double z_half = 1.0 / 3.0) {
  ChainModel chain{"regulated_walk", DomainBox({-0.5}, {0.5}), nullptr};
  chain.sample_map = [z_half](SplitRng& rng) {
    const double z = rng.uniform(-z_half, z_half);
    SampledMap map;
    map.apply_fn = [z](const Vec& x) {
      return Vec{std::max(std::min(x[0] + z, 0.5), -0.5)};
    };
    map.lipschitz_fn = [z](const Vec& x) {
      const double y = x[0] + z;
      return (y > -0.5 && y < 0.5) ? 1.0 : 0.0;
    };
    return map;
  };
  chain.exact_edf2 = 1.0;
  chain.piecewise_df = true;
  chain.d2f_bound = 0.0;
  return chain;
}

}  // namespace dcdc

#endif  // DCDC_CHAINS_HPP
