#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dcdc/certifier.hpp"
#include "dcdc/chains.hpp"
#include "dcdc/net.hpp"

using namespace dcdc;

TEST_CASE("empirical_K is exact for deterministic Lipschitz factors") {
  // quad SGD: Df = 1 - alpha always, so K applied to V = 1 gives 1 - alpha
  // with zero variance for any N.
  ChainModel chain = quad_sgd_1d(0.1);
  ValueFn one = [](const Vec&) { return 1.0; };
  SplitRng rng(1);
  CHECK(empirical_K(one, chain, Vec{0.2}, 1, rng) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(empirical_K(one, chain, Vec{-0.4}, 100, rng) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("lattice points cover the box endpoints") {
  DomainBox box({0.0}, {1.0});
  const auto pts = lattice_points(box, 11);
  REQUIRE(pts.size() == 11);
  CHECK(pts.front()[0] == 0.0);
  CHECK(pts.back()[0] == 1.0);
  CHECK(pts[5][0] == doctest::Approx(0.5));
  CHECK(lattice_covering_radius(box, 11) == doctest::Approx(0.05));

  DomainBox box2({0.0, 0.0}, {2.0, 2.0});
  const auto grid = lattice_points(box2, 9);
  REQUIRE(grid.size() == 9);  // 3 x 3
  CHECK(grid.front() == Vec{0.0, 0.0});
  CHECK(grid.back() == Vec{2.0, 2.0});
  // spacing 1.0 per axis -> radius 0.5 * sqrt(2)/... half-diagonal of a cell
  CHECK(lattice_covering_radius(box2, 9) == doctest::Approx(0.5 * std::sqrt(2.0) * 1.0));
}

TEST_CASE("certify accepts the analytic quad solution") {
  ChainModel chain = quad_sgd_1d(0.1);
  ValueFn v = [](const Vec&) { return 1.0; };
  CertConfig cfg;
  cfg.M = 64;
  cfg.N = 2000;
  cfg.eps = 0.01;
  cfg.delta = 0.1;
  cfg.seed = 7;
  cfg.source = PointSource::kLattice;
  Certificate cert = certify(v, chain, constant_u(0.1), cfg, "quad", "analytic");
  CHECK(cert.valid);
  CHECK(cert.u_tilde == doctest::Approx(0.1).epsilon(1e-9));  // deterministic Df
  CHECK(cert.inf_v == 1.0);
  CHECK(cert.sup_v == 1.0);
  CHECK(cert.stats_with_u.max == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(cert.valid_pointwise_u == false);  // residual sits at 0, not below -eps
  CHECK(cert.M == 64);
  CHECK(cert.covering_radius > 0.0);
}

TEST_CASE("certify rejects a non-solution on the regulated walk") {
  // Near the center the walk almost never clips, so any roughly constant V
  // has V - K_hat V ~ 0 < eps there: no certificate.
  ChainModel chain = regulated_walk();
  ValueFn v = [](const Vec&) { return 0.7; };
  CertConfig cfg;
  cfg.M = 33;
  cfg.N = 4000;
  cfg.eps = 0.01;
  cfg.seed = 9;
  cfg.source = PointSource::kLattice;
  Certificate cert = certify(v, chain, constant_u(0.1), cfg, "walk", "const");
  CHECK_FALSE(cert.valid);
}

TEST_CASE("certification is deterministic and thread-count independent") {
  ChainModel chain = regulated_walk();
  SplitRng rng(3);
  NetSpec spec;
  spec.input_dim = 1;
  spec.layer_widths = {8};
  ValueNet net = ValueNet::random_init(spec, rng);
  ValueFn v = [&net](const Vec& x) { return net.forward(x); };
  CertConfig cfg;
  cfg.M = 65;
  cfg.N = 500;
  cfg.seed = 21;
  cfg.source = PointSource::kLattice;
  cfg.threads = 1;
  Certificate a = certify(v, chain, constant_u(0.1), cfg, "walk", "net");
  cfg.threads = 4;
  Certificate b = certify(v, chain, constant_u(0.1), cfg, "walk", "net");
  CHECK(a.residual_no_u == b.residual_no_u);
  CHECK(a.u_tilde == b.u_tilde);
}

TEST_CASE("theorem5 sizes: homogeneity laws and the N invariant") {
  const double eps = 0.1, delta = 0.1;
  ComplexityEstimate base = theorem5_sizes(eps, delta, 1.0, 1.0, 1.0, 0.81, 0.0, 1);
  CHECK_FALSE(base.symbolic);
  // N = ceil(8 supV^2 EDf^2 / (delta eps^2))
  CHECK(base.recommended_n == doctest::Approx(std::ceil(8.0 * 0.81 / (0.1 * 0.01))));
  CHECK(base.recommended_n >= 8.0 * 1.0 * 0.81 / (delta * eps * eps));

  // eps -> eps/2: sub-cube count x 2^d, N x 4.
  for (int d : {1, 2, 3}) {
    ComplexityEstimate c1 = theorem5_sizes(eps, delta, 1.0, 1.0, 1.0, 0.81, 0.0, d);
    ComplexityEstimate c2 = theorem5_sizes(eps / 2.0, delta, 1.0, 1.0, 1.0, 0.81, 0.0, d);
    CHECK(c2.sub_cube_count ==
          doctest::Approx(c1.sub_cube_count * std::pow(2.0, d)).epsilon(1e-12));
    CHECK(c2.recommended_n == doctest::Approx(4.0 * c1.recommended_n).epsilon(1e-12));
  }

  // sup V -> 2 sup V quadruples N.
  ComplexityEstimate c3 = theorem5_sizes(eps, delta, 1.0, 1.0, 2.0, 0.81, 0.0, 1);
  CHECK(c3.recommended_n == doctest::Approx(4.0 * base.recommended_n).epsilon(1e-12));

  // L-tilde assembles DV * EDf^2 + supV * ED2f + DV + DU.
  ComplexityEstimate c4 = theorem5_sizes(eps, delta, 2.0, 3.0, 5.0, 0.25, 7.0, 1);
  CHECK(c4.lipschitz_l_tilde == doctest::Approx(2.0 * 0.25 + 5.0 * 7.0 + 2.0 + 3.0));

  // Huge Lipschitz constants push the cube count past any feasible lattice.
  ComplexityEstimate big = theorem5_sizes(1e-3, delta, 1e6, 1.0, 1.0, 1.0, 0.0, 3);
  CHECK(big.symbolic);

  CHECK_THROWS_AS(theorem5_sizes(0.0, delta, 1, 1, 1, 1, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(theorem5_sizes(eps, 1.5, 1, 1, 1, 1, 0, 1), std::invalid_argument);
}

TEST_CASE("lipschitz input estimation") {
  ChainModel chain = quad_sgd_1d(0.1);
  // V(x) = 2x + 3 has Lipschitz constant 2 on the domain.
  ValueFn v = [](const Vec& x) { return 2.0 * x[0] + 3.0; };
  SplitRng rng(5);
  LipschitzInputs li = estimate_lipschitz_inputs(v, chain, 2000, rng);
  CHECK(li.edf2 == doctest::Approx(0.81));
  CHECK(li.edf2_closed_form);
  CHECK(li.edf2_se == 0.0);
  CHECK(li.dv == doctest::Approx(2.0).epsilon(0.1));
  CHECK_FALSE(li.d2f_caveat);

  ChainModel tandem = tandem_fluid(1.0, 1.1, 1.0);
  SplitRng rng2(6);
  LipschitzInputs lt = estimate_lipschitz_inputs(v, tandem, 2000, rng2);
  CHECK(lt.edf2 == doctest::Approx(1.0));
  CHECK(lt.d2f_caveat);  // indicator-valued Df

  CHECK_THROWS_AS(estimate_lipschitz_inputs(v, chain, 10, rng), std::invalid_argument);
}

TEST_CASE("dv estimate is stable across seeds") {
  ChainModel chain = quad_sgd_1d(0.1);
  ValueFn v = [](const Vec& x) { return std::sin(3.0 * x[0]); };
  SplitRng r1(11), r2(12);
  const double a = estimate_lipschitz_inputs(v, chain, 4000, r1).dv;
  const double b = estimate_lipschitz_inputs(v, chain, 4000, r2).dv;
  CHECK(std::abs(a - b) / std::max(a, b) < 0.10);
}

TEST_CASE("path-sum oracle recovers the quad fixed point") {
  // V*(x) = sum_k u (1-alpha)^k = u / alpha = 1.0, with zero variance
  // because Df is deterministic.
  ChainModel chain = quad_sgd_1d(0.1);
  SplitRng rng(31);
  VstarResult res = vstar_oracle(chain, constant_u(0.1), Vec{0.25}, 400, 200, rng);
  CHECK(res.converged);
  CHECK(std::abs(res.estimate - 1.0) <= 3.0 * res.std_error + res.tail_bound + 1e-9);
  CHECK(res.estimate == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("path-sum oracle: zero reward gives zero value") {
  ChainModel chain = quad_sgd_1d(0.1);
  UFunction zero{[](const Vec&) { return 0.0; }, 0.0};
  SplitRng rng(33);
  VstarResult res = vstar_oracle(chain, zero, Vec{0.0}, 200, 50, rng);
  CHECK(res.estimate == 0.0);
}

TEST_CASE("path-sum oracle: tandem collapses instantly at the origin") {
  ChainModel chain = tandem_fluid(1.0, 1.1, 1.0);
  SplitRng rng(35);
  VstarResult res = vstar_oracle(chain, constant_u(0.1), Vec{0.0, 0.0}, 100, 200, rng);
  CHECK(res.estimate == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(res.std_error == doctest::Approx(0.0));
}

TEST_CASE("path-sum oracle separates walk interior from boundary") {
  ChainModel chain = regulated_walk();
  SplitRng r1(37), r2(38);
  VstarResult mid = vstar_oracle(chain, constant_u(0.1), Vec{0.0}, 400, 2000, r1);
  VstarResult edge = vstar_oracle(chain, constant_u(0.1), Vec{0.45}, 400, 2000, r2);
  CHECK(mid.estimate - edge.estimate > 3.0 * (mid.std_error + edge.std_error));
}

TEST_CASE("empirical operator concentrates at the Monte Carlo rate") {
  // For V(x) = x^2 on quad SGD, KV(x) = (1-a)^2 [ ((1-a)x + a E Z)^2 ... ]
  // computed exactly below; the max error over a grid should scale ~ N^{-1/2}.
  const double a = 0.1;
  ChainModel chain = quad_sgd_1d(a);
  ValueFn v = [](const Vec& x) { return x[0] * x[0]; };
  // f(x) = (1-a)x + aZ, Z ~ U[-1/2,1/2]: E f^2 = ((1-a)x)^2 + a^2/12.
  auto exact_kv = [a](double x) {
    return (1.0 - a) * ((1.0 - a) * x * (1.0 - a) * x + a * a / 12.0);
  };
  const auto pts = lattice_points(chain.domain, 9);
  std::vector<std::int64_t> ladder{100, 400, 1600, 6400, 25600};
  std::vector<double> err;
  for (std::int64_t n : ladder) {
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double mean_abs = 0.0;
      for (int rep = 0; rep < 8; ++rep) {
        SplitRng rng(1000 + 17 * static_cast<std::uint64_t>(n) + rep * 131 + i);
        mean_abs += std::abs(empirical_K(v, chain, pts[i], n, rng) - exact_kv(pts[i][0]));
      }
      worst = std::max(worst, mean_abs / 8.0);
    }
    err.push_back(worst);
  }
  // errors shrink monotonically up to noise
  CHECK(err.back() < err.front());
  // log-log slope across the ladder ~ -1/2
  const double slope = (std::log(err.back()) - std::log(err.front())) /
                       (std::log(static_cast<double>(ladder.back())) -
                        std::log(static_cast<double>(ladder.front())));
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.3));
}
