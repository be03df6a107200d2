#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dcdc/bounds.hpp"
#include "dcdc/chains.hpp"

using namespace dcdc;

namespace {

Certificate analytic_quad_cert(double eps = 0.01) {
  ChainModel chain = quad_sgd_1d(0.1);
  ValueFn v = [](const Vec&) { return 1.0; };
  CertConfig cfg;
  cfg.M = 64;
  cfg.N = 2000;
  cfg.eps = eps;
  cfg.seed = 55;
  cfg.source = PointSource::kLattice;
  return certify(v, chain, constant_u(0.1), cfg, "quad", "analytic");
}

}  // namespace

TEST_CASE("analytic quad bound: exact rate and the 1/3 pre-multiplier") {
  ChainModel chain = quad_sgd_1d(0.1);
  ValueFn v = [](const Vec&) { return 1.0; };
  Certificate cert = analytic_quad_cert();
  BoundConfig cfg;
  cfg.x0 = InitialDistribution::reference();
  cfg.mc_paths = 200000;
  cfg.seed = 8;
  cfg.dv = 0.0;
  cfg.exact_inf_u = 0.1;  // V solves the drift equation exactly
  ExponentialBound b = exponential_bound(cert, chain, v, cfg);
  CHECK(b.rate == 0.9);  // 1 - 0.1 / 1.0, exact in doubles
  // ||X1 - X0|| = alpha |X0 - Z| with X0, Z iid U[-1/2,1/2]:
  // E = alpha/3, so C = (alpha/3 * 1) / (0.1 * 1) = 1/3.
  CHECK(b.numerator == doctest::Approx(0.1 / 3.0).epsilon(0.02));
  CHECK(b.pre_multiplier == doctest::Approx(1.0 / 3.0).epsilon(0.02));
  CHECK(b.pre_multiplier >= b.numerator / 0.1);  // shipped C includes +2 se
  CHECK_FALSE(b.interpolant_fallback);
  CHECK(b.u_eff == 0.1);
}

TEST_CASE("default mode discounts the drift margin by eps") {
  ChainModel chain = quad_sgd_1d(0.1);
  ValueFn v = [](const Vec&) { return 1.0; };
  Certificate cert = analytic_quad_cert(0.02);
  BoundConfig cfg;
  cfg.x0 = InitialDistribution::reference();
  cfg.mc_paths = 20000;
  cfg.seed = 9;
  ExponentialBound b = exponential_bound(cert, chain, v, cfg);
  CHECK(b.u_eff == doctest::Approx(cert.u_tilde - 0.02).epsilon(1e-12));
  CHECK(b.rate > 0.9);  // weaker margin, slower certified rate
}

TEST_CASE("invalid certificates are refused") {
  ChainModel chain = regulated_walk();
  ValueFn v = [](const Vec&) { return 0.5; };
  CertConfig ccfg;
  ccfg.M = 33;
  ccfg.N = 1000;
  ccfg.eps = 0.01;
  ccfg.seed = 3;
  ccfg.source = PointSource::kLattice;
  Certificate cert = certify(v, chain, constant_u(0.1), ccfg, "walk", "const");
  REQUIRE_FALSE(cert.valid);
  BoundConfig cfg;
  cfg.x0 = InitialDistribution::reference();
  cfg.mc_paths = 1000;
  cfg.seed = 4;
  CHECK_THROWS_AS(exponential_bound(cert, chain, v, cfg), CertificateInvalid);
}

TEST_CASE("extrema widening uses dv times the covering radius") {
  ChainModel chain = quad_sgd_1d(0.1);
  ValueFn v = [](const Vec&) { return 1.0; };
  Certificate cert = analytic_quad_cert();
  BoundConfig cfg;
  cfg.x0 = InitialDistribution::reference();
  cfg.mc_paths = 5000;
  cfg.seed = 10;
  cfg.dv = 2.0;
  cfg.exact_inf_u = 0.1;
  ExponentialBound b = exponential_bound(cert, chain, v, cfg);
  CHECK(b.sup_v_wide == doctest::Approx(cert.sup_v + 2.0 * cert.covering_radius).epsilon(1e-12));
  CHECK(b.inf_v_wide == doctest::Approx(cert.inf_v - 2.0 * cert.covering_radius).epsilon(1e-12));
  CHECK(b.rate > 0.9);  // widened sup V weakens the rate
}

TEST_CASE("pre-multiplier standard error shrinks like 1/sqrt(paths)") {
  ChainModel chain = quad_sgd_1d(0.1);
  ValueFn v = [](const Vec&) { return 1.0; };
  Certificate cert = analytic_quad_cert();
  BoundConfig cfg;
  cfg.x0 = InitialDistribution::reference();
  cfg.seed = 11;
  cfg.exact_inf_u = 0.1;
  cfg.mc_paths = 4000;
  const double se1 = exponential_bound(cert, chain, v, cfg).pre_multiplier_se;
  cfg.mc_paths = 64000;
  const double se2 = exponential_bound(cert, chain, v, cfg).pre_multiplier_se;
  CHECK(se2 / se1 == doctest::Approx(0.25).epsilon(0.5));
}

TEST_CASE("first_crossing finds the first integer step below the threshold") {
  const double c = 5.67, r = 0.9;
  auto f = [c, r](double n) { return c * std::pow(r, n); };
  // closed form: n > log(th/c)/log(r) = 60.18 -> first integer 61
  CHECK(first_crossing(f, 0.01, 1e7) == std::floor(std::log(0.01 / c) / std::log(r)) + 1.0);
  CHECK(f(0.0) == doctest::Approx(5.67));

  // slowly-decaying exponential, as in the logistic study: 4093.16 -> 4094
  const double c2 = 8.0, r2 = 1.0 - 1.07e-3;
  auto g = [c2, r2](double n) { return c2 * std::pow(r2, n); };
  CHECK(first_crossing(g, 0.1, 1e7) == std::floor(std::log(0.1 / c2) / std::log(r2)) + 1.0);

  // polynomial decay 20/(1+n): equality at 199, strictly below at 200
  auto h = [](double n) { return 20.0 / (1.0 + n); };
  CHECK(first_crossing(h, 0.1, 1e7) == 200.0);

  // degenerate edges
  CHECK(first_crossing(f, 10.0, 1e7) == 0.0);
  CHECK(first_crossing([](double) { return 1.0; }, 0.5, 1e6) == -1.0);
}

TEST_CASE("bound report tabulates and finds crossings") {
  auto f = [](double n) { return 2.0 * std::pow(0.5, n); };
  BoundReport rep = bound_report(f, {0.0, 1.0, 2.0});
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].value == doctest::Approx(2.0));
  CHECK(rep.rows[2].value == doctest::Approx(0.5));
  bool found1 = false;
  for (const auto& [th, n] : rep.crossings)
    if (th == 1.0) {
      found1 = true;
      CHECK(n == 2.0);  // f(1) = 1 is not yet strictly below
    }
  CHECK(found1);
}

TEST_CASE("polynomial bound evaluates the product denominator") {
  PolynomialBound b;
  b.order = 3;
  b.numerator = 28.0;
  b.inf_v0 = 1.0;
  // denom at n = 6: 1 * (1 + 6/1)(1 + 6/2) = 7 * 4 = 28
  CHECK(b.evaluate(6.0) == doctest::Approx(1.0));
  CHECK(b.evaluate(0.0) == doctest::Approx(28.0));

  // decay order on a log-log grid: slope -> -(m-1)
  const double s = (std::log(b.evaluate(1e8)) - std::log(b.evaluate(1e6))) /
                   (std::log(1e8) - std::log(1e6));
  CHECK(s == doctest::Approx(-2.0).epsilon(1e-2));

  PolynomialBound m1;
  m1.order = 1;
  m1.numerator = 5.0;
  m1.inf_v0 = 2.0;
  CHECK(m1.evaluate(12345.0) == doctest::Approx(2.5));  // constant in n
}

TEST_CASE("polynomial_bound demands pointwise stage certificates") {
  ChainModel chain = quad_sgd_1d(0.1);
  ValueFn v = [](const Vec&) { return 1.0; };
  Certificate cert = analytic_quad_cert();  // residual ~ 0: not pointwise-valid
  REQUIRE_FALSE(cert.valid_pointwise_u);
  BoundConfig cfg;
  cfg.x0 = InitialDistribution::reference();
  cfg.mc_paths = 1000;
  cfg.seed = 12;
  try {
    polynomial_bound({cert, cert}, v, chain, 1.0, cfg);
    FAIL("expected CertificateInvalid");
  } catch (const CertificateInvalid& e) {
    CHECK(std::string(e.what()).find("stage 1") != std::string::npos);
  }
}

TEST_CASE("polynomial_bound accepts strict pointwise stages") {
  // V = 2 on quad gives K V - V + U = 0.9*2 - 2 + 0.1 = -0.1 <= -eps.
  ChainModel chain = quad_sgd_1d(0.1);
  ValueFn v = [](const Vec&) { return 2.0; };
  CertConfig ccfg;
  ccfg.M = 32;
  ccfg.N = 500;
  ccfg.eps = 0.01;
  ccfg.seed = 13;
  ccfg.source = PointSource::kLattice;
  Certificate cert = certify(v, chain, constant_u(0.1), ccfg, "quad", "two");
  REQUIRE(cert.valid_pointwise_u);
  BoundConfig cfg;
  cfg.x0 = InitialDistribution::reference();
  cfg.mc_paths = 20000;
  cfg.seed = 14;
  PolynomialBound b = polynomial_bound({cert}, v, chain, 2.0, cfg);
  CHECK(b.order == 1);
  CHECK(b.numerator > 0.0);
  // order 1: numerator / inf V0, constant in n
  CHECK(b.evaluate(10.0) == doctest::Approx(b.evaluate(0.0)));
}

TEST_CASE("evaluator round trip agrees with the struct") {
  ExponentialBound e;
  e.rate = 0.95;
  e.pre_multiplier = 3.0;
  auto f = evaluator(e);
  CHECK(f(7.0) == doctest::Approx(3.0 * std::pow(0.95, 7.0)));
}
