#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "rflab/poly_repr.hpp"

using namespace rflab;

TEST_CASE("activations") {
  const auto e = exp_activation();
  CHECK(e.analytic());
  CHECK(e.taylor_coeff(3) == doctest::Approx(1.0 / 6.0));
  CHECK(e.truncated(0.5, 3) == doctest::Approx(1.0 + 0.5 + 0.125 + 0.125 / 6.0));
  CHECK(e.taylor_lower(2) == doctest::Approx(0.5));
  CHECK(e.taylor_upper(2) == 1.0);
  CHECK(e.lipschitz == doctest::Approx(std::exp(1.0)));
  const auto r = relu_activation();
  CHECK_FALSE(r.analytic());
  CHECK(r(-1.0) == 0.0);
  CHECK(r(2.0) == 2.0);
  CHECK_THROWS_AS(r.taylor_coeff(0), std::invalid_argument);
  CHECK(identity_activation().taylor_lower(3) == 1.0);
  CHECK_THROWS_AS(activation_by_name("tanh"), std::invalid_argument);
}

TEST_CASE("sparse polynomial arithmetic and json") {
  SparsePolynomial p(2);
  p.add_term(MultiIndex{1, 1}, 2.0);
  p.add_term(MultiIndex{0, 0}, -0.5);
  p.add_term(MultiIndex{1, 1}, 1.0);
  CHECK(p.coefficient(MultiIndex{1, 1}) == 3.0);
  CHECK(p.degree() == 2);
  CHECK(p.coeff_bound() == 3.0);
  Vector x(2);
  x << 0.5, -2.0;
  CHECK(p(x) == doctest::Approx(3.0 * 0.5 * -2.0 - 0.5));
  CHECK((p + p)(x) == doctest::Approx(2.0 * p(x)));
  CHECK(p.scaled(-2.0)(x) == doctest::Approx(-2.0 * p(x)));
  CHECK_THROWS_AS(p.add_term(MultiIndex{1, 0, 0}, 1.0), std::invalid_argument);

  p.add_term(MultiIndex{2, 0}, 0.1);
  const auto back = polynomial_from_json(polynomial_to_json(p));
  CHECK(back.terms() == p.terms());
  const auto zero = polynomial_from_json(polynomial_to_json(SparsePolynomial(4)));
  CHECK(zero.dimension() == 4);
  CHECK_THROWS_AS(polynomial_from_json("{\"1,0\": 1, \"1\": 2}"), std::invalid_argument);
  CHECK_THROWS_AS(polynomial_from_json("[1,2"), std::invalid_argument);
}

TEST_CASE("random polynomials respect the coefficient bound") {
  Rng rng(RandomSource{5, 0});
  const auto p = random_polynomial(3, 3, 0.7, rng);
  CHECK(p.terms().size() == 20);
  CHECK(p.coeff_bound() <= 0.7);
}

TEST_CASE("g represents x^2 in one dimension") {
  SparsePolynomial p(1);
  p.add_term(MultiIndex{2}, 1.0);
  const auto act = exp_activation();
  const auto g = construct_g(p, act, build_monomial_table(2));
  CHECK(g.cube_normalizer() == doctest::Approx(0.5));
  for (double x : {-1.0, -0.4, 0.0, 0.3, 1.0}) {
    const double v = 0.5 * oracle::simpson(
                               [&](double w) {
                                 Vector wv(1);
                                 wv << w;
                                 return act.truncated(w * x, 2) * eval_g(g, wv);
                               },
                               -1.0, 1.0, 4000);
    CHECK(v == doctest::Approx(x * x).epsilon(1e-10));
  }
}

TEST_CASE("g represents a mixed polynomial in two dimensions") {
  SparsePolynomial p(2);
  p.add_term(MultiIndex{1, 1}, 1.5);
  p.add_term(MultiIndex{2, 0}, -0.5);
  p.add_term(MultiIndex{0, 1}, 0.25);
  p.add_term(MultiIndex{0, 0}, 1.0);
  const auto act = exp_activation();
  const auto g = construct_g(p, act, build_monomial_table(2));
  const double h = 1.0 / std::sqrt(2.0);
  CHECK(g.cube_normalizer() == doctest::Approx(0.5));
  for (const auto& xy : {std::pair{0.3, -0.4}, std::pair{-0.7, 0.1}, std::pair{0.0, 0.9}}) {
    Vector x(2);
    x << xy.first, xy.second;
    const double v = 0.5 * oracle::simpson2(
                               [&](double u, double w) {
                                 Vector wv(2);
                                 wv << u, w;
                                 return act.truncated(wv.dot(x), 2) * eval_g(g, wv);
                               },
                               -h, h, 1200);
    CHECK(v == doctest::Approx(p(x)).epsilon(1e-9));
  }
  // library quadrature agrees
  std::vector<Vector> pts{Vector::Constant(2, 0.2), Vector::Constant(2, -0.5)};
  for (double r : verify_representation(p, g, act, pts, 8, true)) CHECK(std::abs(r) < 1e-12);
}

TEST_CASE("representation residuals for random polynomials stay tiny") {
  const auto act = exp_activation();
  for (int trial = 0; trial < 6; ++trial) {
    Rng rng(RandomSource{11, 0}.child(trial));
    const int d = 1 + trial % 3, k = 1 + trial % 3;
    const auto p = random_polynomial(d, k, 1.0, rng);
    const auto g = construct_g(p, act, build_monomial_table(k));
    std::vector<Vector> pts;
    for (int t = 0; t < 10; ++t) pts.push_back(rng.ball_vector(d, 1.0));
    for (double r : verify_representation(p, g, act, pts, k + 2, true)) CHECK(std::abs(r) < 1e-10);
    const double bound = log10_g_bound(p.coeff_bound(), act.taylor_upper(k), act.taylor_lower(k), d, k);
    CHECK(std::log10(max_abs_g(g)) <= bound);
  }
}

TEST_CASE("construct_g rejects what it cannot represent") {
  SparsePolynomial p(2);
  p.add_term(MultiIndex{1, 1}, 1.0);
  CHECK_THROWS_AS(construct_g(p, identity_activation(), build_monomial_table(2)), UnrepresentableMonomial);
  CHECK_THROWS_AS(construct_g(p, relu_activation(), build_monomial_table(2)), std::invalid_argument);
  CHECK_THROWS_AS(construct_g(p, exp_activation(), build_monomial_table(1)), std::invalid_argument);
  const auto g = construct_g(p, exp_activation(), build_monomial_table(2));
  CHECK_THROWS_AS(eval_g(g, Vector::Constant(2, 0.9)), std::invalid_argument);
  CHECK_THROWS_AS(eval_g(g, Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("bound on g") {
  CHECK(log10_g_bound(1.0, 1.0, 0.5, 3, 2) == doctest::Approx(std::log10(4.0) + 8.0 * std::log10(36.0)));
  CHECK(log10_g_bound(0.0, 1.0, 1.0, 3, 0) == 0.0);
  CHECK(log10_g_bound(1.0, 1.0, 0.5, 4, 2) > log10_g_bound(1.0, 1.0, 0.5, 3, 2));
  CHECK(log10_g_bound(1.0, 1.0, 0.5, 3, 3) > log10_g_bound(1.0, 1.0, 0.5, 3, 2));
}
