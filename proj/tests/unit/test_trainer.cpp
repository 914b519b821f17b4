#include <cmath>

#include "doctest.h"
#include "rflab/trainer.hpp"

using namespace rflab;

namespace {

double loss_at(const TwoLayerNet& net, const Vector& x, double y) { return hinge_loss(forward(net, x), y); }

TwoLayerNet random_net(int d, int r, Rng& rng) {
  TwoLayerNet net = xavier_init(d, r, exp_activation(), rng);
  for (int i = 0; i < r; ++i) net.U[i] = 0.5 * rng.normal();
  return net;
}

}  // namespace

TEST_CASE("xavier initialisation") {
  Rng rng(RandomSource{1, 0});
  const auto net = xavier_init(9, 40, exp_activation(), rng);
  CHECK(net.W.cwiseAbs().maxCoeff() <= 1.0 / 3.0);
  CHECK(net.U.norm() == 0.0);
  CHECK(net.W.norm() <= std::sqrt(40.0));
  CHECK_THROWS_AS(xavier_init(0, 3, exp_activation(), rng), std::invalid_argument);
}

TEST_CASE("forward pass") {
  Rng rng(RandomSource{2, 0});
  auto net = xavier_init(3, 1, identity_activation(), rng);
  Vector x(3);
  x << 0.1, -0.2, 0.3;
  CHECK(forward(net, x) == 0.0);
  net.U[0] = 1.0;
  CHECK(forward(net, x) == doctest::Approx(net.W.row(0).dot(x)));
  auto twice = net;
  twice.U *= 2.0;
  CHECK(forward(twice, x) == doctest::Approx(2.0 * forward(net, x)));
  CHECK_THROWS_AS(forward(net, Vector::Zero(2)), std::invalid_argument);
}

TEST_CASE("hinge loss") {
  CHECK(hinge_loss(0.0, 1.0) == 1.0);
  CHECK(hinge_loss(2.0, 1.0) == 0.0);
  CHECK(hinge_loss(-1.0, 1.0) == 2.0);
  CHECK(hinge_loss(0.5, -1.0) == 1.5);
  CHECK_THROWS_AS(hinge_loss(0.0, 0.5), std::invalid_argument);
}

TEST_CASE("gradients match central differences") {
  Rng rng(RandomSource{3, 0});
  const double h = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto net = random_net(3, 6, rng);
    const Vector x = rng.ball_vector(3, 1.0);
    const double y = rng.uniform() < 0.5 ? -1.0 : 1.0;
    if (std::abs(1.0 - y * forward(net, x)) <= 1e-3) continue;
    ++checked;
    const auto g = gradients(net, x, y);
    for (int i = 0; i < net.r(); ++i) {
      auto p = net, m = net;
      p.U[i] += h;
      m.U[i] -= h;
      const double fd = (loss_at(p, x, y) - loss_at(m, x, y)) / (2 * h);
      CHECK(std::abs(fd - g.dU[i]) <= 1e-6 * std::max(1.0, std::abs(fd)));
      for (int j = 0; j < net.d(); ++j) {
        auto pw = net, mw = net;
        pw.W(i, j) += h;
        mw.W(i, j) -= h;
        const double fdw = (loss_at(pw, x, y) - loss_at(mw, x, y)) / (2 * h);
        CHECK(std::abs(fdw - g.dW(i, j)) <= 1e-6 * std::max(1.0, std::abs(fdw)));
      }
    }
  }
  CHECK(checked > 80);
}

TEST_CASE("gradient special cases") {
  Rng rng(RandomSource{4, 0});
  auto net = xavier_init(2, 3, exp_activation(), rng);
  Vector x(2);
  x << 0.3, 0.4;
  auto g = gradients(net, x, 1.0);
  CHECK(g.dW.norm() == 0.0);
  for (int i = 0; i < 3; ++i) CHECK(g.dU[i] == doctest::Approx(-std::exp(net.W.row(i).dot(x))));
  net.U.setConstant(10.0);
  g = gradients(net, x, 1.0);  // margin satisfied
  CHECK(g.dW.norm() == 0.0);
  CHECK(g.dU.norm() == 0.0);
}

TEST_CASE("zero step size leaves the network unchanged") {
  SparsePolynomial p(2);
  p.add_term(MultiIndex{1, 1}, 2.0);
  TrainConfig cfg;
  cfg.r = 20;
  cfg.eta = 0.0;
  cfg.steps = 200;
  cfg.validation_size = 50;
  const auto res = sgd_train(2, polynomial_sign_sampler(p, 0.1), cfg, exp_activation());
  CHECK(res.trace.size() == 201);
  for (std::size_t t = 0; t < res.trace.size(); ++t) {
    CHECK(res.trace.w_drift[t] == 0.0);
    CHECK(res.trace.u_norm[t] == 0.0);
    CHECK(res.trace.w_norm[t] == res.trace.w_norm[0]);
  }
  const auto rep = drift_check(res.trace, cfg, exp_activation(), std::nullopt, true);
  CHECK(rep.passed());
  CHECK(rep.drift_slack == 0.0);
  CHECK(res.final_net.W == res.best.W);
}

TEST_CASE("separable data with identity activation") {
  // y = sign(x1) with margin: one linear unit fits it
  SparsePolynomial p(2);
  p.add_term(MultiIndex{1, 0}, 1.0);
  TrainConfig cfg;
  cfg.r = 1;
  cfg.eta = 0.5;
  cfg.steps = 20000;
  cfg.validation_size = 500;
  cfg.seed = 5;
  Rng rng(RandomSource{5, 0}.child(9));
  auto net = xavier_init(2, 1, identity_activation(), rng);
  net.U[0] = 0.1;  // U = 0 would freeze W
  const auto res = sgd_train_from(net, polynomial_sign_sampler(p, 0.5), cfg);
  CHECK(res.best_validation_loss < 0.02);
  CHECK(res.trace.run_avg.back() < 0.1);
  CHECK(res.best_validation_loss <= res.initial_validation_loss + 1e-12);
}

TEST_CASE("training is deterministic and respects the drift bound") {
  SparsePolynomial p(3);
  p.add_term(MultiIndex{1, 1, 0}, 2.0);
  TrainConfig cfg;
  cfg.r = 100;
  cfg.eta = 0.5 / (std::exp(1.0) * 100.0);  // eta = epsilon / (L B^2) with B = sqrt(r), epsilon = 0.5
  cfg.steps = 3000;
  cfg.validation_size = 200;
  cfg.seed = 6;
  const auto sampler = polynomial_sign_sampler(p, 0.3);
  const auto a = sgd_train(3, sampler, cfg, exp_activation());
  const auto b = sgd_train(3, sampler, cfg, exp_activation());
  CHECK(a.trace.loss == b.trace.loss);
  CHECK(a.trace.w_drift == b.trace.w_drift);
  const auto rep = drift_check(a.trace, cfg, exp_activation(), std::sqrt(100.0), true);
  CHECK(rep.passed());
  CHECK(rep.B == 10.0);
  CHECK(a.validation.size() == 101);
  CHECK(a.best_validation_loss <= a.initial_validation_loss + 1e-12);
}

TEST_CASE("finite dataset mode and divergence") {
  SparsePolynomial p(2);
  p.add_term(MultiIndex{1, 1}, 2.0);
  TrainConfig cfg;
  cfg.r = 10;
  cfg.steps = 100;
  cfg.dataset_size = 16;
  cfg.validation_size = 10;
  CHECK_NOTHROW(sgd_train(2, polynomial_sign_sampler(p, 0.2), cfg, exp_activation()));
  cfg.eta = 1e300;
  cfg.dataset_size = 0;
  CHECK_THROWS_AS(sgd_train(2, polynomial_sign_sampler(p, 0.2), cfg, exp_activation()), TrainingDiverged);
}

TEST_CASE("plug-in hyperparameters") {
  const auto act = exp_activation();
  const auto p = theorem1_params(0.1, 0.1, 3, 2, 1.0, act);
  CHECK(p.a == doctest::Approx(0.5));
  CHECK(p.A == 1.0);
  CHECK(p.log10_beta == doctest::Approx(std::log10(4.0) + 8.0 * std::log10(36.0)));
  CHECK(p.beta == doctest::Approx(4.0 * std::pow(36.0, 8)));
  CHECK(p.infeasible_at_desk_scale);
  CHECK(p.eta * 8.0 * p.r == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(p.T == doctest::Approx(std::ceil(4.0 * p.beta * p.beta / 0.01)));
  CHECK_THROWS_AS(p.config(), std::invalid_argument);
  for (int d = 1; d <= 6; ++d)
    for (int k = 1; k <= 4; ++k) {
      const auto q = theorem1_params(0.1, 0.1, d, k, 1.0, act);
      CHECK(theorem1_params(0.1, 0.1, d + 1, k, 1.0, act).log10_beta > q.log10_beta);
      CHECK(theorem1_params(0.1, 0.1, d, k + 1, 1.0, act).log10_beta > q.log10_beta);
    }
  // enormous cases keep finite logs
  const auto big = theorem1_params(0.01, 0.01, 50, 8, 2.0, act);
  CHECK(std::isinf(big.r));
  CHECK(std::isfinite(big.log10_r));
  CHECK_THROWS_AS(theorem1_params(1.5, 0.1, 3, 2, 1.0, act), std::invalid_argument);
  CHECK_THROWS_AS(theorem1_params(0.1, 0.1, 3, 2, 1.0, relu_activation()), std::invalid_argument);
}

TEST_CASE("checkpoint json round trip") {
  Rng rng(RandomSource{7, 0});
  const auto net = random_net(3, 4, rng);
  std::uint64_t seed = 0;
  const auto back = net_from_json(net_to_json(net, 99), &seed);
  CHECK(seed == 99);
  CHECK(back.W == net.W);
  CHECK(back.U == net.U);
  CHECK(back.activation.name == "exp");
  CHECK_THROWS_AS(net_from_json("{\"d\":2}"), std::invalid_argument);
}
