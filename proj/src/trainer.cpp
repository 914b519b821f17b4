#include "rflab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace rflab {

namespace {

void check_label(double y) {
  if (y != 1.0 && y != -1.0) throw std::invalid_argument("label must be +1 or -1");
}

void check_input(const TwoLayerNet& net, const Vector& x) {
  if (x.size() != net.d()) throw std::invalid_argument("input dimension differs from the network");
}

Vector map_fn(const ScalarFn& f, const Vector& z) { return z.unaryExpr([&](double v) { return f(v); }); }

}  // namespace

TwoLayerNet xavier_init(int d, int r, const Activation& act, Rng& rng) {
  if (d < 1 || r < 1) throw std::invalid_argument("xavier_init needs d >= 1 and r >= 1");
  TwoLayerNet net{Matrix(r, d), Vector::Zero(r), act};
  const double h = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < r; ++i) net.W.row(i) = rng.cube_vector(d, h).transpose();
  return net;
}

double forward(const TwoLayerNet& net, const Vector& x) {
  check_input(net, x);
  return net.U.dot(map_fn(net.activation.value, net.W * x));
}

double hinge_loss(double y_hat, double y) {
  check_label(y);
  if (std::isnan(y_hat)) return y_hat;
  return std::max(0.0, 1.0 - y_hat * y);
}

Gradients gradients(const TwoLayerNet& net, const Vector& x, double y) {
  check_input(net, x);
  check_label(y);
  const Vector z = net.W * x;
  const Vector s = map_fn(net.activation.value, z);
  const double N = net.U.dot(s);
  Gradients g{Matrix::Zero(net.r(), net.d()), Vector::Zero(net.r())};
  if (1.0 - y * N >= 0.0) {
    g.dU = -y * s;
    const Vector u_tilde = net.U.cwiseProduct(map_fn(net.activation.derivative, z));
    g.dW = -y * u_tilde * x.transpose();
  }
  return g;
}

// ---------------------------------------------------------------------------

ExampleSampler polynomial_sign_sampler(const SparsePolynomial& P, double margin) {
  if (margin < 0.0) throw std::invalid_argument("margin must be >= 0");
  return [P, margin](Rng& rng) {
    for (int attempt = 0; attempt < 1000000; ++attempt) {
      Vector x = rng.ball_vector(P.dimension(), 1.0);
      const double v = P(x);
      if (std::abs(v) >= margin && v != 0.0) return std::make_pair(std::move(x), v > 0.0 ? 1.0 : -1.0);
    }
    throw std::runtime_error("margin filter rejects almost every point");
  };
}

double polynomial_hinge_loss(const SparsePolynomial& P, double scale,
                             const std::vector<std::pair<Vector, double>>& examples) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [x, y] : examples) total += hinge_loss(scale * P(x), y);
  return total / static_cast<double>(examples.size());
}

std::vector<std::pair<Vector, double>> validation_set(const ExampleSampler& sampler, const TrainConfig& config) {
  Rng rng(RandomSource{config.seed, 0}.child(3));
  std::vector<std::pair<Vector, double>> out;
  out.reserve(static_cast<std::size_t>(config.validation_size));
  for (int i = 0; i < config.validation_size; ++i) out.push_back(sampler(rng));
  return out;
}

double mean_hinge_loss(const TwoLayerNet& net, const std::vector<std::pair<Vector, double>>& examples) {
  if (examples.empty()) return 0.0;
  Matrix X(static_cast<Eigen::Index>(examples.size()), net.d());
  Vector y(X.rows());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    check_input(net, examples[i].first);
    X.row(static_cast<Eigen::Index>(i)) = examples[i].first.transpose();
    y[static_cast<Eigen::Index>(i)] = examples[i].second;
  }
  const Matrix S = (X * net.W.transpose()).unaryExpr([&](double v) { return net.activation.value(v); });
  const Vector pred = S * net.U;
  double total = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) total += hinge_loss(pred[i], y[i]);
  return total / static_cast<double>(pred.size());
}

TrainResult sgd_train(int d, const ExampleSampler& sampler, const TrainConfig& config, const Activation& act) {
  Rng init(RandomSource{config.seed, 0}.child(1));
  return sgd_train_from(xavier_init(d, config.r, act, init), sampler, config);
}

TrainResult sgd_train_from(TwoLayerNet net, const ExampleSampler& sampler, const TrainConfig& config) {
  if (config.steps < 0 || config.eta < 0.0 || !std::isfinite(config.eta))
    throw std::invalid_argument("steps and eta must be nonnegative");
  if (config.validation_size < 1) throw std::invalid_argument("validation_size must be >= 1");
  const RandomSource root{config.seed, 0};
  const std::int64_t T = config.steps;
  const std::int64_t every = config.eval_every > 0 ? config.eval_every : std::max<std::int64_t>(1, T / 100);

  const auto validation = validation_set(sampler, config);
  std::vector<std::pair<Vector, double>> dataset;
  if (config.dataset_size > 0) {
    Rng data_rng(root.child(4));
    dataset.reserve(config.dataset_size);
    for (std::size_t i = 0; i < config.dataset_size; ++i) dataset.push_back(sampler(data_rng));
  }
  Rng train_rng(root.child(2));

  TrainResult result;
  TrainTrace& tr = result.trace;
  const auto n = static_cast<std::size_t>(T) + 1;
  tr.loss.reserve(n);
  tr.run_avg.reserve(n);
  tr.w_drift.reserve(n);
  tr.u_norm.reserve(n);
  tr.w_norm.reserve(n);

  const Matrix W0 = net.W;
  const Activation& act = net.activation;
  double loss_sum = 0.0;
  Vector z(net.r()), s(net.r()), ds(net.r());

  for (std::int64_t t = 0; t <= T; ++t) {
    tr.w_drift.push_back((net.W - W0).norm());
    tr.u_norm.push_back(net.U.norm());
    tr.w_norm.push_back(net.W.norm());

    Vector x;
    double y = 0.0;
    if (dataset.empty()) {
      std::tie(x, y) = sampler(train_rng);
    } else {
      const auto& ex = dataset[static_cast<std::size_t>(train_rng.bits() % dataset.size())];
      x = ex.first;
      y = ex.second;
    }
    check_input(net, x);
    check_label(y);
    z.noalias() = net.W * x;
    for (Eigen::Index i = 0; i < z.size(); ++i) s[i] = act.value(z[i]);
    const double N = net.U.dot(s);
    const double loss = std::max(0.0, 1.0 - y * N);
    if (!std::isfinite(N))
      throw TrainingDiverged("non-finite loss at step " + std::to_string(t) + " (eta " + std::to_string(config.eta) + ")");
    loss_sum += loss;
    tr.loss.push_back(loss);
    tr.run_avg.push_back(loss_sum / static_cast<double>(t + 1));

    if (t % every == 0 || t == T) {
      const double v = mean_hinge_loss(net, validation);
      if (!std::isfinite(v)) throw TrainingDiverged("non-finite validation loss at step " + std::to_string(t));
      result.validation.push_back({t, v});
      if (t == 0) result.initial_validation_loss = v;
      if (t == 0 || v < result.best_validation_loss) {
        result.best_validation_loss = v;
        result.best_step = t;
        result.best = net;
      }
    }
    if (t == T) break;

    if (1.0 - y * N >= 0.0 && config.eta != 0.0) {
      for (Eigen::Index i = 0; i < z.size(); ++i) ds[i] = act.derivative(z[i]);
      // dW uses U_t, so update W first
      net.W.noalias() += (config.eta * y) * net.U.cwiseProduct(ds) * x.transpose();
      net.U += (config.eta * y) * s;
    }
  }
  result.final_net = std::move(net);
  return result;
}

// ---------------------------------------------------------------------------

Theorem1Params theorem1_params(double epsilon, double delta, int d, int k, double alpha, const Activation& act) {
  if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("epsilon and delta must lie in (0, 1)");
  if (d < 1 || k < 1 || alpha <= 0.0) throw std::invalid_argument("need d >= 1, k >= 1, alpha > 0");
  if (!act.analytic()) throw std::invalid_argument("theorem1_params needs an analytic activation");
  Theorem1Params p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.d = d;
  p.k = k;
  p.alpha = alpha;
  p.a = act.taylor_lower(k);
  p.A = act.taylor_upper(k);
  p.L = act.lipschitz;

  p.log10_beta = log10_g_bound(alpha, p.A, p.a, d, k);
  const double log10_r_real = std::log10(64.0) + 6.0 * p.log10_beta + 2.0 * std::log10(p.L) -
                              4.0 * std::log10(epsilon) + std::log10(std::log(1.0 / delta));
  const double log10_T_real = std::log10(4.0) + 2.0 * p.log10_beta - 2.0 * std::log10(epsilon);
  constexpr double kMaxLog = 300.0;
  const double inf = std::numeric_limits<double>::infinity();

  p.beta = p.log10_beta < kMaxLog ? std::pow(10.0, p.log10_beta) : inf;
  if (log10_r_real < kMaxLog) {
    p.r = std::ceil(std::pow(10.0, log10_r_real));
    p.log10_r = std::log10(p.r);
  } else {
    p.r = inf;
    p.log10_r = log10_r_real;
  }
  if (log10_T_real < kMaxLog) {
    p.T = std::ceil(4.0 * p.beta * p.beta / (epsilon * epsilon));
    p.log10_T = std::log10(p.T);
  } else {
    p.T = inf;
    p.log10_T = log10_T_real;
  }
  p.eta = epsilon / (8.0 * p.r);
  p.log10_eta = std::log10(epsilon) - std::log10(8.0) - p.log10_r;
  p.infeasible_at_desk_scale = !(p.r <= 1e8);
  return p;
}

TrainConfig Theorem1Params::config() const {
  if (infeasible_at_desk_scale || !(T < 9e18))
    throw std::invalid_argument("hyperparameters are infeasible at desk scale");
  TrainConfig c;
  c.epsilon = epsilon;
  c.delta = delta;
  c.k = k;
  c.alpha = alpha;
  c.r = static_cast<int>(r);
  c.eta = eta;
  c.steps = static_cast<std::int64_t>(T);
  c.beta = beta;
  return c;
}

DriftReport drift_check(const TrainTrace& trace, const TrainConfig& config, const Activation& act,
                        std::optional<double> B, bool all_steps) {
  DriftReport rep;
  if (trace.size() == 0) return rep;
  rep.B = B ? *B : std::max({std::sqrt(static_cast<double>(config.r)), trace.w_norm[0], trace.u_norm[0]});
  const double L = act.lipschitz;
  rep.drift_epsilon = config.eta * L * rep.B * rep.B;
  const auto last = static_cast<std::int64_t>(trace.size()) - 1;
  rep.t_max = last;
  if (rep.drift_epsilon > 0.0) {
    const double t_bound = std::floor(rep.B / (2.0 * rep.drift_epsilon));
    if (t_bound < static_cast<double>(last)) rep.t_max = static_cast<std::int64_t>(t_bound);
  }
  rep.norm_slack = std::numeric_limits<double>::infinity();
  rep.drift_slack = std::numeric_limits<double>::infinity();
  const std::int64_t drift_end = all_steps ? last : rep.t_max;
  for (std::int64_t t = 0; t <= std::max(rep.t_max, drift_end); ++t) {
    const auto i = static_cast<std::size_t>(t);
    if (t <= rep.t_max) {
      rep.max_w_norm = std::max(rep.max_w_norm, trace.w_norm[i]);
      rep.max_u_norm = std::max(rep.max_u_norm, trace.u_norm[i]);
      const double slack = rep.B + 1.0 - std::max(trace.w_norm[i], trace.u_norm[i]);
      rep.norm_slack = std::min(rep.norm_slack, slack);
      if (slack < 0.0) ++rep.violations;
    }
    if (t <= drift_end) {
      const double bound = static_cast<double>(t) * config.eta * L * (rep.B + 1.0);
      const double slack = bound - trace.w_drift[i];
      rep.drift_slack = std::min(rep.drift_slack, slack);
      if (slack < -1e-12 * std::max(1.0, bound)) ++rep.violations;
    }
    ++rep.steps_checked;
  }
  return rep;
}

// ---------------------------------------------------------------------------

std::string net_to_json(const TwoLayerNet& net, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["d"] = net.d();
  j["r"] = net.r();
  j["activation"] = net.activation.name;
  j["seed"] = seed;
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(net.W.size()));
  for (Eigen::Index i = 0; i < net.W.rows(); ++i)
    for (Eigen::Index c = 0; c < net.W.cols(); ++c) w.push_back(net.W(i, c));
  j["W"] = w;
  j["U"] = std::vector<double>(net.U.data(), net.U.data() + net.U.size());
  return j.dump();
}

TwoLayerNet net_from_json(std::string_view text, std::uint64_t* seed) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    const int d = j.at("d").get<int>();
    const int r = j.at("r").get<int>();
    const auto w = j.at("W").get<std::vector<double>>();
    const auto u = j.at("U").get<std::vector<double>>();
    if (d < 1 || r < 1 || w.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(r) ||
        u.size() != static_cast<std::size_t>(r))
      throw std::invalid_argument("checkpoint shapes are inconsistent");
    TwoLayerNet net{Matrix(r, d), Vector(r), activation_by_name(j.at("activation").get<std::string>())};
    for (int i = 0; i < r; ++i)
      for (int c = 0; c < d; ++c) net.W(i, c) = w[static_cast<std::size_t>(i) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
    for (int i = 0; i < r; ++i) net.U[i] = u[static_cast<std::size_t>(i)];
    if (seed) *seed = j.value("seed", std::uint64_t{0});
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad checkpoint: ") + e.what());
  }
}

}  // namespace rflab
