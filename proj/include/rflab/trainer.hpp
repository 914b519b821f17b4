#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rflab/numerics.hpp"
#include "rflab/poly_repr.hpp"

namespace rflab {

/// N(x) = sum_i u_i sigma(<w_i, x>), no bias inside the activation.
struct TwoLayerNet {
  Matrix W;  // r x d
  Vector U;  // r
  Activation activation;

  int d() const noexcept { return static_cast<int>(W.cols()); }
  int r() const noexcept { return static_cast<int>(W.rows()); }
};

/// Rows uniform on [-1/sqrt(d), 1/sqrt(d)]^d, U = 0.
TwoLayerNet xavier_init(int d, int r, const Activation& act, Rng& rng);

double forward(const TwoLayerNet& net, const Vector& x);

/// max(0, 1 - y_hat * y); throws std::invalid_argument unless y is +1 or -1.
double hinge_loss(double y_hat, double y);

struct Gradients {
  Matrix dW;
  Vector dU;
};

/// Subgradient of the hinge loss of N(x) at label y (the kink takes the active branch).
Gradients gradients(const TwoLayerNet& net, const Vector& x, double y);

// ---------------------------------------------------------------------------

struct TrainConfig {
  double epsilon = 0.1;
  double delta = 0.1;
  int k = 2;
  double alpha = 1.0;
  int r = 1000;
  double eta = 0.01;
  std::int64_t steps = 200000;
  double beta = 0.0;  // informational
  std::uint64_t seed = 0;

  int validation_size = 2000;
  std::int64_t eval_every = 0;  // 0 selects max(1, steps / 100)
  std::size_t dataset_size = 0;  // 0: fresh example each step; otherwise resample a fixed set
};

/// Entry t describes (W_t, U_t); loss[t] is the loss of that network on the example drawn at step t.
struct TrainTrace {
  std::vector<double> loss;
  std::vector<double> run_avg;
  std::vector<double> w_drift;  // ||W_t - W_0||_F
  std::vector<double> u_norm;
  std::vector<double> w_norm;   // ||W_t||_F

  std::size_t size() const noexcept { return loss.size(); }
};

struct ValidationPoint {
  std::int64_t step = 0;
  double loss = 0.0;
};

struct TrainResult {
  TwoLayerNet best;
  TwoLayerNet final_net;
  std::int64_t best_step = 0;
  double best_validation_loss = 0.0;
  double initial_validation_loss = 0.0;
  std::vector<ValidationPoint> validation;
  TrainTrace trace;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Draws one labelled example with ||x|| <= 1 and y in {-1, +1}.
using ExampleSampler = std::function<std::pair<Vector, double>(Rng&)>;

/// x uniform in the unit ball, kept when |P(x)| >= margin, labelled sign(P(x)).
ExampleSampler polynomial_sign_sampler(const SparsePolynomial& P, double margin);

/// Mean hinge loss of x -> scale * P(x) on a set of examples.
double polynomial_hinge_loss(const SparsePolynomial& P, double scale,
                             const std::vector<std::pair<Vector, double>>& examples);

/// The validation set sgd_train draws for a given seed (same stream).
std::vector<std::pair<Vector, double>> validation_set(const ExampleSampler& sampler, const TrainConfig& config);

double mean_hinge_loss(const TwoLayerNet& net, const std::vector<std::pair<Vector, double>>& examples);

/// Plain SGD, one example per step, from xavier_init.  Throws TrainingDiverged on a
/// non-finite loss and std::invalid_argument for an invalid configuration.
TrainResult sgd_train(int d, const ExampleSampler& sampler, const TrainConfig& config, const Activation& act);

/// Same, starting from a given network.
TrainResult sgd_train_from(TwoLayerNet init, const ExampleSampler& sampler, const TrainConfig& config);

// ---------------------------------------------------------------------------

/// The plug-in hyperparameters.  Values are kept as log10 because beta^6 overflows
/// doubles quickly; the plain fields are +inf when out of range.
struct Theorem1Params {
  double epsilon = 0.0;
  double delta = 0.0;
  int d = 0;
  int k = 0;
  double alpha = 0.0;
  double a = 0.0;  // min nonzero Taylor coefficient
  double A = 0.0;  // max Taylor coefficient
  double L = 0.0;

  double log10_beta = 0.0;
  double log10_r = 0.0;
  double log10_T = 0.0;
  double log10_eta = 0.0;
  double beta = 0.0;
  double r = 0.0;
  double T = 0.0;
  double eta = 0.0;
  bool infeasible_at_desk_scale = false;

  /// Config with the derived values; throws std::invalid_argument when infeasible.
  TrainConfig config() const;
};

Theorem1Params theorem1_params(double epsilon, double delta, int d, int k, double alpha, const Activation& act);

// ---------------------------------------------------------------------------

struct DriftReport {
  double B = 0.0;
  double drift_epsilon = 0.0;  // eta L B^2
  std::int64_t t_max = 0;      // floor(B / (2 epsilon)), capped at the trace length
  std::int64_t steps_checked = 0;
  double max_w_norm = 0.0;
  double max_u_norm = 0.0;
  double norm_slack = 0.0;   // min over checked t of (B + 1) - max(||W_t||, ||U_t||)
  double drift_slack = 0.0;  // min over checked t of t eta L (B + 1) - ||W_t - W_0||_F
  int violations = 0;
  bool passed() const noexcept { return violations == 0; }
};

/// Checks the norm and drift bounds for t <= B/(2 eta L B^2).  With `all_steps`, the drift
/// bound is also checked at every recorded step.  B defaults to max(sqrt(r), ||W_0||_F, ||U_0||).
DriftReport drift_check(const TrainTrace& trace, const TrainConfig& config, const Activation& act,
                        std::optional<double> B = std::nullopt, bool all_steps = false);

// ---------------------------------------------------------------------------

/// {"d", "r", "activation", "seed", "W" (row-major), "U"}
std::string net_to_json(const TwoLayerNet& net, std::uint64_t seed);
TwoLayerNet net_from_json(std::string_view text, std::uint64_t* seed = nullptr);

}  // namespace rflab
