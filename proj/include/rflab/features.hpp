#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rflab/numerics.hpp"
#include "rflab/poly_repr.hpp"

namespace rflab {

struct WeightDistribution {
  enum class Kind { uniform_cube, uniform_sphere, gaussian };
  Kind kind = Kind::uniform_cube;
  double param = 1.0;  // sphere radius or gaussian scale; unused for the cube

  /// Uniform on [-1/sqrt(d), 1/sqrt(d)]^d.
  static WeightDistribution uniform_cube() { return {Kind::uniform_cube, 1.0}; }
  static WeightDistribution uniform_sphere(double radius) { return {Kind::uniform_sphere, radius}; }
  /// N(0, scale^2 I_d).
  static WeightDistribution gaussian(double scale) { return {Kind::gaussian, scale}; }

  Vector sample(int d, Rng& rng) const;
  std::string describe() const;
};

struct BiasDistribution {
  enum class Kind { none, uniform, gaussian };
  Kind kind = Kind::none;
  double lo = 0.0;  // uniform: [lo, hi]; gaussian: N(0, hi^2)
  double hi = 0.0;

  static BiasDistribution none() { return {}; }
  static BiasDistribution uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static BiasDistribution gaussian(double scale) { return {Kind::gaussian, 0.0, scale}; }

  double sample(Rng& rng) const;
  std::string describe() const;
};

/// A distribution over feature functions x -> f(x):
///   ridge:        sigma(<w,x>)
///   affine_ridge: sigma(<w,x> + b)
///   coupling:     x_j 1{<w,x> >= 0}, one feature per (neuron, coordinate)
struct FeatureFamily {
  enum class Variant { ridge, affine_ridge, coupling };
  Variant variant = Variant::ridge;
  Activation activation;
  WeightDistribution weights;
  BiasDistribution bias;

  static FeatureFamily ridge(Activation act, WeightDistribution w);
  static FeatureFamily affine_ridge(Activation act, WeightDistribution w, BiasDistribution b);
  static FeatureFamily coupling(WeightDistribution w);

  std::string describe() const;
};

/// r sampled parameter sets of a family in dimension d.
struct FeatureSample {
  FeatureFamily family;
  int d = 1;
  int r = 0;
  Matrix W;  // r x d, row i = w_i
  Vector b;  // length r for affine_ridge, empty otherwise
  RandomSource provenance;

  /// r, or r * d for the coupling family.
  Eigen::Index feature_count() const noexcept;
  /// All feature values at x.
  Vector evaluate(const Vector& x) const;
  /// The first r' sampled neurons (equal to sampling r' with the same source).
  FeatureSample prefix(int r_prefix) const;
};

/// Draws w_1, b_1, w_2, b_2, ... from a single stream, so prefixes are nested.
FeatureSample sample_features(const FeatureFamily& family, int d, int r, const RandomSource& rng);

/// m x feature_count matrix of f_i(x_t); X holds one point per row.
/// Throws std::invalid_argument on dimension mismatch.
Matrix feature_matrix(const FeatureSample& sample, const Matrix& X);

/// x -> sum_i u_i f_i(x) + intercept.
struct LinearCombination {
  Vector weights;
  double intercept = 0.0;

  double predict(const FeatureSample& sample, const Vector& x) const;
  Vector predict(const FeatureSample& sample, const Matrix& X) const;
  double max_abs_weight() const;
};

/// u_i = g(w_i) / r for a cube sample; throws std::invalid_argument otherwise.
LinearCombination approximant_from_g(const LegendreExpansion& g, const FeatureSample& sample);

/// max_t |predict(x_t) - target(x_t)|.  Throws std::invalid_argument for an empty probe set.
double sup_error_estimate(const LinearCombination& c, const FeatureSample& sample, const VectorFn& target,
                          const std::vector<Vector>& probe_points);

// ---------------------------------------------------------------------------

struct ConcentrationOptions {
  std::vector<int> r_values{64, 128, 256, 512, 1024, 2048, 4096};
  int trials = 20;
  int probes = 2000;
  double delta = 0.01;
  int quad_order = 0;  // per axis for the reference integral; 0 selects degree + 12
  int jobs = 1;
};

struct ConcentrationRow {
  int r = 0;
  int trial = 0;
  double sup_error = 0.0;
  double max_abs_u = 0.0;
  std::uint64_t stream = 0;  // stream id of the feature draw
  double envelope = 0.0;     // (L C / sqrt r)(4 + sqrt(2 ln(1/delta)))
};

struct ConcentrationSummary {
  int r = 0;
  double mean_sup_error = 0.0;
  double std_sup_error = 0.0;
  double envelope = 0.0;
};

struct ConcentrationResult {
  std::vector<ConcentrationRow> rows;  // ordered by (r, trial)
  std::vector<ConcentrationSummary> summary;
  double C = 0.0;  // max |g| over the cube
  double L = 0.0;  // Lipschitz constant of the activation
  double slope = 0.0;  // least-squares slope of log(mean error) against log(r)
  int envelope_violations = 0;
};

/// Builds g for P, then for each (r, trial) samples r cube features, forms u_i = g(w_i)/r and
/// measures the sup error against c_d int sigma(<w,x>) g(w) dw over probe points drawn
/// uniformly from the unit ball.
ConcentrationResult concentration_experiment(const SparsePolynomial& P, const Activation& act,
                                             const ConcentrationOptions& options, const RandomSource& rng);

/// Slope of the least-squares line through (log x, log y).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------

class IllConditioned : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solves (Phi^T Phi + lambda I) u = Phi^T y (intercept column appended when requested).
/// Throws IllConditioned when lambda == 0 and the Gram matrix is numerically singular.
LinearCombination solve_ridge(const Matrix& Phi, const Vector& y, double lambda, bool intercept = false);

/// ||Phi u + c - y||^2 + lambda ||u||^2
double ridge_objective(const Matrix& Phi, const Vector& y, const LinearCombination& fit, double lambda);

struct LeastSquaresResult {
  LinearCombination fit;
  double population_error = 0.0;     // held-out mean squared error
  double population_error_se = 0.0;
  double target_norm_sq = 0.0;       // held-out mean of target^2
  double train_error = 0.0;          // training mean squared error
  double max_abs_u = 0.0;
  double lambda = 0.0;

  double normalized_error() const { return target_norm_sq > 0.0 ? population_error / target_norm_sq : 0.0; }
};

/// Fits u on n_train standard Gaussian inputs and reports the squared error on
/// 10 * n_train fresh inputs.  Without an explicit ridge_lambda the default
/// 1e-10 * trace(Gram) / r is used.
LeastSquaresResult least_squares_fit(const FeatureSample& sample, const VectorFn& target, std::size_t n_train,
                                     const RandomSource& rng, std::optional<double> ridge_lambda = std::nullopt,
                                     bool intercept = false);

}  // namespace rflab
