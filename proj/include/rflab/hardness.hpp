#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rflab/features.hpp"
#include "rflab/numerics.hpp"

namespace rflab {

/// psi(x) = [x + a]_+ + sum_{n=1..a} 2 (-1)^n [x + a - 2n]_+ - 1 with a = 6 d^2 + 1.
/// On [-a, a] this is a unit-amplitude triangle wave of period 4 with kinks at the odd
/// integers; psi = -1 left of -a and decreases with slope -1 right of a.
struct PsiFunction {
  int d = 1;
  long a = 7;

  explicit PsiFunction(int dim);

  /// Closed-form evaluation (kink lookup plus linear interpolation).
  double operator()(double x) const;
  /// Sign of psi(1) (+1 or -1).
  int phase() const noexcept;
};

double psi_eval(const PsiFunction& psi, double x);

struct ReluNeuron {
  Vector w;
  double b = 0.0;
  double operator()(const Vector& x) const;
};

/// sum_j coef_j [x + offset_j]_+ + constant
struct ReluDecomposition {
  struct Term {
    double coefficient;
    double offset;
  };
  std::vector<Term> terms;
  double constant = 0.0;

  /// Direct summation in extended precision with compensation.
  double evaluate(double x) const;
};

/// a + 1 terms read off the definition: (1, a), then (2 (-1)^n, a - 2n) for n = 1..a.
ReluDecomposition psi_relu_decomposition(const PsiFunction& psi);

struct PsiReport {
  int d = 0;
  long a = 0;
  double oddness_residual = 0.0;      // max |psi(x) + psi(-x)| on the grid
  double periodicity_residual = 0.0;  // max |psi(x + 4) - psi(x)|, x in [-a, a - 4]
  double max_abs_on_range = 0.0;      // max |psi| on [-a, a]
  double interval_integral_min = 0.0; // over [n, n + 2], n even, inside [-a, a]
  double interval_integral_max = 0.0;
  double decomposition_error = 0.0;   // max |decomposition - psi| on the grid
  double lipschitz_estimate = 0.0;
  double psi0 = 0.0, psi2 = 0.0, psi_m2 = 0.0, psi1 = 0.0;
  int grid_points = 0;
};

/// Grid checks on [-a, a] plus exact per-interval integrals of psi^2 (Simpson on each
/// unit segment, where psi is linear).
PsiReport psi_properties_check(const PsiFunction& psi, int grid_points = 10000);

/// integral of psi^2 over [lo, hi], exact for a piecewise-linear psi with integer kinks.
double psi_sq_integral(const PsiFunction& psi, double lo, double hi);

/// E[psi(z)^2], z ~ N(0, w_norm^2), split at every kink in the +-13 sigma window.
double psi_gaussian_norm(const PsiFunction& psi, double w_norm, int order = 20);

// ---------------------------------------------------------------------------

/// Per-trial squared distance of a unit w* from span{w_1..w_r}, w_i ~ N(0, I/d).
/// Throws std::invalid_argument unless 0 <= r <= d.
std::vector<double> linear_residual(int d, int r, int trials, const RandomSource& rng, int jobs = 1);

// ---------------------------------------------------------------------------

/// Sum_i u_i [<w_i, x> + b_i]_+, w_i uniform on the unit sphere, b_i uniform on [-1, 1],
/// u_i ~ N(0, 1/r).
VectorFn random_relu_network(int d, int r, const RandomSource& rng);

struct CorrelationOptions {
  std::vector<int> d_values{2, 4, 6, 8, 10, 12};
  int trials = 64;
  int mc_samples = 100000;
  int jobs = 1;
};

struct CorrelationRow {
  int d = 0;
  double mean_sq = 0.0;  // mean over w of <f, psi_w>^2 / ||f||^2
  double std_error = 0.0;
  double f_norm_sq = 0.0;
  int trials = 0;
};

/// Builds f for a dimension.  Called once per d.
using FunctionFactory = std::function<VectorFn(int d)>;

/// For each d: w uniform on the radius-d sphere, x ~ N(0, I_d) shared across w.  The square
/// is estimated without bias as the product of the two half-sample means.
std::vector<CorrelationRow> correlation_decay(const FunctionFactory& f, const CorrelationOptions& options,
                                              const RandomSource& rng);

/// Number of k with mean_sq[k+1] exceeding mean_sq[k] by more than two combined standard errors.
int count_inversions(const std::vector<CorrelationRow>& rows);

// ---------------------------------------------------------------------------

struct NeuronSweepOptions {
  FeatureFamily family = FeatureFamily::affine_ridge(relu_activation(), WeightDistribution::uniform_sphere(1.0),
                                                     BiasDistribution::uniform(-2.0, 2.0));
  int r = 200;
  std::vector<int> d_values{2, 4, 6, 8, 10, 12, 15, 20};
  std::size_t n_train = 4000;
  std::vector<double> offsets{-3.0, -1.0, 1.0, 3.0};  // neuron target [d x_1 + c]_+
  bool control = true;  // also fit one of the sampled features
  int jobs = 1;
};

struct NeuronSweepRow {
  int d = 0;
  std::string target;  // "psi", "neuron" or "control"
  double offset = 0.0;
  double normalized_error = 0.0;
  double population_error = 0.0;
  double target_norm_sq = 0.0;
  double r_max_u = 0.0;
};

/// Features are sampled before the target is fixed (w* = d e_1).  The neuron row per d is the
/// worst over the candidate offsets; all offsets are also listed.
std::vector<NeuronSweepRow> neuron_inapprox_sweep(const NeuronSweepOptions& options, const RandomSource& rng);

struct SingleNeuronResult {
  Vector w;
  double b = 0.0;
  double normalized_error = 0.0;
  double train_loss = 0.0;
  int iterations = 0;
};

/// Full-batch gradient descent on (w, b) for the squared loss against [<w*, x> + b*]_+,
/// Gaussian inputs, best of a few restarts.  Error is measured on fresh inputs.
SingleNeuronResult train_single_neuron(const ReluNeuron& target, std::size_t n_train, const RandomSource& rng,
                                       int iterations = 3000, double step = 0.5, int restarts = 3);

// ---------------------------------------------------------------------------

/// Left side of the exp-via-ReLU identity:
///   int_0^1 [z - b]_+ e^b + s [-z - b]_+ e^-b + c z e^b + c e^b db,  c = 1/(e - 1).
/// s = +1 gives e^z for |z| <= 1; s = -1 is the variant that equals 2 + 2z - e^z for z < 0.
double relu_exp_identity_lhs(double z, int order = 20, int sign = +1);

/// max |lhs(z) - e^z| over the points.  Throws std::invalid_argument when |z| > 1.
double relu_exp_identity_check(const std::vector<double>& z_values, int order = 20, int sign = +1);

}  // namespace rflab
