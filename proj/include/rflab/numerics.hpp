#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rflab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Scalar function of a scalar argument (activations, ridge profiles).
using ScalarFn = std::function<double(double)>;
/// Function on R^d.
using VectorFn = std::function<double(const Vector&)>;

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

enum class QuadratureKind {
  gauss_legendre,   // weight 1 on [-1, 1]
  gauss_hermite,    // weight exp(-z^2/2)/sqrt(2 pi) on R (probabilists')
};

/// Gauss rule with nodes/weights for either the uniform measure on [-1,1]
/// (total mass 2) or the standard normal density (total mass 1).
struct QuadratureRule {
  QuadratureKind kind;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t order() const noexcept { return nodes.size(); }

  /// Sum of weight * f(node).
  template <class F>
  double apply(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }

  /// Integral of f over [lo, hi]; Gauss-Legendre rules only.
  template <class F>
  double integrate(double lo, double hi, F&& f) const {
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(mid + half * nodes[i]);
    return half * s;
  }
};

/// Gauss-Legendre rule on [-1,1]; exact for polynomials of degree <= 2*order-1.
/// Throws std::invalid_argument when order == 0.
QuadratureRule gauss_legendre_rule(int order);

/// Probabilists' Gauss-Hermite rule: apply(f) approximates E[f(z)], z ~ N(0,1).
/// Throws std::invalid_argument when order == 0.
QuadratureRule gauss_hermite_rule(int order);

/// E[f(z)] for z ~ N(0, sigma^2) by composite Gauss-Legendre on [-13 sigma, 13 sigma],
/// split at every breakpoint inside that window and into pieces no wider than sigma/2.
/// Use this for integrands with kinks; breakpoints are in the z domain.
double gaussian_expectation_piecewise(const ScalarFn& f, double sigma,
                                      std::span<const double> breakpoints, int order = 20);

/// E[phi(z)^2] with z ~ N(0, w_norm^2).  Without kinks this is plain Gauss-Hermite;
/// with kinks (locations in the argument of phi) the piecewise rule is used.
double gaussian_ridge_norm_sq(const ScalarFn& phi, double w_norm, int order,
                              std::span<const double> kinks = {});

/// E[phi(<w,x>) rho(<v,x>)] with x ~ N(0, I_d).  The pair (<w,x>, <v,x>) is whitened to
/// two independent standard normals; kinks of phi and rho (in their own arguments)
/// are honoured by splitting.  Throws std::invalid_argument for a zero-norm direction
/// or mismatched dimensions.
double gaussian_ridge_inner(const ScalarFn& phi, const Vector& w, const ScalarFn& rho,
                            const Vector& v, int order, std::span<const double> phi_kinks = {},
                            std::span<const double> rho_kinks = {});

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

/// Identifies a reproducible random stream.  Streams are keyed by (seed, stream_id);
/// the generator is counter based, so streams never overlap and can be handed to
/// concurrent workers without coordination.
struct RandomSource {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  /// A child stream, deterministically derived from this one and `index`.
  RandomSource child(std::uint64_t index) const noexcept;

  friend bool operator==(const RandomSource&, const RandomSource&) = default;
};

/// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Counter-based 64-bit engine satisfying UniformRandomBitGenerator.
/// Output n is mix64(key + (n+1) * golden), i.e. SplitMix64 over a per-stream key.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  explicit CounterEngine(const RandomSource& src) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;
  void discard(std::uint64_t n) noexcept { counter_ += n; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Convenience sampler over a CounterEngine.
class Rng {
 public:
  explicit Rng(const RandomSource& src) : engine_(src) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t bits() noexcept { return engine_(); }

  Vector gaussian_vector(int d);
  /// Uniform in the cube [-half_width, half_width]^d.
  Vector cube_vector(int d, double half_width);
  /// Uniform on the sphere of the given radius.
  Vector sphere_vector(int d, double radius);
  /// Uniform in the ball of the given radius.
  Vector ball_vector(int d, double radius);

  CounterEngine& engine() noexcept { return engine_; }

 private:
  CounterEngine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

struct EstimateWithError {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
};

/// Sampling measure on R^d.
struct Measure {
  enum class Kind { standard_gaussian, uniform_cube, uniform_sphere };
  Kind kind = Kind::standard_gaussian;
  double radius = 1.0;  // uniform_sphere only

  static Measure standard_gaussian() { return {Kind::standard_gaussian, 1.0}; }
  /// Uniform on [-1/sqrt(d), 1/sqrt(d)]^d.
  static Measure uniform_cube() { return {Kind::uniform_cube, 1.0}; }
  static Measure uniform_sphere(double radius) { return {Kind::uniform_sphere, radius}; }

  Vector sample(int d, Rng& rng) const;
};

/// Sample mean of f over n draws from the measure, with standard error
/// s/sqrt(n) (s the unbiased sample standard deviation).
/// Throws std::invalid_argument when n < 2.
EstimateWithError mc_expectation(const VectorFn& f, int d, const Measure& measure,
                                 std::size_t n, const RandomSource& rng);

/// Running mean/variance accumulator (Welford).
class RunningStats {
 public:
  void push(double x) noexcept;
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const noexcept;
  double std_error() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.  Each index must write only
/// its own output slot; results are therefore independent of the thread count.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Default worker count (hardware concurrency, at least 1).
int default_jobs() noexcept;

}  // namespace rflab
