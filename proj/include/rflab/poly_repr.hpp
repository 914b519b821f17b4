#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rflab/legendre.hpp"
#include "rflab/numerics.hpp"

namespace rflab {

/// Scalar activation sigma.  `taylor` is empty for non-analytic activations (ReLU).
struct Activation {
  std::string name;
  ScalarFn value;
  ScalarFn derivative;
  std::function<double(int)> taylor;  // a_i, coefficient of z^i at 0
  double lipschitz = 1.0;             // valid on [-1, 1]
  std::vector<double> kinks;          // non-smooth points, for quadrature splitting

  double operator()(double z) const { return value(z); }
  bool analytic() const noexcept { return static_cast<bool>(taylor); }
  double taylor_coeff(int i) const;
  /// Degree-k Taylor polynomial at z.
  double truncated(double z, int k) const;
  /// min |a_i| over 0 <= i <= k with a_i != 0 (the lower bound a).
  double taylor_lower(int k) const;
  /// max |a_i| over 0 <= i <= k (the upper bound A).
  double taylor_upper(int k) const;
};

/// sigma = exp; a_i = 1/i!, L = e on [-1, 1].
Activation exp_activation();
/// sigma(z) = z.
Activation identity_activation();
/// sigma(z) = max(z, 0); not analytic.
Activation relu_activation();
/// Looks up "exp", "identity" or "relu"; throws std::invalid_argument otherwise.
Activation activation_by_name(const std::string& name);

/// Polynomial sum_J alpha_J x^J in d variables.
class SparsePolynomial {
 public:
  using Terms = std::map<MultiIndex, double>;

  explicit SparsePolynomial(int dimension);

  int dimension() const noexcept { return dimension_; }
  const Terms& terms() const noexcept { return terms_; }

  /// Adds `value` to alpha_J; throws std::invalid_argument on a length mismatch.
  void add_term(const MultiIndex& J, double value);
  double coefficient(const MultiIndex& J) const;

  /// max |J| over nonzero coefficients (0 for the zero polynomial).
  int degree() const;
  /// |P| = max_J |alpha_J|.
  double coeff_bound() const;

  double operator()(const Vector& x) const;

  SparsePolynomial& operator+=(const SparsePolynomial& other);
  friend SparsePolynomial operator+(SparsePolynomial a, const SparsePolynomial& b) { return a += b; }
  SparsePolynomial scaled(double factor) const;

 private:
  int dimension_;
  Terms terms_;
};

/// JSON object mapping "j1,...,jd" to alpha_J, with 17 significant digits.
std::string polynomial_to_json(const SparsePolynomial& p);
/// Parses the object above; the dimension is the key length.  An optional
/// "dimension" entry is honoured for the zero polynomial.  Throws std::invalid_argument.
SparsePolynomial polynomial_from_json(std::string_view text);

/// Polynomial with every J, |J| <= k, drawn uniformly from [-coeff_bound, coeff_bound].
SparsePolynomial random_polynomial(int d, int k, double coeff_bound, Rng& rng);

/// g(w) = sum_{|J| <= k} c_J p_J(sqrt(d) w) on the cube [-1/sqrt(d), 1/sqrt(d)]^d.
struct LegendreExpansion {
  int dimension = 1;
  int degree = 0;
  std::map<MultiIndex, double> coefficients;

  /// c_d = (sqrt(d)/2)^d, the inverse volume of the cube.
  double cube_normalizer() const;
};

class UnrepresentableMonomial : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solves the triangular system that makes c_d * int sigma_k(<w,x>) g(w) dw = P(x), where
/// sigma_k is the degree-k Taylor truncation of the activation (k = P.degree() unless given).
/// Coefficients are visited in graded-lex order so every J' < J is known before J.
/// Throws UnrepresentableMonomial when some alpha_J != 0 has a_{|J|} = 0, and
/// std::invalid_argument for a non-analytic activation or an undersized table.
LegendreExpansion construct_g(const SparsePolynomial& P, const Activation& act,
                              const MonomialExpansionTable& table, int k = -1);

/// g(w).  Throws std::invalid_argument when w leaves the cube (tolerance 1e-12) or the
/// dimension differs.
double eval_g(const LegendreExpansion& g, const Vector& w);

/// Per-point residuals c_d * int_cube s(<w,x>) g(w) dw - P(x) by tensor Gauss-Legendre of
/// the given order per axis, with s the degree-g.degree Taylor truncation when `truncate`
/// is set and the full activation otherwise.
std::vector<double> verify_representation(const SparsePolynomial& P, const LegendreExpansion& g,
                                          const Activation& act, const std::vector<Vector>& x_points,
                                          int quad_order, bool truncate);

/// c_d * int_cube sigma(<w,x>) g(w) dw at each point (full activation).
std::vector<double> represented_values(const LegendreExpansion& g, const Activation& act,
                                       const std::vector<Vector>& x_points, int quad_order);

/// max |g| over a tensor grid of the cube with about `points` nodes (corners included).
double max_abs_g(const LegendreExpansion& g, int points = 10000);

/// log10 of alpha^k (A/a)^k (12 d)^{2 k^2}.
double log10_g_bound(double alpha, double A, double a, int d, int k);

}  // namespace rflab
