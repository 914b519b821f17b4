#pragma once

#include <compare>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "rflab/numerics.hpp"

namespace rflab {

/// Multi-index J = (j_1, ..., j_d) of nonnegative exponents.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries);
  MultiIndex(std::initializer_list<int> entries) : MultiIndex(std::vector<int>(entries)) {}
  /// The zero multi-index of length d.
  static MultiIndex zeros(int d) { return MultiIndex(std::vector<int>(static_cast<std::size_t>(d), 0)); }

  int dimension() const noexcept { return static_cast<int>(entries_.size()); }
  int degree() const noexcept { return degree_; }
  int operator[](int i) const { return entries_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& entries() const noexcept { return entries_; }

  /// Entrywise order: *this <= other iff j_i <= j'_i for every i.
  bool dominated_by(const MultiIndex& other) const;

  /// "j1,j2,...,jd"
  std::string to_string() const;
  /// Parses "j1,j2,...,jd"; throws std::invalid_argument on malformed input.
  static MultiIndex parse(std::string_view text);

  /// Graded lexicographic order: total degree first, then lexicographic entries.
  friend std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b);
  friend bool operator==(const MultiIndex& a, const MultiIndex& b) = default;

 private:
  std::vector<int> entries_;
  int degree_ = 0;
};

/// All multi-indices of length d with |J| <= max_degree, ascending degree, lexicographic
/// within a degree.  Every J' <= J (entrywise, J' != J) precedes J in this order.
std::vector<MultiIndex> enumerate_multi_indices(int d, int max_degree);

/// All J' with J' <= J entrywise (including J itself), in graded-lex order.
std::vector<MultiIndex> enumerate_dominated(const MultiIndex& J);

/// |J|! / (j_1! ... j_d!)
double multinomial(const MultiIndex& J);

/// Classical Legendre polynomial p_n(w) (p_0 = 1, p_1 = w) by the three-term recurrence.
double legendre_eval(int n, double w);

/// All of p_0(w) .. p_n(w).
std::vector<double> legendre_eval_all(int n, double w);

/// Integral of p_n^2 over [-1, 1]: 2 / (2n + 1).
double legendre_norm_sq(int n);

/// Expansion coefficients e(m, n) with w^m = sum_n e(m, n) p_n(w), 0 <= n <= m <= max_degree.
class MonomialExpansionTable {
 public:
  explicit MonomialExpansionTable(int max_degree);

  int max_degree() const noexcept { return max_degree_; }
  /// e(m, n); zero outside 0 <= n <= m or for odd m + n.
  double coefficient(int m, int n) const;
  /// I(m, n) = integral of w^m p_n(w) over [-1, 1] = e(m, n) * 2/(2n+1).
  double integral(int m, int n) const;

 private:
  friend MonomialExpansionTable build_monomial_table(int m_max);

  int max_degree_;
  std::vector<double> e_;  // row-major (max_degree+1)^2
};

/// Builds the table by e(m+1, n) = n/(2n-1) e(m, n-1) + (n+1)/(2n+3) e(m, n+1), e(0,0) = 1.
/// Throws std::invalid_argument for a negative degree.
MonomialExpansionTable build_monomial_table(int m_max);

/// p_J(w) = prod_i p_{j_i}(w_i).  Throws std::invalid_argument on dimension mismatch.
double multi_legendre_eval(const MultiIndex& J, const Vector& w);

/// ||p_J||^2 over [-1,1]^d = prod_i 2/(2 j_i + 1).
double multi_norm_sq(const MultiIndex& J);

/// b_{J,J'} in w^J = sum_{J' <= J} b_{J,J'} p_{J'}(w), i.e. prod_i e(j_i, j'_i).
/// Throws std::invalid_argument when an entry exceeds the table's degree or the
/// dimensions differ.
double multi_expansion_coeff(const MultiIndex& J, const MultiIndex& J_prime,
                             const MonomialExpansionTable& table);

}  // namespace rflab
