#include "rflab/legendre.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace rflab {

MultiIndex::MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
  for (int j : entries_) {
    if (j < 0) throw std::invalid_argument("multi-index entries must be nonnegative");
    degree_ += j;
  }
}

bool MultiIndex::dominated_by(const MultiIndex& other) const {
  if (other.dimension() != dimension()) throw std::invalid_argument("multi-index dimensions differ");
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i] > other.entries_[i]) return false;
  return true;
}

std::string MultiIndex::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(entries_[i]);
  }
  return out;
}

MultiIndex MultiIndex::parse(std::string_view text) {
  std::vector<int> entries;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view token = text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
    int value = 0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    while (first != last && *first == ' ') ++first;
    while (last != first && *(last - 1) == ' ') --last;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (first == last || ec != std::errc{} || ptr != last)
      throw std::invalid_argument("malformed multi-index: \"" + std::string(text) + "\"");
    entries.push_back(value);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return MultiIndex(std::move(entries));
}

std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b) {
  if (auto c = a.degree_ <=> b.degree_; c != 0) return c;
  return a.entries_ <=> b.entries_;
}

namespace {

// Appends all length-(d - pos) tails summing to `remaining` in lexicographic order.
void compositions(int pos, int remaining, std::vector<int>& current, std::vector<MultiIndex>& out) {
  const int d = static_cast<int>(current.size());
  if (pos == d - 1) {
    current[static_cast<std::size_t>(pos)] = remaining;
    out.emplace_back(current);
    return;
  }
  for (int j = 0; j <= remaining; ++j) {
    current[static_cast<std::size_t>(pos)] = j;
    compositions(pos + 1, remaining - j, current, out);
  }
}

}  // namespace

std::vector<MultiIndex> enumerate_multi_indices(int d, int max_degree) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  std::vector<MultiIndex> out;
  std::vector<int> current(static_cast<std::size_t>(d), 0);
  for (int deg = 0; deg <= max_degree; ++deg) compositions(0, deg, current, out);
  return out;
}

std::vector<MultiIndex> enumerate_dominated(const MultiIndex& J) {
  std::vector<MultiIndex> out;
  std::vector<int> current(static_cast<std::size_t>(J.dimension()), 0);
  // odometer over the box prod [0, j_i]
  while (true) {
    out.emplace_back(current);
    int i = J.dimension() - 1;
    while (i >= 0 && current[static_cast<std::size_t>(i)] == J[i]) {
      current[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
    ++current[static_cast<std::size_t>(i)];
  }
  std::sort(out.begin(), out.end());
  return out;
}

double multinomial(const MultiIndex& J) {
  double result = 1.0;
  int n = 0;
  for (int j : J.entries()) {
    for (int t = 1; t <= j; ++t) result = result * (n + t) / t;
    n += j;
  }
  return result;
}

double legendre_eval(int n, double w) {
  if (n < 0) throw std::invalid_argument("Legendre degree must be >= 0");
  if (n == 0) return 1.0;
  double p_prev = 1.0;
  double p = w;
  for (int k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0) * w * p - k * p_prev) / (k + 1.0);
    p_prev = p;
    p = next;
  }
  return p;
}

std::vector<double> legendre_eval_all(int n, double w) {
  if (n < 0) throw std::invalid_argument("Legendre degree must be >= 0");
  std::vector<double> p(static_cast<std::size_t>(n) + 1);
  p[0] = 1.0;
  if (n >= 1) p[1] = w;
  for (int k = 1; k < n; ++k)
    p[static_cast<std::size_t>(k) + 1] = ((2.0 * k + 1.0) * w * p[static_cast<std::size_t>(k)] - k * p[static_cast<std::size_t>(k) - 1]) / (k + 1.0);
  return p;
}

double legendre_norm_sq(int n) {
  if (n < 0) throw std::invalid_argument("Legendre degree must be >= 0");
  return 2.0 / (2.0 * n + 1.0);
}

MonomialExpansionTable::MonomialExpansionTable(int max_degree)
    : max_degree_(max_degree),
      e_(static_cast<std::size_t>(max_degree + 1) * static_cast<std::size_t>(max_degree + 1), 0.0) {}

double MonomialExpansionTable::coefficient(int m, int n) const {
  if (m < 0 || n < 0 || m > max_degree_ || n > max_degree_)
    throw std::invalid_argument("monomial table index out of range");
  return e_[static_cast<std::size_t>(m) * static_cast<std::size_t>(max_degree_ + 1) + static_cast<std::size_t>(n)];
}

double MonomialExpansionTable::integral(int m, int n) const { return coefficient(m, n) * legendre_norm_sq(n); }

MonomialExpansionTable build_monomial_table(int m_max) {
  if (m_max < 0) throw std::invalid_argument("m_max must be >= 0");
  MonomialExpansionTable table(m_max);
  const auto stride = static_cast<std::size_t>(m_max + 1);
  auto at = [&](int m, int n) -> double& {
    return table.e_[static_cast<std::size_t>(m) * stride + static_cast<std::size_t>(n)];
  };
  at(0, 0) = 1.0;
  for (int m = 0; m < m_max; ++m) {
    for (int n = 0; n <= m + 1; ++n) {
      if ((m + 1 + n) % 2 != 0) continue;
      double v = 0.0;
      if (n >= 1) v += n / (2.0 * n - 1.0) * at(m, n - 1);
      if (n + 1 <= m) v += (n + 1.0) / (2.0 * n + 3.0) * at(m, n + 1);
      at(m + 1, n) = v;
    }
  }
  return table;
}

double multi_legendre_eval(const MultiIndex& J, const Vector& w) {
  if (w.size() != J.dimension()) throw std::invalid_argument("multi_legendre_eval: dimension mismatch");
  double v = 1.0;
  for (int i = 0; i < J.dimension(); ++i) {
    if (J[i] == 0) continue;
    v *= legendre_eval(J[i], w[i]);
  }
  return v;
}

double multi_norm_sq(const MultiIndex& J) {
  double v = 1.0;
  for (int j : J.entries()) v *= legendre_norm_sq(j);
  return v;
}

double multi_expansion_coeff(const MultiIndex& J, const MultiIndex& J_prime,
                             const MonomialExpansionTable& table) {
  if (J.dimension() != J_prime.dimension()) throw std::invalid_argument("multi-index dimensions differ");
  double v = 1.0;
  for (int i = 0; i < J.dimension(); ++i) {
    if (J[i] > table.max_degree() || J_prime[i] > table.max_degree())
      throw std::invalid_argument("multi-index degree exceeds the monomial table");
    if (J_prime[i] > J[i] || (J[i] + J_prime[i]) % 2 != 0) return 0.0;
    v *= table.coefficient(J[i], J_prime[i]);
  }
  return v;
}

}  // namespace rflab
