#include "rflab/poly_repr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "json.hpp"

namespace rflab {

double Activation::taylor_coeff(int i) const {
  if (!taylor) throw std::invalid_argument("activation '" + name + "' has no Taylor expansion");
  return taylor(i);
}

double Activation::truncated(double z, int k) const {
  // Horner from the top coefficient.
  double v = 0.0;
  for (int i = k; i >= 0; --i) v = v * z + taylor_coeff(i);
  return v;
}

double Activation::taylor_lower(int k) const {
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= k; ++i) {
    const double a = std::abs(taylor_coeff(i));
    if (a != 0.0) lo = std::min(lo, a);
  }
  return std::isinf(lo) ? 0.0 : lo;
}

double Activation::taylor_upper(int k) const {
  double hi = 0.0;
  for (int i = 0; i <= k; ++i) hi = std::max(hi, std::abs(taylor_coeff(i)));
  return hi;
}

Activation exp_activation() {
  Activation act;
  act.name = "exp";
  act.value = [](double z) { return std::exp(z); };
  act.derivative = [](double z) { return std::exp(z); };
  act.taylor = [](int i) {
    double f = 1.0;
    for (int t = 2; t <= i; ++t) f /= t;
    return i < 0 ? 0.0 : f;
  };
  act.lipschitz = std::numbers::e;
  return act;
}

Activation identity_activation() {
  Activation act;
  act.name = "identity";
  act.value = [](double z) { return z; };
  act.derivative = [](double) { return 1.0; };
  act.taylor = [](int i) { return i == 1 ? 1.0 : 0.0; };
  act.lipschitz = 1.0;
  return act;
}

Activation relu_activation() {
  Activation act;
  act.name = "relu";
  act.value = [](double z) { return z > 0.0 ? z : 0.0; };
  act.derivative = [](double z) { return z > 0.0 ? 1.0 : 0.0; };
  act.lipschitz = 1.0;
  act.kinks = {0.0};
  return act;
}

Activation activation_by_name(const std::string& name) {
  if (name == "exp") return exp_activation();
  if (name == "identity") return identity_activation();
  if (name == "relu") return relu_activation();
  throw std::invalid_argument("unknown activation '" + name + "'");
}

// ---------------------------------------------------------------------------

SparsePolynomial::SparsePolynomial(int dimension) : dimension_(dimension) {
  if (dimension < 1) throw std::invalid_argument("polynomial dimension must be >= 1");
}

void SparsePolynomial::add_term(const MultiIndex& J, double value) {
  if (J.dimension() != dimension_) throw std::invalid_argument("multi-index length differs from polynomial dimension");
  terms_[J] += value;
}

double SparsePolynomial::coefficient(const MultiIndex& J) const {
  const auto it = terms_.find(J);
  return it == terms_.end() ? 0.0 : it->second;
}

int SparsePolynomial::degree() const {
  int k = 0;
  for (const auto& [J, a] : terms_)
    if (a != 0.0) k = std::max(k, J.degree());
  return k;
}

double SparsePolynomial::coeff_bound() const {
  double m = 0.0;
  for (const auto& [J, a] : terms_) m = std::max(m, std::abs(a));
  return m;
}

double SparsePolynomial::operator()(const Vector& x) const {
  if (x.size() != dimension_) throw std::invalid_argument("polynomial evaluated at a point of wrong dimension");
  double total = 0.0;
  for (const auto& [J, a] : terms_) {
    double mono = a;
    for (int i = 0; i < dimension_; ++i)
      for (int p = 0; p < J[i]; ++p) mono *= x[i];
    total += mono;
  }
  return total;
}

SparsePolynomial& SparsePolynomial::operator+=(const SparsePolynomial& other) {
  if (other.dimension_ != dimension_) throw std::invalid_argument("adding polynomials of different dimension");
  for (const auto& [J, a] : other.terms_) terms_[J] += a;
  return *this;
}

SparsePolynomial SparsePolynomial::scaled(double factor) const {
  SparsePolynomial out(dimension_);
  for (const auto& [J, a] : terms_) out.terms_[J] = a * factor;
  return out;
}

std::string polynomial_to_json(const SparsePolynomial& p) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [J, a] : p.terms()) j[J.to_string()] = a;
  if (p.terms().empty()) j["dimension"] = p.dimension();
  return j.dump();
}

SparsePolynomial polynomial_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("polynomial JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("polynomial JSON must be an object");
  int d = -1;
  if (j.contains("dimension")) d = j.at("dimension").get<int>();
  std::vector<std::pair<MultiIndex, double>> entries;
  for (const auto& [key, value] : j.items()) {
    if (key == "dimension") continue;
    if (!value.is_number()) throw std::invalid_argument("polynomial coefficient for '" + key + "' is not a number");
    MultiIndex J = MultiIndex::parse(key);
    if (d < 0) d = J.dimension();
    if (J.dimension() != d) throw std::invalid_argument("inconsistent multi-index length in '" + key + "'");
    entries.emplace_back(std::move(J), value.get<double>());
  }
  if (d < 1) throw std::invalid_argument("polynomial JSON has no terms and no dimension");
  SparsePolynomial p(d);
  for (const auto& [J, a] : entries) p.add_term(J, a);
  return p;
}

SparsePolynomial random_polynomial(int d, int k, double coeff_bound, Rng& rng) {
  SparsePolynomial p(d);
  for (const auto& J : enumerate_multi_indices(d, k)) p.add_term(J, rng.uniform(-coeff_bound, coeff_bound));
  return p;
}

// ---------------------------------------------------------------------------

double LegendreExpansion::cube_normalizer() const {
  return std::pow(std::sqrt(static_cast<double>(dimension)) / 2.0, dimension);
}

LegendreExpansion construct_g(const SparsePolynomial& P, const Activation& act,
                              const MonomialExpansionTable& table, int k) {
  if (!act.analytic()) throw std::invalid_argument("construct_g needs an analytic activation");
  if (k < 0) k = P.degree();
  if (table.max_degree() < k) throw std::invalid_argument("monomial table degree is below the polynomial degree");
  const int d = P.dimension();
  for (const auto& [J, a] : P.terms())
    if (a != 0.0 && J.degree() > k) throw std::invalid_argument("polynomial has a monomial above degree k");

  LegendreExpansion g;
  g.dimension = d;
  g.degree = k;
  const double half_pow_d = std::pow(0.5, d);
  const double sqrt_d = std::sqrt(static_cast<double>(d));

  for (const auto& J : enumerate_multi_indices(d, k)) {
    const double a = act.taylor_coeff(J.degree());
    const double alpha = P.coefficient(J);
    if (a == 0.0) {
      if (alpha != 0.0)
        throw UnrepresentableMonomial("monomial x^(" + J.to_string() + ") needs Taylor coefficient a_" +
                                      std::to_string(J.degree()) + " of '" + act.name + "', which is zero");
      g.coefficients[J] = 0.0;
      continue;
    }
    // x^J coefficient of the represented function:
    //   (1/2)^d a_|J| M(J) d^{-|J|/2} sum_{J' <= J} c_J' b_{J,J'} ||p_J'||^2
    // where M(J) is the multinomial coefficient from expanding <w,x>^|J|.
    const double scale = half_pow_d * a * multinomial(J) / std::pow(sqrt_d, J.degree());
    double lower = 0.0;
    for (const auto& Jp : enumerate_dominated(J)) {
      if (Jp == J) continue;
      const double b = multi_expansion_coeff(J, Jp, table);
      if (b == 0.0) continue;
      lower += b * g.coefficients.at(Jp) * multi_norm_sq(Jp);
    }
    const double diag = multi_expansion_coeff(J, J, table) * multi_norm_sq(J);
    g.coefficients[J] = (alpha - scale * lower) / (scale * diag);
  }
  return g;
}

namespace {

// prod_i p_{J_i}(t_i) given per-axis tables p_all[i][n] = p_n(t_i).
double product_eval(const MultiIndex& J, const std::vector<std::vector<double>>& p_all) {
  double v = 1.0;
  for (int i = 0; i < J.dimension(); ++i) v *= p_all[static_cast<std::size_t>(i)][static_cast<std::size_t>(J[i])];
  return v;
}

double eval_g_scaled(const LegendreExpansion& g, const Vector& t) {
  std::vector<std::vector<double>> p_all;
  p_all.reserve(static_cast<std::size_t>(g.dimension));
  for (int i = 0; i < g.dimension; ++i) p_all.push_back(legendre_eval_all(g.degree, t[i]));
  double total = 0.0;
  for (const auto& [J, c] : g.coefficients)
    if (c != 0.0) total += c * product_eval(J, p_all);
  return total;
}

// Visits every node of the tensor rule on [-1,1]^d as (t, product weight).
template <class F>
void for_each_tensor_node(const QuadratureRule& rule, int d, F&& fn) {
  const auto q = static_cast<int>(rule.order());
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Vector t(d);
  while (true) {
    double weight = 1.0;
    for (int i = 0; i < d; ++i) {
      const auto k = static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);
      t[i] = rule.nodes[k];
      weight *= rule.weights[k];
    }
    fn(t, weight);
    int i = d - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == q - 1) {
      idx[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
  }
}

std::vector<double> cube_integrals(const LegendreExpansion& g, const ScalarFn& s,
                                   const std::vector<Vector>& x_points, int quad_order) {
  const int d = g.dimension;
  const auto rule = gauss_legendre_rule(quad_order);
  std::vector<Vector> nodes;
  std::vector<double> weighted_g;
  for_each_tensor_node(rule, d, [&](const Vector& t, double weight) {
    nodes.push_back(t);
    weighted_g.push_back(weight * eval_g_scaled(g, t));
  });
  // w = t / sqrt(d):  c_d * (1/sqrt(d))^d = (1/2)^d
  const double half_pow_d = std::pow(0.5, d);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> out;
  out.reserve(x_points.size());
  for (const auto& x : x_points) {
    if (x.size() != d) throw std::invalid_argument("probe point has wrong dimension");
    double total = 0.0;
    for (std::size_t n = 0; n < nodes.size(); ++n) total += weighted_g[n] * s(nodes[n].dot(x) * inv_sqrt_d);
    out.push_back(half_pow_d * total);
  }
  return out;
}

}  // namespace

double eval_g(const LegendreExpansion& g, const Vector& w) {
  if (w.size() != g.dimension) throw std::invalid_argument("eval_g: dimension mismatch");
  const double sqrt_d = std::sqrt(static_cast<double>(g.dimension));
  const double limit = 1.0 / sqrt_d + 1e-12;
  for (int i = 0; i < w.size(); ++i)
    if (std::abs(w[i]) > limit) throw std::invalid_argument("eval_g: point outside the cube [-1/sqrt(d), 1/sqrt(d)]^d");
  return eval_g_scaled(g, w * sqrt_d);
}

std::vector<double> represented_values(const LegendreExpansion& g, const Activation& act,
                                       const std::vector<Vector>& x_points, int quad_order) {
  return cube_integrals(g, act.value, x_points, quad_order);
}

std::vector<double> verify_representation(const SparsePolynomial& P, const LegendreExpansion& g,
                                          const Activation& act, const std::vector<Vector>& x_points,
                                          int quad_order, bool truncate) {
  if (P.dimension() != g.dimension) throw std::invalid_argument("polynomial and expansion dimensions differ");
  ScalarFn s = act.value;
  if (truncate) {
    const int k = g.degree;
    s = [&act, k](double z) { return act.truncated(z, k); };
  }
  auto values = cube_integrals(g, s, x_points, quad_order);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= P(x_points[i]);
  return values;
}

double max_abs_g(const LegendreExpansion& g, int points) {
  const int d = g.dimension;
  const int per_axis = std::max(2, static_cast<int>(std::round(std::pow(static_cast<double>(points), 1.0 / d))));
  // grid in scaled coordinates t = sqrt(d) w in [-1, 1]
  QuadratureRule grid{QuadratureKind::gauss_legendre, std::vector<double>(static_cast<std::size_t>(per_axis)),
                      std::vector<double>(static_cast<std::size_t>(per_axis), 1.0)};
  for (int i = 0; i < per_axis; ++i) grid.nodes[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / (per_axis - 1);
  double m = 0.0;
  for_each_tensor_node(grid, d, [&](const Vector& t, double) { m = std::max(m, std::abs(eval_g_scaled(g, t))); });
  return m;
}

double log10_g_bound(double alpha, double A, double a, int d, int k) {
  if (k == 0) return 0.0;
  return k * std::log10(alpha) + k * std::log10(A / a) + 2.0 * k * k * std::log10(12.0 * d);
}

}  // namespace rflab
