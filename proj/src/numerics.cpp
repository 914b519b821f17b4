#include "rflab/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include <Eigen/Eigenvalues>

namespace rflab {

namespace {

constexpr double kNewtonTol = 1e-15;
constexpr int kNewtonMaxIter = 100;
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

void require_order(int order) {
  if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
}

}  // namespace

QuadratureRule gauss_legendre_rule(int order) {
  require_order(order);
  const int n = order;
  QuadratureRule rule{QuadratureKind::gauss_legendre, std::vector<double>(n), std::vector<double>(n)};
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 1.0;
    for (int it = 0; it < kNewtonMaxIter; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z_prev = z;
      z = z_prev - p1 / pp;
      if (std::abs(z - z_prev) <= kNewtonTol * std::max(1.0, std::abs(z))) break;
    }
    if (n % 2 == 1 && i == m - 1) z = 0.0;
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

QuadratureRule gauss_hermite_rule(int order) {
  require_order(order);
  // Golub-Welsch on the probabilists' Hermite Jacobi matrix
  const int n = order;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  QuadratureRule rule{QuadratureKind::gauss_hermite, std::vector<double>(n), std::vector<double>(n)};
  for (int i = 0; i < n; ++i) {
    // Newton polish on the orthonormal recurrence, Christoffel weight 1 / sum p_k^2
    double x = eig.eigenvalues()[i];
    double sum_sq = 0.0;
    for (int it = 0; it < 3; ++it) {
      double p0 = 1.0, p1 = x, dp0 = 0.0, dp1 = 1.0;
      sum_sq = 1.0 + (n > 1 ? x * x : 0.0);
      for (int k = 1; k < n; ++k) {
        const double a = std::sqrt(static_cast<double>(k + 1)), b = std::sqrt(static_cast<double>(k));
        const double p2 = (x * p1 - b * p0) / a;
        const double dp2 = (p1 + x * dp1 - b * dp0) / a;
        p0 = p1;
        p1 = p2;
        dp0 = dp1;
        dp1 = dp2;
        if (k + 1 < n) sum_sq += p1 * p1;
      }
      if (n == 1) {
        p1 = x;
        dp1 = 1.0;
        sum_sq = 1.0;
      }
      if (dp1 != 0.0) x -= p1 / dp1;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / sum_sq;
  }
  // symmetrise
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

double gaussian_expectation_piecewise(const ScalarFn& f, double sigma,
                                      std::span<const double> breakpoints, int order) {
  if (!(sigma > 0.0)) return f(0.0);
  const auto rule = gauss_legendre_rule(order);
  const double lo = -13.0 * sigma;
  const double hi = 13.0 * sigma;
  std::vector<double> cuts{lo, hi};
  for (double b : breakpoints)
    if (b > lo && b < hi) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  const double max_piece = 0.5 * sigma;
  auto integrand = [&](double z) {
    const double t = z / sigma;
    return f(z) * norm * std::exp(-0.5 * t * t);
  };
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s];
    const double b = cuts[s + 1];
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / max_piece)));
    const double h = (b - a) / pieces;
    for (int p = 0; p < pieces; ++p) {
      const double pa = a + p * h;
      const double pb = (p + 1 == pieces) ? b : pa + h;
      total += rule.integrate(pa, pb, integrand);
    }
  }
  return total;
}

double gaussian_ridge_norm_sq(const ScalarFn& phi, double w_norm, int order,
                              std::span<const double> kinks) {
  require_order(order);
  if (w_norm < 0.0) throw std::invalid_argument("w_norm must be non-negative");
  if (w_norm == 0.0) {
    const double v = phi(0.0);
    return v * v;
  }
  if (kinks.empty()) {
    const auto rule = gauss_hermite_rule(order);
    return rule.apply([&](double t) {
      const double v = phi(w_norm * t);
      return v * v;
    });
  }
  return gaussian_expectation_piecewise(
      [&](double z) {
        const double v = phi(z);
        return v * v;
      },
      w_norm, kinks, order);
}

double gaussian_ridge_inner(const ScalarFn& phi, const Vector& w, const ScalarFn& rho,
                            const Vector& v, int order, std::span<const double> phi_kinks,
                            std::span<const double> rho_kinks) {
  require_order(order);
  if (w.size() != v.size()) throw std::invalid_argument("direction dimensions differ");
  const double nw = w.norm();
  const double nv = v.norm();
  if (nw == 0.0 || nv == 0.0) throw std::invalid_argument("zero-norm direction");
  const double c = std::clamp(w.dot(v) / (nw * nv), -1.0, 1.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  constexpr double kDegenerate = 1e-12;

  // <w,x> = nw t1,  <v,x> = nv (c t1 + s t2),  t1, t2 iid N(0,1)
  if (phi_kinks.empty() && rho_kinks.empty()) {
    const auto rule = gauss_hermite_rule(order);
    double total = 0.0;
    for (std::size_t i = 0; i < rule.order(); ++i) {
      const double t1 = rule.nodes[i];
      const double a = phi(nw * t1);
      double inner = 0.0;
      for (std::size_t j = 0; j < rule.order(); ++j)
        inner += rule.weights[j] * rho(nv * (c * t1 + s * rule.nodes[j]));
      total += rule.weights[i] * a * inner;
    }
    return total;
  }

  std::vector<double> outer_breaks;
  for (double k : phi_kinks) outer_breaks.push_back(k / nw);
  if (std::abs(c) > kDegenerate)
    for (double k : rho_kinks) outer_breaks.push_back(k / (nv * c));

  auto conditional_rho = [&](double t1) {
    if (s < kDegenerate) return rho(nv * c * t1);
    std::vector<double> inner_breaks;
    inner_breaks.reserve(rho_kinks.size());
    for (double k : rho_kinks) inner_breaks.push_back((k / nv - c * t1) / s);
    return gaussian_expectation_piecewise([&](double t2) { return rho(nv * (c * t1 + s * t2)); },
                                          1.0, inner_breaks, order);
  };
  return gaussian_expectation_piecewise([&](double t1) { return phi(nw * t1) * conditional_rho(t1); },
                                        1.0, outer_breaks, order);
}

// ---------------------------------------------------------------------------

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

RandomSource RandomSource::child(std::uint64_t index) const noexcept {
  return {seed, mix64(stream_id ^ mix64(index ^ 0xD1B54A32D192ED03ull))};
}

CounterEngine::CounterEngine(const RandomSource& src) noexcept
    : key_(mix64(src.seed ^ mix64(src.stream_id + 0x632BE59BD9B4E019ull))) {}

CounterEngine::result_type CounterEngine::operator()() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGoldenGamma);
}

double Rng::uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() { return normal_(engine_); }

Vector Rng::gaussian_vector(int d) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = normal();
  return v;
}

Vector Rng::cube_vector(int d, double half_width) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = uniform(-half_width, half_width);
  return v;
}

Vector Rng::sphere_vector(int d, double radius) {
  Vector v = gaussian_vector(d);
  double n = v.norm();
  while (n == 0.0) {
    v = gaussian_vector(d);
    n = v.norm();
  }
  return v * (radius / n);
}

Vector Rng::ball_vector(int d, double radius) {
  Vector v = sphere_vector(d, 1.0);
  return v * (radius * std::pow(uniform(), 1.0 / d));
}

Vector Measure::sample(int d, Rng& rng) const {
  switch (kind) {
    case Kind::standard_gaussian:
      return rng.gaussian_vector(d);
    case Kind::uniform_cube:
      return rng.cube_vector(d, 1.0 / std::sqrt(static_cast<double>(d)));
    case Kind::uniform_sphere:
      return rng.sphere_vector(d, radius);
  }
  throw std::logic_error("unknown measure");
}

EstimateWithError mc_expectation(const VectorFn& f, int d, const Measure& measure, std::size_t n,
                                 const RandomSource& src) {
  if (n < 2) throw std::invalid_argument("mc_expectation needs at least two samples");
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  Rng rng(src);
  RunningStats stats;
  for (std::size_t i = 0; i < n; ++i) stats.push(f(measure.sample(d, rng)));
  return {stats.mean(), stats.std_error(), n};
}

void RunningStats::push(double x) noexcept {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

double RunningStats::variance() const noexcept {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double RunningStats::std_error() const noexcept {
  return n_ == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

int default_jobs() noexcept {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace rflab
