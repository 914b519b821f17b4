#include "rflab/hardness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rflab {

PsiFunction::PsiFunction(int dim) : d(dim), a(6L * dim * dim + 1) {
  if (dim < 1) throw std::invalid_argument("psi needs d >= 1");
}

int PsiFunction::phase() const noexcept { return ((a + 1) / 2) % 2 == 1 ? 1 : -1; }

namespace {

// odd triangle wave, period 4, tri(1) = 1; evaluated on |x| so oddness is exact
double triangle(double x) {
  const double ax = std::abs(x);
  const double t = ax - 4.0 * std::floor(ax / 4.0);
  double v;
  if (t <= 1.0)
    v = t;
  else if (t <= 3.0)
    v = 2.0 - t;
  else
    v = t - 4.0;
  return x < 0.0 ? -v : v;
}

}  // namespace

double PsiFunction::operator()(double x) const {
  const auto A = static_cast<double>(a);
  if (x < -A) return -1.0;
  if (x > A) return 1.0 - (x - A);
  return phase() * triangle(x);
}

double psi_eval(const PsiFunction& psi, double x) { return psi(x); }

double ReluNeuron::operator()(const Vector& x) const {
  if (x.size() != w.size()) throw std::invalid_argument("neuron input has wrong dimension");
  return std::max(0.0, w.dot(x) + b);
}

double ReluDecomposition::evaluate(double x) const {
  // Neumaier summation in long double
  long double sum = constant;
  long double comp = 0.0L;
  for (const auto& t : terms) {
    const long double arg = static_cast<long double>(x) + t.offset;
    if (arg <= 0.0L) continue;
    const long double v = t.coefficient * arg;
    const long double s = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - s) + v;
    else
      comp += (v - s) + sum;
    sum = s;
  }
  return static_cast<double>(sum + comp);
}

ReluDecomposition psi_relu_decomposition(const PsiFunction& psi) {
  ReluDecomposition dec;
  dec.terms.reserve(static_cast<std::size_t>(psi.a) + 1);
  dec.terms.push_back({1.0, static_cast<double>(psi.a)});
  for (long n = 1; n <= psi.a; ++n)
    dec.terms.push_back({n % 2 == 0 ? 2.0 : -2.0, static_cast<double>(psi.a - 2 * n)});
  dec.constant = -1.0;
  return dec;
}

double psi_sq_integral(const PsiFunction& psi, double lo, double hi) {
  if (hi < lo) return -psi_sq_integral(psi, hi, lo);
  double total = 0.0;
  double left = lo;
  while (left < hi) {
    const double right = std::min(hi, std::floor(left) + 1.0);
    const double fl = psi(left), fr = psi(right), fm = psi(0.5 * (left + right));
    // Simpson is exact for the quadratic psi^2 on a linear piece
    total += (right - left) / 6.0 * (fl * fl + 4.0 * fm * fm + fr * fr);
    left = right;
  }
  return total;
}

PsiReport psi_properties_check(const PsiFunction& psi, int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");
  PsiReport rep;
  rep.d = psi.d;
  rep.a = psi.a;
  rep.grid_points = grid_points;
  const auto A = static_cast<double>(psi.a);
  const double h = 2.0 * A / (grid_points - 1);
  double prev = psi(-A);
  for (int i = 0; i < grid_points; ++i) {
    const double x = i == grid_points - 1 ? A : -A + i * h;
    const double v = psi(x);
    rep.oddness_residual = std::max(rep.oddness_residual, std::abs(v + psi(-x)));
    rep.max_abs_on_range = std::max(rep.max_abs_on_range, std::abs(v));
    if (i > 0) rep.lipschitz_estimate = std::max(rep.lipschitz_estimate, std::abs(v - prev) / h);
    prev = v;
  }
  const auto dec = psi_relu_decomposition(psi);
  for (int i = 0; i < grid_points; ++i) {
    const double x = i == grid_points - 1 ? A : -A + i * h;
    rep.decomposition_error = std::max(rep.decomposition_error, std::abs(dec.evaluate(x) - psi(x)));
  }
  const double hp = (2.0 * A - 4.0) / (grid_points - 1);
  for (int i = 0; i < grid_points; ++i) {
    const double x = -A + i * hp;
    rep.periodicity_residual = std::max(rep.periodicity_residual, std::abs(psi(x + 4.0) - psi(x)));
  }
  rep.interval_integral_min = std::numeric_limits<double>::infinity();
  rep.interval_integral_max = -std::numeric_limits<double>::infinity();
  for (long n = -psi.a + 1; n + 2 <= psi.a; n += 2) {
    const double v = psi_sq_integral(psi, static_cast<double>(n), static_cast<double>(n + 2));
    rep.interval_integral_min = std::min(rep.interval_integral_min, v);
    rep.interval_integral_max = std::max(rep.interval_integral_max, v);
  }
  rep.psi0 = psi(0.0);
  rep.psi2 = psi(2.0);
  rep.psi_m2 = psi(-2.0);
  rep.psi1 = psi(1.0);
  return rep;
}

double psi_gaussian_norm(const PsiFunction& psi, double w_norm, int order) {
  if (!(w_norm > 0.0)) throw std::invalid_argument("w_norm must be > 0");
  const double reach = std::min(static_cast<double>(psi.a), std::ceil(13.0 * w_norm) + 1.0);
  std::vector<double> kinks;
  for (long k = -psi.a; k <= psi.a; k += 2)
    if (std::abs(static_cast<double>(k)) <= reach) kinks.push_back(static_cast<double>(k));
  return gaussian_expectation_piecewise(
      [&](double z) {
        const double v = psi(z);
        return v * v;
      },
      w_norm, kinks, order);
}

// ---------------------------------------------------------------------------

std::vector<double> linear_residual(int d, int r, int trials, const RandomSource& rng, int jobs) {
  if (d < 1 || r < 0 || r > d) throw std::invalid_argument("linear_residual needs 0 <= r <= d");
  if (trials < 0) throw std::invalid_argument("trials must be >= 0");
  std::vector<double> out(static_cast<std::size_t>(trials));
  parallel_for(out.size(), jobs, [&](std::size_t t) {
    Rng g(rng.child(t));
    Matrix W(d, r);
    for (int i = 0; i < r; ++i) W.col(i) = g.gaussian_vector(d) / std::sqrt(static_cast<double>(d));
    const Vector w_star = g.sphere_vector(d, 1.0);
    if (r == 0) {
      out[t] = w_star.squaredNorm();
      return;
    }
    const Eigen::HouseholderQR<Matrix> qr(W);
    const Matrix Q = qr.householderQ() * Matrix::Identity(d, r);
    out[t] = (w_star - Q * (Q.transpose() * w_star)).squaredNorm();
  });
  return out;
}

// ---------------------------------------------------------------------------

VectorFn random_relu_network(int d, int r, const RandomSource& rng) {
  Rng g(rng);
  Matrix W(r, d);
  Vector b(r), u(r);
  for (int i = 0; i < r; ++i) {
    W.row(i) = g.sphere_vector(d, 1.0).transpose();
    b[i] = g.uniform(-1.0, 1.0);
    u[i] = g.normal() / std::sqrt(static_cast<double>(r));
  }
  return [W, b, u](const Vector& x) {
    return u.dot((W * x + b).cwiseMax(0.0));
  };
}

std::vector<CorrelationRow> correlation_decay(const FunctionFactory& f, const CorrelationOptions& options,
                                              const RandomSource& rng) {
  if (options.trials < 2 || options.mc_samples < 4) throw std::invalid_argument("need trials >= 2 and mc_samples >= 4");
  std::vector<CorrelationRow> rows;
  for (int d : options.d_values) {
    if (d < 2) throw std::invalid_argument("correlation_decay needs d >= 2");
    const VectorFn fd = f(d);
    const PsiFunction psi(d);
    const RandomSource src = rng.child(static_cast<std::uint64_t>(d));
    const Eigen::Index half = options.mc_samples / 2;
    Matrix X(2 * half, d);
    Vector fx(2 * half);
    Rng xr(src.child(0));
    for (Eigen::Index t = 0; t < X.rows(); ++t) {
      const Vector x = xr.gaussian_vector(d);
      X.row(t) = x.transpose();
      fx[t] = fd(x);
    }
    const double f_norm_sq = fx.squaredNorm() / static_cast<double>(fx.size());
    std::vector<double> est(static_cast<std::size_t>(options.trials));
    parallel_for(est.size(), options.jobs, [&](std::size_t trial) {
      Rng wr(src.child(1 + trial));
      const Vector w = wr.sphere_vector(d, static_cast<double>(d));
      const Vector z = X * w;
      double m1 = 0.0, m2 = 0.0;
      for (Eigen::Index t = 0; t < half; ++t) m1 += fx[t] * psi(z[t]);
      for (Eigen::Index t = half; t < 2 * half; ++t) m2 += fx[t] * psi(z[t]);
      m1 /= static_cast<double>(half);
      m2 /= static_cast<double>(half);
      est[trial] = f_norm_sq > 0.0 ? m1 * m2 / f_norm_sq : 0.0;
    });
    RunningStats s;
    for (double v : est) s.push(v);
    rows.push_back({d, s.mean(), s.std_error(), f_norm_sq, options.trials});
  }
  return rows;
}

int count_inversions(const std::vector<CorrelationRow>& rows) {
  int n = 0;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const double bar = 2.0 * std::hypot(rows[k].std_error, rows[k + 1].std_error);
    if (rows[k + 1].mean_sq > rows[k].mean_sq + bar) ++n;
  }
  return n;
}

// ---------------------------------------------------------------------------

std::vector<NeuronSweepRow> neuron_inapprox_sweep(const NeuronSweepOptions& options, const RandomSource& rng) {
  if (options.r < 1 || options.n_train < 1) throw std::invalid_argument("need r >= 1 and n_train >= 1");
  std::vector<std::vector<NeuronSweepRow>> per_d(options.d_values.size());
  parallel_for(per_d.size(), options.jobs, [&](std::size_t di) {
    const int d = options.d_values[di];
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    const RandomSource src = rng.child(static_cast<std::uint64_t>(d));
    // features first, target afterwards
    const FeatureSample sample = sample_features(options.family, d, options.r, src.child(0));
    const RandomSource data = src.child(1);
    const double dd = static_cast<double>(d);
    auto& out = per_d[di];
    auto record = [&](const std::string& name, double offset, const LeastSquaresResult& fit) {
      out.push_back({d, name, offset, fit.normalized_error(), fit.population_error, fit.target_norm_sq,
                     options.r * fit.max_abs_u});
    };

    const PsiFunction psi(d);
    record("psi", 0.0, least_squares_fit(sample, [&](const Vector& x) { return psi(dd * x[0]); }, options.n_train, data));

    NeuronSweepRow worst;
    worst.normalized_error = -1.0;
    for (double c : options.offsets) {
      const auto fit = least_squares_fit(
          sample, [&](const Vector& x) { return std::max(0.0, dd * x[0] + c); }, options.n_train, data);
      record("neuron", c, fit);
      if (out.back().normalized_error > worst.normalized_error) worst = out.back();
    }
    if (!options.offsets.empty()) {
      worst.target = "neuron_worst";
      out.push_back(worst);
    }

    if (options.control) {
      const FeatureSample first = sample.prefix(1);
      record("control", 0.0,
             least_squares_fit(sample, [&](const Vector& x) { return first.evaluate(x)[0]; }, options.n_train, data));
    }
  });
  std::vector<NeuronSweepRow> rows;
  for (auto& v : per_d) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

SingleNeuronResult train_single_neuron(const ReluNeuron& target, std::size_t n_train, const RandomSource& rng,
                                       int iterations, double step, int restarts) {
  const auto d = static_cast<int>(target.w.size());
  if (d < 1 || n_train < 1 || restarts < 1) throw std::invalid_argument("bad single-neuron setup");
  Rng data(rng.child(1));
  const auto n = static_cast<Eigen::Index>(n_train);
  Matrix X(n, d);
  Vector y(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Vector x = data.gaussian_vector(d);
    X.row(t) = x.transpose();
    y[t] = target(x);
  }

  SingleNeuronResult best;
  best.train_loss = std::numeric_limits<double>::infinity();
  for (int k = 0; k < restarts; ++k) {
    Rng init(rng.child(10 + static_cast<std::uint64_t>(k)));
    Vector w = init.sphere_vector(d, 1.0);
    double b = 0.0;
    double loss = 0.0;
    int it = 0;
    for (; it < iterations; ++it) {
      const Vector z = (X * w).array() + b;
      const Vector resid = z.cwiseMax(0.0) - y;
      loss = 0.5 * resid.squaredNorm() / static_cast<double>(n);
      const Vector g = (z.array() > 0.0).select(resid, 0.0);
      w -= step * (X.transpose() * g) / static_cast<double>(n);
      b -= step * g.sum() / static_cast<double>(n);
      if (!std::isfinite(loss)) break;
    }
    if (loss < best.train_loss) {
      best.w = w;
      best.b = b;
      best.train_loss = loss;
      best.iterations = it;
    }
  }

  Rng held(rng.child(2));
  RunningStats err, norm;
  const ReluNeuron fitted{best.w, best.b};
  for (std::size_t t = 0; t < 10 * n_train; ++t) {
    const Vector x = held.gaussian_vector(d);
    const double v = target(x);
    const double e = fitted(x) - v;
    err.push(e * e);
    norm.push(v * v);
  }
  best.normalized_error = norm.mean() > 0.0 ? err.mean() / norm.mean() : err.mean();
  return best;
}

// ---------------------------------------------------------------------------

double relu_exp_identity_lhs(double z, int order, int sign) {
  if (std::abs(z) > 1.0) throw std::invalid_argument("identity needs |z| <= 1");
  if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
  const double c = 1.0 / (std::exp(1.0) - 1.0);
  const auto rule = gauss_legendre_rule(order);
  auto integrand = [&](double b) {
    return std::max(z - b, 0.0) * std::exp(b) + sign * std::max(-z - b, 0.0) * std::exp(-b) + c * z * std::exp(b) +
           c * std::exp(b);
  };
  const double kink = std::abs(z);
  double total = rule.integrate(kink, 1.0, integrand);
  if (kink > 0.0) total += rule.integrate(0.0, kink, integrand);
  return total;
}

double relu_exp_identity_check(const std::vector<double>& z_values, int order, int sign) {
  double worst = 0.0;
  for (double z : z_values) worst = std::max(worst, std::abs(relu_exp_identity_lhs(z, order, sign) - std::exp(z)));
  return worst;
}

}  // namespace rflab
