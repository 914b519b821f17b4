#include "rflab/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rflab {

namespace {

constexpr Eigen::Index kBlockRows = 512;

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Applies the family's feature map to a block of points (rows of X).
Matrix feature_block(const FeatureSample& s, const Matrix& X) {
  const Matrix Z = X * s.W.transpose();  // m x r
  switch (s.family.variant) {
    case FeatureFamily::Variant::ridge:
      return Z.unaryExpr([&](double z) { return s.family.activation.value(z); });
    case FeatureFamily::Variant::affine_ridge: {
      Matrix shifted = Z.rowwise() + s.b.transpose();
      return shifted.unaryExpr([&](double z) { return s.family.activation.value(z); });
    }
    case FeatureFamily::Variant::coupling: {
      Matrix out(X.rows(), static_cast<Eigen::Index>(s.r) * s.d);
      for (Eigen::Index t = 0; t < X.rows(); ++t)
        for (int i = 0; i < s.r; ++i) {
          const double gate = Z(t, i) >= 0.0 ? 1.0 : 0.0;
          for (int j = 0; j < s.d; ++j) out(t, static_cast<Eigen::Index>(i) * s.d + j) = gate * X(t, j);
        }
      return out;
    }
  }
  throw std::logic_error("unknown feature family");
}

Matrix rows_to_matrix(const std::vector<Vector>& pts, int d) {
  Matrix X(static_cast<Eigen::Index>(pts.size()), d);
  for (std::size_t t = 0; t < pts.size(); ++t) {
    if (pts[t].size() != d) throw std::invalid_argument("point has wrong dimension");
    X.row(static_cast<Eigen::Index>(t)) = pts[t].transpose();
  }
  return X;
}

}  // namespace

Vector WeightDistribution::sample(int d, Rng& rng) const {
  switch (kind) {
    case Kind::uniform_cube:
      return rng.cube_vector(d, 1.0 / std::sqrt(static_cast<double>(d)));
    case Kind::uniform_sphere:
      return rng.sphere_vector(d, param);
    case Kind::gaussian:
      return rng.gaussian_vector(d) * param;
  }
  throw std::logic_error("unknown weight distribution");
}

std::string WeightDistribution::describe() const {
  switch (kind) {
    case Kind::uniform_cube:
      return "uniform_cube";
    case Kind::uniform_sphere:
      return "uniform_sphere(" + format_number(param) + ")";
    case Kind::gaussian:
      return "gaussian(" + format_number(param) + ")";
  }
  return "?";
}

double BiasDistribution::sample(Rng& rng) const {
  switch (kind) {
    case Kind::none:
      return 0.0;
    case Kind::uniform:
      return rng.uniform(lo, hi);
    case Kind::gaussian:
      return hi * rng.normal();
  }
  return 0.0;
}

std::string BiasDistribution::describe() const {
  switch (kind) {
    case Kind::none:
      return "none";
    case Kind::uniform:
      return "uniform(" + format_number(lo) + "," + format_number(hi) + ")";
    case Kind::gaussian:
      return "gaussian(" + format_number(hi) + ")";
  }
  return "?";
}

FeatureFamily FeatureFamily::ridge(Activation act, WeightDistribution w) {
  return {Variant::ridge, std::move(act), w, BiasDistribution::none()};
}

FeatureFamily FeatureFamily::affine_ridge(Activation act, WeightDistribution w, BiasDistribution b) {
  return {Variant::affine_ridge, std::move(act), w, b};
}

FeatureFamily FeatureFamily::coupling(WeightDistribution w) {
  return {Variant::coupling, Activation{}, w, BiasDistribution::none()};
}

std::string FeatureFamily::describe() const {
  switch (variant) {
    case Variant::ridge:
      return "ridge(" + activation.name + "," + weights.describe() + ")";
    case Variant::affine_ridge:
      return "affine_ridge(" + activation.name + "," + weights.describe() + "," + bias.describe() + ")";
    case Variant::coupling:
      return "coupling(" + weights.describe() + ")";
  }
  return "?";
}

Eigen::Index FeatureSample::feature_count() const noexcept {
  return family.variant == FeatureFamily::Variant::coupling ? static_cast<Eigen::Index>(r) * d : r;
}

Vector FeatureSample::evaluate(const Vector& x) const {
  if (x.size() != d) throw std::invalid_argument("feature input has wrong dimension");
  return feature_block(*this, x.transpose()).row(0).transpose();
}

FeatureSample FeatureSample::prefix(int r_prefix) const {
  if (r_prefix < 0 || r_prefix > r) throw std::invalid_argument("prefix larger than the sample");
  FeatureSample out = *this;
  out.r = r_prefix;
  out.W = W.topRows(r_prefix);
  if (b.size() > 0) out.b = b.head(r_prefix);
  return out;
}

FeatureSample sample_features(const FeatureFamily& family, int d, int r, const RandomSource& src) {
  if (d < 1 || r < 1) throw std::invalid_argument("sample_features needs d >= 1 and r >= 1");
  FeatureSample s{family, d, r, Matrix(r, d), Vector(), src};
  const bool has_bias = family.variant == FeatureFamily::Variant::affine_ridge;
  if (has_bias) s.b.resize(r);
  Rng rng(src);
  for (int i = 0; i < r; ++i) {
    s.W.row(i) = family.weights.sample(d, rng).transpose();
    if (has_bias) s.b[i] = family.bias.sample(rng);
  }
  return s;
}

Matrix feature_matrix(const FeatureSample& sample, const Matrix& X) {
  if (X.cols() != sample.d) throw std::invalid_argument("feature_matrix: points have wrong dimension");
  return feature_block(sample, X);
}

double LinearCombination::predict(const FeatureSample& sample, const Vector& x) const {
  return sample.evaluate(x).dot(weights) + intercept;
}

Vector LinearCombination::predict(const FeatureSample& sample, const Matrix& X) const {
  if (weights.size() != sample.feature_count()) throw std::invalid_argument("weight count differs from feature count");
  Vector out(X.rows());
  for (Eigen::Index start = 0; start < X.rows(); start += kBlockRows) {
    const Eigen::Index rows = std::min(kBlockRows, X.rows() - start);
    out.segment(start, rows) = feature_matrix(sample, X.middleRows(start, rows)) * weights;
  }
  out.array() += intercept;
  return out;
}

double LinearCombination::max_abs_weight() const {
  return weights.size() == 0 ? 0.0 : weights.cwiseAbs().maxCoeff();
}

LinearCombination approximant_from_g(const LegendreExpansion& g, const FeatureSample& sample) {
  if (sample.family.weights.kind != WeightDistribution::Kind::uniform_cube ||
      sample.family.variant != FeatureFamily::Variant::ridge)
    throw std::invalid_argument("approximant_from_g needs ridge features drawn from the cube");
  LinearCombination c;
  c.weights.resize(sample.r);
  for (int i = 0; i < sample.r; ++i) c.weights[i] = eval_g(g, sample.W.row(i).transpose()) / sample.r;
  return c;
}

double sup_error_estimate(const LinearCombination& c, const FeatureSample& sample, const VectorFn& target,
                          const std::vector<Vector>& probe_points) {
  if (probe_points.empty()) throw std::invalid_argument("sup_error_estimate: empty probe set");
  const Vector pred = c.predict(sample, rows_to_matrix(probe_points, sample.d));
  double worst = 0.0;
  for (std::size_t t = 0; t < probe_points.size(); ++t)
    worst = std::max(worst, std::abs(pred[static_cast<Eigen::Index>(t)] - target(probe_points[t])));
  return worst;
}

// ---------------------------------------------------------------------------

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope needs two or more pairs");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConcentrationResult concentration_experiment(const SparsePolynomial& P, const Activation& act,
                                             const ConcentrationOptions& options, const RandomSource& rng) {
  if (options.r_values.empty() || options.trials < 1 || options.probes < 1)
    throw std::invalid_argument("concentration_experiment: empty r list, trials or probes");
  const int d = P.dimension();
  const int k = P.degree();
  const auto table = build_monomial_table(std::max(k, 1));
  const LegendreExpansion g = construct_g(P, act, table, k);

  ConcentrationResult result;
  result.C = max_abs_g(g);
  result.L = act.lipschitz;

  Rng probe_rng(rng.child(0));
  std::vector<Vector> probes;
  probes.reserve(static_cast<std::size_t>(options.probes));
  for (int t = 0; t < options.probes; ++t) probes.push_back(probe_rng.ball_vector(d, 1.0));
  const int quad = options.quad_order > 0 ? options.quad_order : k + 12;
  const std::vector<double> reference = represented_values(g, act, probes, quad);
  const Matrix X = rows_to_matrix(probes, d);

  const FeatureFamily family = FeatureFamily::ridge(act, WeightDistribution::uniform_cube());
  const double tail = 4.0 + std::sqrt(2.0 * std::log(1.0 / options.delta));

  const std::size_t cells = options.r_values.size() * static_cast<std::size_t>(options.trials);
  result.rows.resize(cells);
  parallel_for(cells, options.jobs, [&](std::size_t cell) {
    const int r = options.r_values[cell / static_cast<std::size_t>(options.trials)];
    const int trial = static_cast<int>(cell % static_cast<std::size_t>(options.trials));
    const RandomSource stream = rng.child(0x1000u + static_cast<std::uint64_t>(r)).child(static_cast<std::uint64_t>(trial));
    const FeatureSample sample = sample_features(family, d, r, stream);
    const LinearCombination c = approximant_from_g(g, sample);
    const Vector pred = c.predict(sample, X);
    double worst = 0.0;
    for (Eigen::Index t = 0; t < pred.size(); ++t)
      worst = std::max(worst, std::abs(pred[t] - reference[static_cast<std::size_t>(t)]));
    ConcentrationRow& row = result.rows[cell];
    row.r = r;
    row.trial = trial;
    row.sup_error = worst;
    row.max_abs_u = c.max_abs_weight();
    row.stream = stream.stream_id;
    row.envelope = result.L * result.C / std::sqrt(static_cast<double>(r)) * tail;
  });

  std::vector<double> rs, means;
  for (std::size_t ri = 0; ri < options.r_values.size(); ++ri) {
    RunningStats stats;
    for (int t = 0; t < options.trials; ++t) {
      const auto& row = result.rows[ri * static_cast<std::size_t>(options.trials) + static_cast<std::size_t>(t)];
      stats.push(row.sup_error);
      if (row.sup_error > row.envelope) ++result.envelope_violations;
    }
    const int r = options.r_values[ri];
    result.summary.push_back({r, stats.mean(), std::sqrt(stats.variance()),
                              result.L * result.C / std::sqrt(static_cast<double>(r)) * tail});
    rs.push_back(r);
    means.push_back(stats.mean());
  }
  result.slope = rs.size() >= 2 ? loglog_slope(rs, means) : 0.0;
  return result;
}

// ---------------------------------------------------------------------------

LinearCombination solve_ridge(const Matrix& Phi, const Vector& y, double lambda, bool intercept) {
  if (Phi.rows() != y.size()) throw std::invalid_argument("solve_ridge: row count differs from target length");
  if (lambda < 0.0) throw std::invalid_argument("ridge lambda must be >= 0");
  Matrix A = Phi;
  if (intercept) {
    A.conservativeResize(Eigen::NoChange, Phi.cols() + 1);
    A.col(Phi.cols()).setOnes();
  }
  Matrix gram = A.transpose() * A;
  gram.diagonal().array() += lambda;
  const Eigen::LDLT<Matrix> ldlt(gram);
  const Vector D = ldlt.vectorD().cwiseAbs();
  const double scale = D.size() ? D.maxCoeff() : 0.0;
  if (ldlt.info() != Eigen::Success || scale == 0.0 || D.minCoeff() <= 1e-13 * scale) {
    if (lambda == 0.0)
      throw IllConditioned("normal equations are singular or ill-conditioned; use ridge_lambda > 0");
  }
  const Vector sol = ldlt.solve(A.transpose() * y);
  LinearCombination fit;
  fit.weights = sol.head(Phi.cols());
  if (intercept) fit.intercept = sol[Phi.cols()];
  return fit;
}

double ridge_objective(const Matrix& Phi, const Vector& y, const LinearCombination& fit, double lambda) {
  const Vector resid = (Phi * fit.weights).array() + fit.intercept - y.array();
  return resid.squaredNorm() + lambda * fit.weights.squaredNorm();
}

LeastSquaresResult least_squares_fit(const FeatureSample& sample, const VectorFn& target, std::size_t n_train,
                                     const RandomSource& rng, std::optional<double> ridge_lambda, bool intercept) {
  if (n_train < 1) throw std::invalid_argument("least_squares_fit needs n_train >= 1");
  const int d = sample.d;
  Rng train_rng(rng.child(1));
  Matrix X(static_cast<Eigen::Index>(n_train), d);
  Vector y(static_cast<Eigen::Index>(n_train));
  for (Eigen::Index t = 0; t < X.rows(); ++t) {
    const Vector x = train_rng.gaussian_vector(d);
    X.row(t) = x.transpose();
    y[t] = target(x);
  }
  const Matrix Phi = feature_matrix(sample, X);

  LeastSquaresResult result;
  if (ridge_lambda) {
    result.lambda = *ridge_lambda;
  } else {
    const double trace = Phi.colwise().squaredNorm().sum();
    result.lambda = 1e-10 * trace / static_cast<double>(std::max<Eigen::Index>(Phi.cols(), 1));
  }
  result.fit = solve_ridge(Phi, y, result.lambda, intercept);
  result.train_error = ((Phi * result.fit.weights).array() + result.fit.intercept - y.array()).square().mean();
  result.max_abs_u = result.fit.max_abs_weight();

  Rng holdout_rng(rng.child(2));
  const auto n_holdout = static_cast<Eigen::Index>(10 * n_train);
  RunningStats err, norm;
  for (Eigen::Index start = 0; start < n_holdout; start += kBlockRows) {
    const Eigen::Index rows = std::min(kBlockRows, n_holdout - start);
    Matrix Xh(rows, d);
    Vector yh(rows);
    for (Eigen::Index t = 0; t < rows; ++t) {
      const Vector x = holdout_rng.gaussian_vector(d);
      Xh.row(t) = x.transpose();
      yh[t] = target(x);
    }
    const Vector pred = result.fit.predict(sample, Xh);
    for (Eigen::Index t = 0; t < rows; ++t) {
      const double e = pred[t] - yh[t];
      err.push(e * e);
      norm.push(yh[t] * yh[t]);
    }
  }
  result.population_error = err.mean();
  result.population_error_se = err.std_error();
  result.target_norm_sq = norm.mean();
  return result;
}

}  // namespace rflab
