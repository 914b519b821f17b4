#include "rflab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rflab/features.hpp"
#include "rflab/hardness.hpp"
#include "rflab/io.hpp"
#include "rflab/legendre.hpp"
#include "rflab/numerics.hpp"
#include "rflab/poly_repr.hpp"
#include "rflab/trainer.hpp"

#ifndef RFLAB_VERSION
#define RFLAB_VERSION "0.0.0"
#endif

namespace rflab::cli {

using json = nlohmann::ordered_json;
using IntList = std::vector<std::int64_t>;
using RealList = std::vector<double>;

namespace {

// ---------------------------------------------------------------------------
// parameter tables

ParamSpec P_int(std::string n, std::int64_t v, std::string h) { return {std::move(n), ParamType::integer, v, std::move(h)}; }
ParamSpec P_real(std::string n, double v, std::string h) { return {std::move(n), ParamType::real, v, std::move(h)}; }
ParamSpec P_bool(std::string n, bool v, std::string h) { return {std::move(n), ParamType::boolean, v, std::move(h)}; }
ParamSpec P_text(std::string n, std::string v, std::string h) {
  return {std::move(n), ParamType::text, std::move(v), std::move(h)};
}
ParamSpec P_ints(std::string n, IntList v, std::string h) { return {std::move(n), ParamType::int_list, std::move(v), std::move(h)}; }
ParamSpec P_reals(std::string n, RealList v, std::string h) {
  return {std::move(n), ParamType::real_list, std::move(v), std::move(h)};
}

struct Context {
  std::filesystem::path dir;
  io::RunManifest manifest;
  std::ostream& log;
  int violations = 0;

  void write(const std::string& name, const io::CsvTable& table) {
    table.write(dir / name);
    manifest.add_output(dir, name);
  }
  void write_text(const std::string& name, const std::string& text) {
    io::write_file(dir / name, text);
    manifest.add_output(dir, name);
  }
  // records a failed invariant
  void require(bool ok, const std::string& what) {
    if (!ok) {
      ++violations;
      log << "INVARIANT VIOLATED: " << what << "\n";
    }
  }
};

using Runner = std::function<void(const ExperimentConfig&, Context&)>;

struct Subcommand {
  std::string name;
  std::string help;
  std::vector<ParamSpec> params;
  Runner run;
};

const std::vector<Subcommand>& registry();

const Subcommand& find_subcommand(const std::string& name) {
  for (const auto& s : registry())
    if (s.name == name) return s;
  throw ConfigError("unknown subcommand \"" + name + "\"");
}

RandomSource root_source(const ExperimentConfig& cfg) { return RandomSource{cfg.seed, 0}; }

std::vector<int> to_ints(const IntList& v) {
  std::vector<int> out;
  for (auto x : v) {
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
      throw ConfigError("list value out of range");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

int checked_int(const ExperimentConfig& cfg, const std::string& key, std::int64_t lo) {
  const auto v = cfg.get_int(key);
  if (v < lo || v > std::numeric_limits<int>::max())
    throw ConfigError(key + " must be >= " + std::to_string(lo));
  return static_cast<int>(v);
}

// ---------------------------------------------------------------------------
// subcommands

void run_legendre_check(const ExperimentConfig& cfg, Context& ctx) {
  const int m_max = checked_int(cfg, "max_degree", 0);
  const int points = checked_int(cfg, "points", 2);
  const auto rule = gauss_legendre_rule(m_max + 2);

  io::CsvTable orth({"m", "n", "inner", "expected", "abs_error"});
  double orth_err = 0.0;
  for (int m = 0; m <= m_max; ++m)
    for (int n = 0; n <= m_max; ++n) {
      const double v = rule.integrate(-1.0, 1.0, [&](double w) { return legendre_eval(m, w) * legendre_eval(n, w); });
      const double expected = m == n ? legendre_norm_sq(n) : 0.0;
      orth_err = std::max(orth_err, std::abs(v - expected));
      orth.add_row({m, n, v, expected, std::abs(v - expected)});
    }

  const auto table = build_monomial_table(m_max);
  io::CsvTable exp_table({"m", "n", "coefficient", "integral", "must_vanish", "vanishes"});
  bool pattern_ok = true;
  for (int m = 0; m <= m_max; ++m)
    for (int n = 0; n <= m_max; ++n) {
      const bool must = m < n || (m + n) % 2 != 0;
      const bool zero = table.integral(m, n) == 0.0;
      if (must && !zero) pattern_ok = false;
      exp_table.add_row({m, n, table.coefficient(m, n), table.integral(m, n), must, zero});
    }

  io::CsvTable recon({"m", "max_abs_error"});
  double recon_err = 0.0;
  for (int m = 0; m <= m_max; ++m) {
    double worst = 0.0;
    for (int t = 0; t < points; ++t) {
      const double w = -1.0 + 2.0 * t / (points - 1);
      const auto p = legendre_eval_all(m, w);
      double s = 0.0;
      for (int n = 0; n <= m; ++n) s += table.coefficient(m, n) * p[static_cast<std::size_t>(n)];
      worst = std::max(worst, std::abs(s - std::pow(w, m)));
    }
    recon_err = std::max(recon_err, worst);
    recon.add_row({m, worst});
  }
  ctx.write("orthogonality.csv", orth);
  ctx.write("monomial_expansion.csv", exp_table);
  ctx.write("reconstruction.csv", recon);
  ctx.log << "orthogonality_max_error " << io::format_double(orth_err) << "\n"
          << "vanishing_pattern " << (pattern_ok ? "exact" : "broken") << "\n"
          << "reconstruction_max_error " << io::format_double(recon_err) << "\n";
  ctx.require(orth_err < 1e-12, "orthogonality error >= 1e-12");
  ctx.require(pattern_ok, "I(m,n) vanishing pattern");
  ctx.require(recon_err < 1e-10, "monomial reconstruction error >= 1e-10");
}

void run_represent_poly(const ExperimentConfig& cfg, Context& ctx) {
  const int d = checked_int(cfg, "d", 1);
  const int k = checked_int(cfg, "k", 0);
  const int n_polys = checked_int(cfg, "n_polys", 1);
  const int probes = checked_int(cfg, "probes", 1);
  const bool truncate = cfg.get_bool("truncate");
  const double tol = cfg.get_real("tol");
  const Activation act = activation_by_name(cfg.get_text("activation"));
  const RandomSource root = root_source(cfg);

  std::vector<SparsePolynomial> polys;
  if (!cfg.get_text("poly").empty()) {
    polys.push_back(polynomial_from_json(cfg.get_text("poly")));
  } else {
    for (int i = 0; i < n_polys; ++i) {
      Rng rng(root.child(static_cast<std::uint64_t>(i)));
      polys.push_back(random_polynomial(d, k, cfg.get_real("alpha"), rng));
    }
  }

  io::CsvTable summary({"poly", "d", "k", "coeff_bound", "max_residual", "max_abs_g", "log10_g_bound", "within_bound"});
  io::CsvTable coeffs({"poly", "J", "c_J"});
  for (std::size_t i = 0; i < polys.size(); ++i) {
    const auto& P = polys[i];
    const int deg = std::max(P.degree(), 0);
    const auto g = construct_g(P, act, build_monomial_table(std::max(deg, 1)), deg);
    Rng probe_rng(root.child(0x10000u + i));
    std::vector<Vector> pts;
    for (int t = 0; t < probes; ++t) pts.push_back(probe_rng.ball_vector(P.dimension(), 1.0));
    const int quad = cfg.get_int("quad_order") > 0 ? static_cast<int>(cfg.get_int("quad_order")) : deg + 12;
    const auto res = verify_representation(P, g, act, pts, quad, truncate);
    double worst = 0.0;
    for (double r : res) worst = std::max(worst, std::abs(r));
    const double gmax = max_abs_g(g);
    const double bound = log10_g_bound(std::max(P.coeff_bound(), 1e-300), act.taylor_upper(deg),
                                       act.taylor_lower(deg), P.dimension(), deg);
    const bool within = gmax == 0.0 || std::log10(gmax) <= bound + 1e-12;
    summary.add_row({static_cast<int>(i), P.dimension(), deg, P.coeff_bound(), worst, gmax, bound, within});
    for (const auto& [J, c] : g.coefficients) coeffs.add_row({static_cast<int>(i), "\"" + J.to_string() + "\"", c});
    if (truncate) ctx.require(worst < tol, "representation residual of poly " + std::to_string(i) + " >= tol");
    ctx.require(within, "max|g| above the bound for poly " + std::to_string(i));
    ctx.log << "poly " << i << " max_residual " << io::format_double(worst) << " max_abs_g " << io::format_double(gmax)
            << "\n";
  }
  ctx.write("represent.csv", summary);
  ctx.write("g_coefficients.csv", coeffs);
}

void run_concentration(const ExperimentConfig& cfg, Context& ctx) {
  const int d = checked_int(cfg, "d", 1);
  const int k = checked_int(cfg, "k", 0);
  const Activation act = activation_by_name(cfg.get_text("activation"));
  const RandomSource root = root_source(cfg);
  Rng poly_rng(root.child(0));
  const SparsePolynomial P = cfg.get_text("poly").empty() ? random_polynomial(d, k, cfg.get_real("alpha"), poly_rng)
                                                          : polynomial_from_json(cfg.get_text("poly"));
  ConcentrationOptions opt;
  opt.r_values = to_ints(cfg.get_int_list("r"));
  opt.trials = checked_int(cfg, "trials", 1);
  opt.probes = checked_int(cfg, "probes", 1);
  opt.delta = cfg.get_real("delta");
  opt.quad_order = checked_int(cfg, "quad_order", 0);
  opt.jobs = cfg.jobs;
  const auto res = concentration_experiment(P, act, opt, root.child(1));

  io::CsvTable trials({"r", "trial", "stream", "sup_error", "max_abs_u", "envelope"});
  for (const auto& row : res.rows)
    trials.add_row({row.r, row.trial, static_cast<unsigned long long>(row.stream), row.sup_error, row.max_abs_u, row.envelope});
  io::CsvTable summary({"r", "mean_sup_error", "std_sup_error", "envelope"});
  for (const auto& s : res.summary) summary.add_row({s.r, s.mean_sup_error, s.std_sup_error, s.envelope});
  io::CsvTable fit({"slope", "C", "L", "envelope_violations"});
  fit.add_row({res.slope, res.C, res.L, res.envelope_violations});
  ctx.write("concentration_trials.csv", trials);
  ctx.write("concentration_summary.csv", summary);
  ctx.write("concentration_fit.csv", fit);
  ctx.write_text("polynomial.json", polynomial_to_json(P) + "\n");
  ctx.log << "slope " << io::format_double(res.slope) << "\nC " << io::format_double(res.C)
          << "\nenvelope_violations " << res.envelope_violations << "\n";
  ctx.require(res.envelope_violations == 0, "sup error above the concentration envelope");
}

void run_learn_poly(const ExperimentConfig& cfg, Context& ctx) {
  const int d = checked_int(cfg, "d", 2);
  const Activation act = activation_by_name(cfg.get_text("activation"));
  SparsePolynomial P(d);
  std::vector<int> J(static_cast<std::size_t>(d), 0);
  J[0] = J[1] = 1;
  P.add_term(MultiIndex(J), 2.0);  // sup over the unit ball is 1

  TrainConfig tc;
  tc.r = checked_int(cfg, "r", 1);
  tc.eta = cfg.get_real("eta");
  tc.steps = cfg.get_int("steps");
  tc.seed = cfg.seed;
  tc.validation_size = checked_int(cfg, "validation_size", 1);
  tc.eval_every = cfg.get_int("eval_every");
  tc.dataset_size = static_cast<std::size_t>(std::max<std::int64_t>(0, cfg.get_int("dataset_size")));
  const auto sampler = polynomial_sign_sampler(P, cfg.get_real("margin"));
  const auto result = sgd_train(d, sampler, tc, act);
  const double poly_loss = polynomial_hinge_loss(P, cfg.get_real("scale"), validation_set(sampler, tc));
  const double B = cfg.get_real("drift_B");
  const auto drift = drift_check(result.trace, tc, act, B > 0.0 ? std::optional<double>(B) : std::nullopt, true);

  const auto every = std::max<std::int64_t>(1, cfg.get_int("trace_every"));
  io::CsvTable trace({"step", "loss", "run_avg_loss", "w_drift", "u_norm"});
  const auto& tr = result.trace;
  for (std::size_t t = 0; t < tr.size(); ++t)
    if (static_cast<std::int64_t>(t) % every == 0 || t + 1 == tr.size())
      trace.add_row({static_cast<unsigned long>(t), tr.loss[t], tr.run_avg[t], tr.w_drift[t], tr.u_norm[t]});
  io::CsvTable val({"step", "validation_loss"});
  for (const auto& v : result.validation) val.add_row({static_cast<long long>(v.step), v.loss});
  io::CsvTable summary({"best_step", "best_validation_loss", "initial_validation_loss", "polynomial_loss",
                        "drift_B", "drift_slack", "norm_slack", "drift_violations"});
  summary.add_row({static_cast<long long>(result.best_step), result.best_validation_loss, result.initial_validation_loss,
                   poly_loss, drift.B, drift.drift_slack, drift.norm_slack, drift.violations});
  ctx.write("trace.csv", trace);
  ctx.write("validation.csv", val);
  ctx.write("summary.csv", summary);
  ctx.write_text("checkpoint.json", net_to_json(result.best, cfg.seed) + "\n");
  ctx.log << "best_validation_loss " << io::format_double(result.best_validation_loss) << " at step "
          << result.best_step << "\npolynomial_loss " << io::format_double(poly_loss) << "\ndrift_violations "
          << drift.violations << "\n";
  ctx.require(result.best_validation_loss <= result.initial_validation_loss + 1e-12,
              "best validation loss above the initial one");
  ctx.require(drift.passed(), "drift bounds");
}

void run_params(const ExperimentConfig& cfg, Context& ctx) {
  const auto p = theorem1_params(cfg.get_real("epsilon"), cfg.get_real("delta"), checked_int(cfg, "d", 1),
                                 checked_int(cfg, "k", 1), cfg.get_real("alpha"),
                                 activation_by_name(cfg.get_text("activation")));
  io::CsvTable t({"quantity", "value", "log10"});
  t.add_row({"beta", p.beta, p.log10_beta});
  t.add_row({"r", p.r, p.log10_r});
  t.add_row({"eta", p.eta, p.log10_eta});
  t.add_row({"T", p.T, p.log10_T});
  t.add_row({"a", p.a, std::log10(p.a)});
  t.add_row({"A", p.A, std::log10(p.A)});
  t.add_row({"L", p.L, std::log10(p.L)});
  t.add_row({"infeasible_at_desk_scale", p.infeasible_at_desk_scale ? 1.0 : 0.0, 0.0});
  ctx.write("params.csv", t);
  ctx.log << "beta 10^" << io::format_double(p.log10_beta) << "\nr 10^" << io::format_double(p.log10_r) << "\neta 10^"
          << io::format_double(p.log10_eta) << "\nT 10^" << io::format_double(p.log10_T)
          << "\ninfeasible_at_desk_scale " << (p.infeasible_at_desk_scale ? "true" : "false") << "\n";
}

void run_psi_check(const ExperimentConfig& cfg, Context& ctx) {
  const PsiFunction psi(checked_int(cfg, "d", 1));
  const auto rep = psi_properties_check(psi, checked_int(cfg, "grid", 2));
  io::CsvTable t({"d", "a", "oddness_residual", "periodicity_residual", "max_abs_on_range", "interval_integral_min",
                  "interval_integral_max", "decomposition_error", "decomposition_terms", "lipschitz_estimate", "psi_0",
                  "psi_1", "psi_2", "psi_minus_2"});
  t.add_row({rep.d, rep.a, rep.oddness_residual, rep.periodicity_residual, rep.max_abs_on_range,
             rep.interval_integral_min, rep.interval_integral_max, rep.decomposition_error,
             static_cast<unsigned long>(psi_relu_decomposition(psi).terms.size()), rep.lipschitz_estimate, rep.psi0,
             rep.psi1, rep.psi2, rep.psi_m2});
  ctx.write("psi_properties.csv", t);

  io::CsvTable norms({"d", "w_norm", "gaussian_norm", "lower_bound"});
  bool norms_ok = true;
  for (auto nd : cfg.get_int_list("norm_d")) {
    if (nd < 1) throw ConfigError("norm_d entries must be >= 1");
    const PsiFunction p(static_cast<int>(nd));
    const double v = psi_gaussian_norm(p, static_cast<double>(nd), checked_int(cfg, "order", 2));
    norms.add_row({static_cast<long long>(nd), static_cast<double>(nd), v, 1.0 / 6.0});
    if (nd >= 3 && v < 1.0 / 6.0) norms_ok = false;
  }
  ctx.write("psi_norm.csv", norms);
  ctx.log << "oddness_residual " << io::format_double(rep.oddness_residual) << "\nperiodicity_residual "
          << io::format_double(rep.periodicity_residual) << "\ninterval_integral "
          << io::format_double(rep.interval_integral_min) << " .. " << io::format_double(rep.interval_integral_max)
          << "\ndecomposition_error " << io::format_double(rep.decomposition_error) << "\n";
  ctx.require(rep.oddness_residual < 1e-12, "psi oddness");
  ctx.require(rep.periodicity_residual < 1e-12, "psi periodicity");
  ctx.require(std::abs(rep.interval_integral_min - 2.0 / 3.0) < 1e-10 &&
                  std::abs(rep.interval_integral_max - 2.0 / 3.0) < 1e-10,
              "per-interval integral of psi^2 differs from 2/3");
  ctx.require(rep.max_abs_on_range <= 1.0 + 1e-12, "|psi| > 1 on [-a, a]");
  ctx.require(rep.decomposition_error < 1e-12, "ReLU decomposition disagrees with psi");
  ctx.require(norms_ok, "Gaussian norm below 1/6");
}

void run_linear_residual(const ExperimentConfig& cfg, Context& ctx) {
  const int d = checked_int(cfg, "d", 1);
  const int r = checked_int(cfg, "r", 0);
  const auto res = linear_residual(d, r, checked_int(cfg, "trials", 1), root_source(cfg), cfg.jobs);
  io::CsvTable t({"trial", "residual"});
  RunningStats s;
  std::size_t above = 0;
  bool range_ok = true;
  for (std::size_t i = 0; i < res.size(); ++i) {
    t.add_row({static_cast<unsigned long>(i), res[i]});
    s.push(res[i]);
    if (res[i] >= 0.25) ++above;
    if (res[i] < -1e-12 || res[i] > 1.0 + 1e-12) range_ok = false;
  }
  io::CsvTable sum({"d", "r", "trials", "mean_residual", "std_error", "expected", "fraction_at_least_quarter"});
  const double frac = static_cast<double>(above) / static_cast<double>(res.size());
  sum.add_row({d, r, static_cast<unsigned long>(res.size()), s.mean(), s.std_error(),
               1.0 - static_cast<double>(r) / d, frac});
  ctx.write("residuals.csv", t);
  ctx.write("summary.csv", sum);
  ctx.log << "mean_residual " << io::format_double(s.mean()) << " (1 - r/d = "
          << io::format_double(1.0 - static_cast<double>(r) / d) << ")\nfraction_at_least_quarter "
          << io::format_double(frac) << "\n";
  ctx.require(range_ok, "residual outside [0, 1]");
}

void run_correlation_decay(const ExperimentConfig& cfg, Context& ctx) {
  CorrelationOptions opt;
  opt.d_values = to_ints(cfg.get_int_list("d"));
  opt.trials = checked_int(cfg, "trials", 2);
  opt.mc_samples = checked_int(cfg, "mc_samples", 4);
  opt.jobs = cfg.jobs;
  const RandomSource root = root_source(cfg);
  const std::string kind = cfg.get_text("f");
  const int f_r = checked_int(cfg, "f_r", 1);
  FunctionFactory factory;
  if (kind == "relu_net")
    factory = [&](int d) { return random_relu_network(d, f_r, root.child(0).child(static_cast<std::uint64_t>(d))); };
  else if (kind == "constant")
    factory = [](int) -> VectorFn { return [](const Vector&) { return 1.0; }; };
  else
    throw ConfigError("f must be \"relu_net\" or \"constant\"");
  const auto rows = correlation_decay(factory, opt, root.child(1));
  io::CsvTable t({"d", "mean_sq", "std_error", "f_norm_sq", "trials"});
  for (const auto& r : rows) t.add_row({r.d, r.mean_sq, r.std_error, r.f_norm_sq, r.trials});
  ctx.write("correlation.csv", t);
  const int inv = count_inversions(rows);
  for (const auto& r : rows)
    ctx.log << "d " << r.d << " mean_sq " << io::format_double(r.mean_sq) << " +- " << io::format_double(r.std_error)
            << "\n";
  ctx.log << "inversions " << inv << "\n";
  bool norms_ok = true;
  for (const auto& r : rows) norms_ok = norms_ok && r.f_norm_sq > 0.0;
  ctx.require(norms_ok, "f has zero norm");
}

void run_neuron_inapprox(const ExperimentConfig& cfg, Context& ctx) {
  NeuronSweepOptions opt;
  const std::string wkind = cfg.get_text("weights");
  const double wscale = cfg.get_real("weight_scale");
  WeightDistribution wd;
  if (wkind == "sphere")
    wd = WeightDistribution::uniform_sphere(wscale);
  else if (wkind == "gaussian")
    wd = WeightDistribution::gaussian(wscale);
  else if (wkind == "cube")
    wd = WeightDistribution::uniform_cube();
  else
    throw ConfigError("weights must be sphere, gaussian or cube");
  const double lo = cfg.get_real("bias_lo"), hi = cfg.get_real("bias_hi");
  const Activation act = activation_by_name(cfg.get_text("activation"));
  opt.family = lo == hi && lo == 0.0 ? FeatureFamily::ridge(act, wd)
                                     : FeatureFamily::affine_ridge(act, wd, BiasDistribution::uniform(lo, hi));
  opt.r = checked_int(cfg, "r", 1);
  opt.d_values = to_ints(cfg.get_int_list("d"));
  opt.n_train = static_cast<std::size_t>(checked_int(cfg, "n_train", 1));
  opt.offsets = cfg.get_real_list("offsets");
  opt.jobs = cfg.jobs;
  const RandomSource root = root_source(cfg);
  const auto rows = neuron_inapprox_sweep(opt, root.child(0));

  io::CsvTable t({"d", "target", "offset", "normalized_error", "population_error", "target_norm_sq", "r_max_abs_u"});
  bool control_ok = true;
  for (const auto& r : rows) {
    t.add_row({r.d, r.target, r.offset, r.normalized_error, r.population_error, r.target_norm_sq, r.r_max_u});
    if (r.target == "control" && !(r.normalized_error < 1e-6)) control_ok = false;
    if (r.target != "neuron")
      ctx.log << "d " << r.d << " " << r.target << " normalized_error " << io::format_double(r.normalized_error)
              << "\n";
  }
  ctx.write("neuron_inapprox.csv", t);

  const int bd = checked_int(cfg, "baseline_d", 0);
  if (bd > 0) {
    Vector w = Vector::Zero(bd);
    w[0] = bd;
    const double off = cfg.get_real("baseline_offset");
    const auto base = train_single_neuron(ReluNeuron{w, off}, opt.n_train, root.child(1));
    io::CsvTable b({"d", "offset", "normalized_error", "train_loss", "iterations"});
    b.add_row({bd, off, base.normalized_error, base.train_loss, base.iterations});
    ctx.write("baseline.csv", b);
    ctx.log << "single_neuron d " << bd << " normalized_error " << io::format_double(base.normalized_error) << "\n";
  }
  ctx.require(control_ok, "realizable control not fitted");
}

void run_exp_identity(const ExperimentConfig& cfg, Context& ctx) {
  const int n = checked_int(cfg, "points", 2);
  const int order = checked_int(cfg, "order", 1);
  io::CsvTable t({"z", "lhs", "exp_z", "abs_error", "lhs_minus_sign", "minus_sign_error"});
  double worst = 0.0, worst_minus = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = i == n - 1 ? 1.0 : -1.0 + 2.0 * i / (n - 1);
    const double v = relu_exp_identity_lhs(z, order, +1);
    const double vm = relu_exp_identity_lhs(z, order, -1);
    const double e = std::exp(z);
    worst = std::max(worst, std::abs(v - e));
    worst_minus = std::max(worst_minus, std::abs(vm - e));
    t.add_row({z, v, e, std::abs(v - e), vm, std::abs(vm - e)});
  }
  ctx.write("identity.csv", t);
  ctx.log << "max_error " << io::format_double(worst) << "\nmax_error_minus_sign " << io::format_double(worst_minus)
          << "\n";
  ctx.require(worst < 1e-8, "exp identity error >= 1e-8");
}

const std::vector<Subcommand>& registry() {
  static const std::vector<Subcommand> subs = {
      {"legendre-check", "Legendre orthogonality, expansion table and reconstruction",
       {P_int("max_degree", 12, "largest degree"), P_int("points", 201, "reconstruction grid points")},
       run_legendre_check},
      {"represent-poly", "Build g for polynomials and verify the cube integral",
       {P_int("d", 2, "dimension"), P_int("k", 2, "degree"), P_real("alpha", 1.0, "coefficient bound"),
        P_text("activation", "exp", "exp or identity"), P_int("n_polys", 20, "random polynomials"),
        P_int("probes", 20, "probe points in the unit ball"), P_int("quad_order", 0, "per-axis order (0: degree + 12)"),
        P_bool("truncate", true, "use the Taylor-truncated activation"), P_real("tol", 1e-8, "residual tolerance"),
        P_text("poly", "", "polynomial JSON instead of random ones")},
       run_represent_poly},
      {"concentration", "Sup error of sampled features against the exact representation",
       {P_int("d", 2, "dimension"), P_int("k", 2, "degree"), P_real("alpha", 1.0, "coefficient bound"),
        P_text("activation", "exp", "activation"), P_ints("r", {64, 128, 256, 512, 1024, 2048, 4096}, "feature counts"),
        P_int("trials", 20, "trials per r"), P_int("probes", 2000, "probe points"),
        P_real("delta", 0.01, "failure probability in the envelope"),
        P_int("quad_order", 0, "reference quadrature order (0: degree + 12)"),
        P_text("poly", "", "polynomial JSON instead of a random one")},
       run_concentration},
      {"learn-poly", "SGD on a two-layer network, labels sign(2 x1 x2) with a margin filter",
       {P_int("d", 3, "dimension"), P_int("r", 1000, "hidden units"), P_real("eta", 0.01, "step size"),
        P_int("steps", 200000, "SGD steps"), P_real("margin", 0.3, "keep |P(x)| >= margin"),
        P_text("activation", "exp", "activation"), P_real("scale", 3.0, "scale of the reference predictor"),
        P_int("validation_size", 2000, "validation examples"), P_int("eval_every", 0, "0: steps / 100"),
        P_int("dataset_size", 0, "0: fresh examples"), P_real("drift_B", 0.0, "0: max(sqrt r, |W0|, |U0|)"),
        P_int("trace_every", 1, "trace row stride")},
       run_learn_poly},
      {"params", "Plug-in hyperparameters from the worst-case constants",
       {P_real("epsilon", 0.1, "accuracy"), P_real("delta", 0.1, "failure probability"), P_int("d", 3, "dimension"),
        P_int("k", 2, "degree"), P_real("alpha", 1.0, "coefficient bound"), P_text("activation", "exp", "activation")},
       run_params},
      {"psi-check", "Properties of the hard function psi",
       {P_int("d", 3, "dimension parameter"), P_int("grid", 10000, "grid points"),
        P_ints("norm_d", {3, 4, 5, 6, 7, 8, 9, 10}, "dimensions for the Gaussian norm"),
        P_int("order", 20, "Gauss-Legendre order per piece")},
       run_psi_check},
      {"linear-residual", "Distance of a random direction from a random r-dimensional span",
       {P_int("d", 100, "dimension"), P_int("r", 50, "span size"), P_int("trials", 500, "trials")},
       run_linear_residual},
      {"correlation-decay", "Mean squared correlation of f with psi(<w,x>), |w| = d",
       {P_ints("d", {2, 4, 6, 8, 10, 12}, "dimensions"), P_int("trials", 64, "w draws per d"),
        P_int("mc_samples", 100000, "Gaussian x samples per d"), P_text("f", "relu_net", "relu_net or constant"),
        P_int("f_r", 50, "units of the ReLU network")},
       run_correlation_decay},
      {"neuron-inapprox", "Least-squares fits of psi and single-neuron targets with random features",
       {P_int("r", 200, "features"), P_ints("d", {2, 4, 6, 8, 10, 12, 15, 20}, "dimensions"),
        P_int("n_train", 4000, "training inputs"), P_reals("offsets", {-3.0, -1.0, 1.0, 3.0}, "neuron offsets"),
        P_text("weights", "sphere", "sphere, gaussian or cube"), P_real("weight_scale", 1.0, "radius or std"),
        P_real("bias_lo", -2.0, "bias lower end"), P_real("bias_hi", 2.0, "bias upper end"),
        P_text("activation", "relu", "feature activation"), P_int("baseline_d", 10, "0 disables the baseline"),
        P_real("baseline_offset", 1.0, "baseline neuron offset")},
       run_neuron_inapprox},
      {"exp-identity", "exp(z) as an integral of ReLU terms",
       {P_int("points", 41, "grid points on [-1, 1]"), P_int("order", 20, "Gauss-Legendre order per piece")},
       run_exp_identity},
  };
  return subs;
}

// ---------------------------------------------------------------------------
// values

const char* type_name(ParamType t) {
  switch (t) {
    case ParamType::integer: return "integer";
    case ParamType::real: return "number";
    case ParamType::boolean: return "boolean";
    case ParamType::text: return "string";
    case ParamType::int_list: return "list of integers";
    case ParamType::real_list: return "list of numbers";
  }
  return "?";
}

json value_to_json(const ParamValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

ParamValue value_from_json(const ParamSpec& spec, const json& j) {
  auto bad = [&]() { return ConfigError("key \"" + spec.name + "\" expects a " + type_name(spec.type)); };
  switch (spec.type) {
    case ParamType::integer:
      if (!j.is_number_integer()) throw bad();
      return j.get<std::int64_t>();
    case ParamType::real:
      if (!j.is_number()) throw bad();
      return j.get<double>();
    case ParamType::boolean:
      if (!j.is_boolean()) throw bad();
      return j.get<bool>();
    case ParamType::text:
      if (!j.is_string()) throw bad();
      return j.get<std::string>();
    case ParamType::int_list: {
      IntList out;
      if (j.is_number_integer()) return IntList{j.get<std::int64_t>()};
      if (!j.is_array()) throw bad();
      for (const auto& e : j) {
        if (!e.is_number_integer()) throw bad();
        out.push_back(e.get<std::int64_t>());
      }
      return out;
    }
    case ParamType::real_list: {
      RealList out;
      if (j.is_number()) return RealList{j.get<double>()};
      if (!j.is_array()) throw bad();
      for (const auto& e : j) {
        if (!e.is_number()) throw bad();
        out.push_back(e.get<double>());
      }
      return out;
    }
  }
  throw bad();
}

std::int64_t parse_int(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (s.empty() || pos != s.size()) throw ConfigError("--" + key + ": \"" + s + "\" is not an integer");
  return v;
}

double parse_real(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (s.empty() || pos != s.size()) throw ConfigError("--" + key + ": \"" + s + "\" is not a number");
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    out.push_back(cur);
  }
  return out;
}

std::uint64_t parse_seed(const std::string& where, const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(where + ": seed must be a nonnegative integer, got \"" + s + "\"");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError(where + ": seed out of range");
  }
}

std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

int status_from(const Context& ctx) { return ctx.violations > 0 ? 2 : 0; }

}  // namespace

// ---------------------------------------------------------------------------

namespace {
template <class T>
const T& get_typed(const ExperimentConfig& cfg, const std::string& key) {
  const auto it = cfg.params.find(key);
  if (it == cfg.params.end()) throw ConfigError("no parameter \"" + key + "\" for " + cfg.subcommand);
  const T* v = std::get_if<T>(&it->second);
  if (!v) throw ConfigError("parameter \"" + key + "\" has another type");
  return *v;
}
}  // namespace

std::int64_t ExperimentConfig::get_int(const std::string& key) const { return get_typed<std::int64_t>(*this, key); }
double ExperimentConfig::get_real(const std::string& key) const { return get_typed<double>(*this, key); }
bool ExperimentConfig::get_bool(const std::string& key) const { return get_typed<bool>(*this, key); }
const std::string& ExperimentConfig::get_text(const std::string& key) const { return get_typed<std::string>(*this, key); }
const std::vector<std::int64_t>& ExperimentConfig::get_int_list(const std::string& key) const {
  return get_typed<IntList>(*this, key);
}
const std::vector<double>& ExperimentConfig::get_real_list(const std::string& key) const {
  return get_typed<RealList>(*this, key);
}

std::string ExperimentConfig::to_json(bool runtime) const {
  json j = json::object();
  j["seed"] = seed;
  for (const auto& [k, v] : params) j[k] = value_to_json(v);
  if (runtime) {
    j["out"] = out;
    j["jobs"] = jobs;
  }
  return j.dump();
}

std::vector<std::string> subcommand_names() {
  std::vector<std::string> out;
  for (const auto& s : registry()) out.push_back(s.name);
  return out;
}

const std::vector<ParamSpec>& parameters(const std::string& subcommand) { return find_subcommand(subcommand).params; }

ExperimentConfig default_config(const std::string& subcommand) {
  ExperimentConfig cfg;
  cfg.subcommand = subcommand;
  for (const auto& p : parameters(subcommand)) cfg.params[p.name] = p.default_value;
  if (const char* env = std::getenv("RF_LAB_SEED"); env && *env) cfg.seed = parse_seed("RF_LAB_SEED", env);
  cfg.jobs = default_jobs();
  return cfg;
}

void apply_json(ExperimentConfig& cfg, std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("config parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                      e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const auto& specs = parameters(cfg.subcommand);
  for (const auto& [key, value] : j.items()) {
    if (key == "seed") {
      if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
        throw ConfigError("key \"seed\" expects a nonnegative integer");
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "out") {
      if (!value.is_string()) throw ConfigError("key \"out\" expects a string");
      cfg.out = value.get<std::string>();
    } else if (key == "jobs") {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 1) throw ConfigError("key \"jobs\" expects an integer >= 1");
      cfg.jobs = value.get<int>();
    } else {
      const auto it = std::find_if(specs.begin(), specs.end(), [&](const ParamSpec& s) { return s.name == key; });
      if (it == specs.end()) throw ConfigError("unknown key \"" + key + "\" for " + cfg.subcommand);
      cfg.params[key] = value_from_json(*it, value);
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::string& subcommand) {
  ExperimentConfig cfg = default_config(subcommand);
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  apply_json(cfg, text);
  return cfg;
}

ParamValue parse_value(const ParamSpec& spec, const std::string& raw) {
  switch (spec.type) {
    case ParamType::integer:
      return parse_int(spec.name, raw);
    case ParamType::real:
      return parse_real(spec.name, raw);
    case ParamType::boolean:
      if (raw == "true" || raw == "1") return true;
      if (raw == "false" || raw == "0") return false;
      throw ConfigError("--" + flag_name(spec.name) + ": expected true or false");
    case ParamType::text:
      return raw;
    case ParamType::int_list: {
      IntList out;
      for (const auto& s : split_list(raw)) out.push_back(parse_int(spec.name, s));
      return out;
    }
    case ParamType::real_list: {
      RealList out;
      for (const auto& s : split_list(raw)) out.push_back(parse_real(spec.name, s));
      return out;
    }
  }
  throw ConfigError("unhandled parameter type");
}

namespace {

int execute(const ExperimentConfig& cfg) {
  const Subcommand& sub = find_subcommand(cfg.subcommand);
  const std::filesystem::path dir = std::filesystem::path(cfg.out) / cfg.subcommand;
  std::filesystem::create_directories(dir);
  Context ctx{dir, {}, std::cout};
  ctx.manifest.subcommand = cfg.subcommand;
  ctx.manifest.tool_version = RFLAB_VERSION;
  ctx.manifest.config_json = cfg.to_json(false);
  ctx.manifest.seed = cfg.seed;
  ctx.manifest.started = io::utc_timestamp();
  sub.run(cfg, ctx);
  ctx.manifest.finished = io::utc_timestamp();
  ctx.manifest.status = ctx.violations > 0 ? "invariant_violation" : "ok";
  io::write_file(dir / "manifest.json", ctx.manifest.to_json());
  std::cout << "wrote " << dir.string() << "\n";
  return status_from(ctx);
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Random-features experiments"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(RFLAB_VERSION));

  struct Raw {
    std::string config, seed, out;
    int jobs = 0;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
    CLI::Option* jobs_opt = nullptr;
  };
  std::map<std::string, Raw> raws;
  std::map<std::string, CLI::App*> apps;
  for (const auto& sub : registry()) {
    auto* sc = app.add_subcommand(sub.name, sub.help);
    apps[sub.name] = sc;
    Raw& raw = raws[sub.name];
    sc->add_option("--config", raw.config, "JSON config file");
    raw.seed_opt = sc->add_option("--seed", raw.seed, "seed (default: RF_LAB_SEED or 0)");
    raw.out_opt = sc->add_option("--out", raw.out, "output root (default: out)");
    raw.jobs_opt = sc->add_option("--jobs", raw.jobs, "worker threads (default: processor count)");
    for (const auto& p : sub.params) {
      std::string def = value_to_json(p.default_value).dump();
      raw.options[p.name] = sc->add_option("--" + flag_name(p.name), raw.values[p.name], p.help + " [" + def + "]");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* shown = &app;
    for (const auto* sc : app.get_subcommands()) shown = sc;
    std::cerr << shown->help();
    return 1;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  const Raw& raw = raws[name];
  try {
    ExperimentConfig cfg = raw.config.empty() ? default_config(name) : load_config(raw.config, name);
    if (raw.seed_opt->count()) cfg.seed = parse_seed("--seed", raw.seed);
    if (raw.out_opt->count()) cfg.out = raw.out;
    if (raw.jobs_opt->count()) {
      if (raw.jobs < 1) throw ConfigError("--jobs must be >= 1");
      cfg.jobs = raw.jobs;
    }
    for (const auto& p : find_subcommand(name).params)
      if (raw.options.at(p.name)->count()) cfg.params[p.name] = parse_value(p, raw.values.at(p.name));
    return execute(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("rflab");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(storage.size()), argv.data());
}

}  // namespace rflab::cli
