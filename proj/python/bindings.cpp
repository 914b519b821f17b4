#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rflab/cli.hpp"
#include "rflab/hardness.hpp"
#include "rflab/legendre.hpp"
#include "rflab/poly_repr.hpp"
#include "rflab/trainer.hpp"

namespace py = pybind11;
using namespace rflab;

namespace {

py::tuple rule_tuple(const QuadratureRule& r) { return py::make_tuple(r.nodes, r.weights); }

// residuals of a random polynomial's representation at random ball points
py::dict construct_and_verify(int d, int k, double alpha, const std::string& activation, int probes, std::uint64_t seed,
                              int quad_order, bool truncate) {
  const auto act = activation_by_name(activation);
  Rng rng(RandomSource{seed, 0});
  const auto P = random_polynomial(d, k, alpha, rng);
  const auto g = construct_g(P, act, build_monomial_table(k));
  std::vector<Vector> pts;
  for (int i = 0; i < probes; ++i) pts.push_back(rng.ball_vector(d, 1.0));
  py::dict out;
  out["polynomial"] = polynomial_to_json(P);
  out["residuals"] = verify_representation(P, g, act, pts, quad_order > 0 ? quad_order : k + 12, truncate);
  out["max_abs_g"] = max_abs_g(g);
  out["log10_bound"] = log10_g_bound(P.coeff_bound(), act.taylor_upper(k), act.taylor_lower(k), d, k);
  return out;
}

py::dict params(double epsilon, double delta, int d, int k, double alpha, const std::string& activation) {
  const auto p = theorem1_params(epsilon, delta, d, k, alpha, activation_by_name(activation));
  py::dict out;
  out["beta"] = p.beta;
  out["r"] = p.r;
  out["T"] = p.T;
  out["eta"] = p.eta;
  out["log10_beta"] = p.log10_beta;
  out["log10_r"] = p.log10_r;
  out["log10_T"] = p.log10_T;
  out["log10_eta"] = p.log10_eta;
  out["infeasible"] = p.infeasible_at_desk_scale;
  return out;
}

py::dict psi_properties(int d, int grid) {
  const auto rep = psi_properties_check(PsiFunction(d), grid);
  py::dict out;
  out["a"] = rep.a;
  out["oddness_residual"] = rep.oddness_residual;
  out["periodicity_residual"] = rep.periodicity_residual;
  out["max_abs_on_range"] = rep.max_abs_on_range;
  out["interval_integral_min"] = rep.interval_integral_min;
  out["interval_integral_max"] = rep.interval_integral_max;
  out["decomposition_error"] = rep.decomposition_error;
  out["lipschitz_estimate"] = rep.lipschitz_estimate;
  return out;
}

py::list correlation(const std::vector<int>& d_values, int trials, int mc_samples, int f_r, std::uint64_t seed,
                     int jobs) {
  CorrelationOptions opt;
  opt.d_values = d_values;
  opt.trials = trials;
  opt.mc_samples = mc_samples;
  opt.jobs = jobs;
  const RandomSource root{seed, 0};
  const auto rows = correlation_decay(
      [&](int d) { return random_relu_network(d, f_r, root.child(static_cast<std::uint64_t>(d))); }, opt,
      root.child(0x5eed));
  py::list out;
  for (const auto& r : rows) {
    py::dict row;
    row["d"] = r.d;
    row["mean_sq"] = r.mean_sq;
    row["std_error"] = r.std_error;
    row["f_norm_sq"] = r.f_norm_sq;
    out.append(row);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_rflab, m) {
  m.doc() = "random-features lab core";
  m.attr("__version__") = RFLAB_VERSION;

  m.def("run_cli", [](const std::vector<std::string>& args) {
    py::gil_scoped_release release;
    return cli::run(args);
  }, py::arg("args"), "Run a subcommand as the rflab tool would; returns the exit code.");

  m.def("legendre_eval", &legendre_eval, py::arg("n"), py::arg("w"));
  m.def("legendre_norm_sq", &legendre_norm_sq, py::arg("n"));
  m.def("gauss_legendre_rule", [](int n) { return rule_tuple(gauss_legendre_rule(n)); }, py::arg("order"));
  m.def("gauss_hermite_rule", [](int n) { return rule_tuple(gauss_hermite_rule(n)); }, py::arg("order"),
        "Nodes and weights for the standard normal density.");

  m.def("construct_and_verify", &construct_and_verify, py::arg("d"), py::arg("k"), py::arg("alpha") = 1.0,
        py::arg("activation") = "exp", py::arg("probes") = 20, py::arg("seed") = 0, py::arg("quad_order") = 0,
        py::arg("truncate") = true);
  m.def("params", &params, py::arg("epsilon"), py::arg("delta"), py::arg("d"), py::arg("k"), py::arg("alpha") = 1.0,
        py::arg("activation") = "exp");

  m.def("psi", [](int d, const std::vector<double>& xs) {
    const PsiFunction f(d);
    std::vector<double> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(f(x));
    return out;
  }, py::arg("d"), py::arg("x"));
  m.def("psi_properties", &psi_properties, py::arg("d"), py::arg("grid") = 10000);
  m.def("psi_gaussian_norm", [](int d, double sigma, int order) { return psi_gaussian_norm(PsiFunction(d), sigma, order); },
        py::arg("d"), py::arg("sigma"), py::arg("order") = 20);

  m.def("linear_residual", [](int d, int r, int trials, std::uint64_t seed, int jobs) {
    py::gil_scoped_release release;
    return linear_residual(d, r, trials, RandomSource{seed, 0}, jobs);
  }, py::arg("d"), py::arg("r"), py::arg("trials"), py::arg("seed") = 0, py::arg("jobs") = 1);
  m.def("correlation_decay", &correlation, py::arg("d_values"), py::arg("trials") = 64, py::arg("mc_samples") = 100000,
        py::arg("f_r") = 50, py::arg("seed") = 0, py::arg("jobs") = 1);
  m.def("train_single_neuron", [](const Vector& w, double b, std::size_t n, std::uint64_t seed) {
    const auto res = train_single_neuron(ReluNeuron{w, b}, n, RandomSource{seed, 0});
    return py::make_tuple(res.w, res.b, res.normalized_error);
  }, py::arg("w"), py::arg("b"), py::arg("n_train") = 4000, py::arg("seed") = 0);

  m.def("relu_exp_identity", [](double z, int order, int sign) { return relu_exp_identity_lhs(z, order, sign); },
        py::arg("z"), py::arg("order") = 20, py::arg("sign") = 1);
}
