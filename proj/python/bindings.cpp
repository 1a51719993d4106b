#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "centroidkit/combi.hpp"
#include "centroidkit/cover.hpp"
#include "centroidkit/dual.hpp"
#include "centroidkit/error.hpp"
#include "centroidkit/experiments.hpp"
#include "centroidkit/norms.hpp"
#include "centroidkit/serialize.hpp"
#include "centroidkit/sudakov.hpp"

namespace py = pybind11;
using namespace centroidkit;

namespace {

py::dict estimate_dict(const NormEstimate& e) {
  py::dict d;
  d["value"] = e.value;
  d["ci_low"] = e.ci_low;
  d["ci_high"] = e.ci_high;
  d["std_error"] = e.std_error;
  d["method"] = to_string(e.method);
  if (e.lower_witness) d["lower_witness"] = e.lower_witness->value;
  if (e.upper_bound) d["upper_bound"] = e.upper_bound->value;
  return d;
}

DualSolveOptions dual_options(std::int64_t sample_budget, bool prefer_exact, std::uint64_t seed) {
  DualSolveOptions o;
  o.sample_budget = sample_budget;
  o.prefer_exact = prefer_exact;
  o.seed = seed;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of centroidkit";

  // Later registrations are tried first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<DistributionSpec>(m, "DistributionSpec")
      .def_static("gaussian", &DistributionSpec::gaussian, py::arg("n"))
      .def_static("exponential", &DistributionSpec::exponential, py::arg("n"))
      .def_static("rademacher", &DistributionSpec::rademacher, py::arg("n"))
      .def_static("uniform_sphere", [](int n) { return DistributionSpec::uniform_sphere(n); }, py::arg("n"))
      .def_static("uniform_cube", &DistributionSpec::uniform_cube, py::arg("n"))
      .def_static("sparse", &DistributionSpec::sparse, py::arg("n"))
      .def_static("linear_image", &DistributionSpec::linear_image, py::arg("matrix"), py::arg("base"))
      .def_static("from_json", [](const std::string& text) { return spec_from_json(Json::parse(text)); })
      .def_property_readonly("dim", &DistributionSpec::dim)
      .def_property_readonly("family", [](const DistributionSpec& s) { return to_string(s.family()); })
      .def_property_readonly("is_isotropic", [](const DistributionSpec& s) { return s.flags().is_isotropic; })
      .def_property_readonly("is_unconditional", [](const DistributionSpec& s) { return s.flags().is_unconditional; })
      .def_property_readonly("is_log_concave", [](const DistributionSpec& s) { return s.flags().is_log_concave; })
      .def("__repr__", &DistributionSpec::describe);

  m.def(
      "sample", [](const DistributionSpec& spec, std::int64_t count, std::uint64_t seed) {
        return Eigen::MatrixXd(sample(spec, count, seed).data());
      },
      py::arg("spec"), py::arg("count"), py::arg("seed"));

  m.def(
      "mp_norm", [](const DistributionSpec& spec, double p, const Eigen::VectorXd& t, std::int64_t samples,
                    std::uint64_t seed) { return estimate_dict(mp_norm_mc(sample(spec, samples, seed), p, t)); },
      py::arg("spec"), py::arg("p"), py::arg("t"), py::arg("samples") = 100'000, py::arg("seed") = 0);
  m.def(
      "mp_norm_exact_even",
      [](const DistributionSpec& spec, int k, const Eigen::VectorXd& t) {
        return mp_norm_exact_even(spec, k, t).value;
      },
      py::arg("spec"), py::arg("k"), py::arg("t"));
  m.def(
      "zp_norm",
      [](const DistributionSpec& spec, double p, const Eigen::VectorXd& s, std::int64_t sample_budget,
         bool prefer_exact, std::uint64_t seed) {
        return estimate_dict(zp_norm(spec, p, s, dual_options(sample_budget, prefer_exact, seed)));
      },
      py::arg("spec"), py::arg("p"), py::arg("s"), py::arg("sample_budget") = 100'000, py::arg("prefer_exact") = true,
      py::arg("seed") = 0);
  m.def(
      "zp_moment",
      [](const DistributionSpec& spec, double p, double q, std::int64_t outer, std::int64_t sample_budget,
         bool prefer_exact, std::uint64_t seed) {
        const auto rep = zp_moment(spec, p, q, outer, dual_options(sample_budget, prefer_exact, seed), seed);
        py::dict d = estimate_dict(rep.estimate);
        d["witness"] = rep.witness_estimate.value;
        d["ratio_to_conjecture"] = rep.ratio_to_conjecture;
        d["norm_method"] = to_string(rep.norm_method);
        return d;
      },
      py::arg("spec"), py::arg("p"), py::arg("q"), py::arg("outer") = 1000, py::arg("sample_budget") = 100'000,
      py::arg("prefer_exact") = true, py::arg("seed") = 0);

  m.def(
      "c2k",
      [](int n, int k) {
        const C2k c = c2k(n, k);
        return py::make_tuple(c.value, c.exact.get_str());
      },
      py::arg("n"), py::arg("k"), "(c_2k, exact c_2k^2k as a fraction string)");
  m.def(
      "c2k_bounds",
      [](int n, int k) {
        const C2kBounds b = c2k_bounds(n, k);
        return py::make_tuple(b.lower.get_str(), b.upper.get_str());
      },
      py::arg("n"), py::arg("k"));
  m.def(
      "rademacher_norm", [](const Eigen::VectorXd& a, double p) { return rademacher_norm_exact(a, p).value; },
      py::arg("a"), py::arg("p"));
  m.def("hitczenko_surrogate", &hitczenko_surrogate, py::arg("a"), py::arg("p"));

  m.def(
      "cover_count",
      [](const DistributionSpec& spec, double p, double eps, std::uint64_t seed) {
        return greedy_net(BodyOracle::mp_ball(spec, p), eps, seed).count;
      },
      py::arg("spec"), py::arg("p"), py::arg("eps"), py::arg("seed") = 0,
      "Greedy cover count of the M_p ball on a candidate cloud.");
  m.def(
      "sparse_minoration",
      [](int n, std::int64_t samples, std::uint64_t seed) {
        SudakovBudgets b;
        b.samples = samples;
        const auto T = IndexSet::cube(n, 1.0 / std::sqrt(static_cast<double>(n)));
        const auto rep = minoration_constant_lower(DistributionSpec::sparse(n), T, default_eps_grid(T.diameter()), b, seed);
        return py::make_tuple(rep.cx_lower, rep.sup_estimate.value);
      },
      py::arg("n"), py::arg("samples") = 10'000, py::arg("seed") = 0, "(cx_lower, E sup) for the sparse law.");

  m.def("experiment_names", &experiment_names);
  m.def(
      "run_experiment",
      [](const std::string& name, const std::string& config_json, std::optional<std::uint64_t> seed, int jobs) {
        const auto rep = run(make_config(Json::parse(config_json, nullptr, true, true), name, seed, jobs));
        return py::make_tuple(rep.passed(), rep.to_json().dump(2));
      },
      py::arg("name"), py::arg("config_json"), py::arg("seed") = py::none(), py::arg("jobs") = 1,
      "(passed, report JSON text)");
}
