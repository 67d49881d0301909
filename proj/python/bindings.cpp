// Python module for the slitflow library: the same jobs the CLI runs, plus
// direct access to classification and the field evaluators.

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <optional>
#include <string>

#include "json.hpp"
#include "slitflow/coupling.hpp"
#include "slitflow/jobs.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

py::dict classify_py(const std::array<double, 4>& delta,
                     const std::array<double, 3>& sigma) {
  slitflow::Classification cl = slitflow::classify(delta, sigma);
  py::dict out;
  out["family"] = std::string(slitflow::family_name(cl.family));
  out["kappa"] = cl.kappa;
  out["nu"] = cl.nu;
  out["xi"] = cl.xi;
  return out;
}

std::string run_job_py(const std::string& kind, const std::string& config,
                       std::optional<std::uint64_t> seed, int threads,
                       const std::string& out_dir, bool dry_run) {
  json cfg;
  try {
    cfg = json::parse(config);
  } catch (const json::parse_error& e) {
    throw slitflow::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  json report;
  {
    py::gil_scoped_release release;
    report = slitflow::run_job(kind, cfg, seed, threads, out_dir, dry_run);
  }
  return report.dump(2);
}

double gamma_eval_py(const std::string& kernel, const std::string& chart,
                     std::complex<double> z, std::complex<double> w) {
  auto k = slitflow::make_kernel(slitflow::kernel_from_name(kernel));
  return slitflow::gamma_eval(k, slitflow::chart_from_name(chart), z, w);
}

std::complex<double> eta_eval_py(const std::string& family, double kappa, double nu,
                                 const std::string& chart, std::complex<double> z) {
  auto eta = slitflow::make_eta(slitflow::eta_family_from_name(family), kappa, nu);
  return slitflow::eta_eval(eta, slitflow::chart_from_name(chart), z);
}

}  // namespace

PYBIND11_MODULE(_slitflow, m) {
  m.doc() = "slit holomorphic stochastic flows and their free-field couplings";

  m.def("classify", &classify_py, py::arg("delta"), py::arg("sigma"),
        "Classify a raw coefficient pair; returns family, kappa, nu, xi.");

  m.def("run_job", &run_job_py, py::arg("kind"), py::arg("config"),
        py::arg("seed") = py::none(), py::arg("threads") = 0,
        py::arg("out_dir") = ".", py::arg("dry_run") = false,
        "Run a CLI job (classify | check | mc | simulate | sample-gff) from a "
        "JSON config string; returns the JSON report as a string.");

  m.def("gamma_eval", &gamma_eval_py, py::arg("kernel"), py::arg("chart"),
        py::arg("z"), py::arg("w"),
        "Two-point function of the named covariance kernel in the named chart.");

  m.def("eta_eval", &eta_eval_py, py::arg("family"), py::arg("kappa"),
        py::arg("nu"), py::arg("chart"), py::arg("z"),
        "One-point function of the named boundary-data family.");

  py::register_exception<slitflow::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<slitflow::IoError>(m, "IoError", PyExc_OSError);
}
