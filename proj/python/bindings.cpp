#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fingap/bandset.hpp"
#include "fingap/cli.hpp"
#include "fingap/errors.hpp"
#include "fingap/isotorus.hpp"
#include "fingap/serialize.hpp"
#include "fingap/sumrules.hpp"

namespace py = pybind11;
using namespace fingap;

namespace {

FiniteGapSet set_of(const std::vector<std::pair<double, double>>& bands) {
  std::vector<Band> b;
  for (auto [lo, hi] : bands) b.push_back({lo, hi});
  return FiniteGapSet(std::move(b));
}

}  // namespace

PYBIND11_MODULE(_fingap, m) {
  m.doc() = "finite gap Jacobi matrices";
  m.attr("__version__") = FINGAP_VERSION;

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<AccuracyError>(m, "AccuracyError", PyExc_RuntimeError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);

  // JSON crosses the boundary as text; the package decodes it.
  m.def("equilibrium_json", [](const std::vector<std::pair<double, double>>& bands) {
    return to_json(solve_equilibrium(set_of(bands))).dump();
  });

  m.def("green", [](const std::vector<std::pair<double, double>>& bands, std::complex<double> z) {
    return solve_equilibrium(set_of(bands)).green(z);
  });

  m.def(
      "torus_coefficients",
      [](const std::vector<std::pair<double, double>>& bands, const std::vector<double>& circle, std::size_t N) {
        const auto e = set_of(bands);
        auto t = torus_coefficients(e, DirichletData::from_circle(e, circle), N);
        return std::make_pair(t.a, t.b);
      },
      py::arg("bands"), py::arg("circle"), py::arg("N"));

  m.def(
      "dist_to_torus",
      [](const std::vector<std::pair<double, double>>& bands, std::vector<double> a, std::vector<double> b,
         std::size_t m) {
        py::gil_scoped_release release;
        return dist_to_torus(JacobiParams(std::move(a), std::move(b)), set_of(bands), m).value;
      },
      py::arg("bands"), py::arg("a"), py::arg("b"), py::arg("m") = 1);

  m.def(
      "lt_free_bound",
      [](std::vector<double> a, std::vector<double> b, std::size_t N) {
        const auto c = lt_free_bound(JacobiParams(std::move(a), std::move(b)), N);
        return py::dict(py::arg("lhs") = c.lhs, py::arg("rhs") = c.rhs, py::arg("holds") = c.holds,
                        py::arg("eigenvalues") = c.eigenvalues);
      },
      py::arg("a"), py::arg("b"), py::arg("N") = 2000);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"fingap"};
        for (const auto& s : args) argv.push_back(s.c_str());
        std::ostringstream out, err;
        const int code = run_cli(int(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
