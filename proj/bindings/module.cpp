// Python bindings for the main operations. Kept thin: structs map to small
// classes, heavyweight searches return summary dicts.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "torsion/arithmetic.hpp"
#include "torsion/twist_maps.hpp"

namespace py = pybind11;
using namespace torsion;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Twist-map IFS, blender and restricted 3-body numerics";

    py::register_exception<RationalDetected>(m, "RationalDetected");
    py::register_exception<NotHyperbolic>(m, "NotHyperbolic");
    py::register_exception<RegimeInfeasible>(m, "RegimeInfeasible");

    m.def(
        "continued_fraction",
        [](double x, int depth) { return continued_fraction(static_cast<long double>(x), depth); },
        py::arg("x"), py::arg("depth"));
    m.def(
        "value_from_quotients",
        [](const std::vector<std::uint64_t>& q) {
            return static_cast<double>(value_from_quotients(q));
        },
        py::arg("quotients"));
    m.def(
        "diophantine_constant",
        [](double beta, std::uint64_t q_max) {
            return diophantine_constant(RotationNumber(beta), q_max);
        },
        py::arg("beta"), py::arg("q_max"));
    m.def(
        "orbit_density_radius",
        [](double beta, double offset, std::uint64_t N) {
            return orbit_density_radius(RotationNumber(beta), offset, N);
        },
        py::arg("beta"), py::arg("offset"), py::arg("N"));
}
