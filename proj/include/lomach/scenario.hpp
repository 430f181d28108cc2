#pragma once

#include <map>
#include <string>

#include "lomach/field.hpp"

namespace lomach {

/// An incompressible Euler solution packaged for the pipeline: velocity u,
/// pressure pi (mean zero), and the initial slice u0.
struct Scenario {
    std::string name;
    VectorField u;
    ScalarField pi;
    VectorField u0;
    enum class Provenance { analytic, file } provenance = Provenance::analytic;
    bool pi_recovered = false;
    double declared_tol = 1e-8;
};

using ScenarioParams = std::map<std::string, double>;

/// Catalog entries:
///   taylor_green_2d  params: amplitude (1), drift_x1 (0), drift_x2 (0).
///                    u = U + A (cos X1 sin X2, -sin X1 cos X2), X = x - U t,
///                    pi = -A^2 (cos 2X1 + cos 2X2)/4.
///   shear_2d         params: amplitude (1), mode (1). u = (A cos(k x2), 0), pi = 0.
///   beltrami_3d      params: a, b, c (1,1,1). ABC field, pi = -|u|^2/2 mean zero.
Scenario make_analytic(const std::string& name, const GridSpec& grid,
                       const ScenarioParams& params = {});

/// Solves -lap pi = div div (u (x) u), mean zero.
ScalarField recover_pressure(const VectorField& u);

/// Builds a Scenario from a stored velocity field; recovers pi per slice when
/// no pressure file is given.
Scenario load_scenario(const std::string& u_path, const std::string& pi_path = {});

/// Maximum absolute defect of the weak-form identity over all divergence-free
/// trigonometric test fields with |k|_inf <= test_modes (plus constants) and a
/// battery of smooth time profiles vanishing at t = T; includes the
/// initial-data term.
double incompressible_residual(const Scenario& s, int test_modes);

}  // namespace lomach
