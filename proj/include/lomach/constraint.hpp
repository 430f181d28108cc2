#pragma once

#include "lomach/field.hpp"

namespace lomach {

/// Relaxed-system state on a time window of the torus. rho0 is pinched in
/// [1/Lambda^2, Lambda^2], U0 is traceless, R0 is positive definite.
struct SubsolutionState {
    ScalarField rho0;
    VectorField V0;
    SymTensorField U0;
    SymTensorField R0;
    double Lambda = 1.0;

    const GridSpec& grid() const { return rho0.grid(); }
};

struct PerturbationPair {
    VectorField V_tilde;
    SymTensorField U_tilde;
    bool linear_system_ok = false;
    bool strict_ok = false;
    bool l2_ok = false;
    double lin_residual = 0.0;
};

PerturbationPair zero_perturbation(const GridSpec& g);

struct DefectField {
    SymTensorField M;
    ScalarField lambda_min_field;
    double lambda_star = 0.0;    // min over P of min(lmin(M), lmin(R0))
    double trace_integral = 0.0;  // integral of tr M over P
};

/// Point kernels (entries in sym upper-triangle order); used by the field ops
/// and directly by fuzz tests.
namespace pointwise {
void u0_entries(int n, double rho, const double* V, double* out);
void m_entries(int n, double rho, const double* V0, const double* U0,
               const double* R0, const double* Vt, const double* Ut, double* out);
double trace_rhs(int n, double rho, const double* V0, const double* R0,
                 const double* Vt);
}  // namespace pointwise

/// U0 = V0 (x) V0 / rho0 - |V0|^2/(n rho0) Id.
SymTensorField compute_U0(const ScalarField& rho0, const VectorField& V0);

/// M = |V0|^2/(n rho0) Id + R0 - (V0+Vt)(x)(V0+Vt)/rho0 + U0 + Ut.
DefectField compute_M(const SubsolutionState& state, const PerturbationPair& p);

struct StrictReport {
    bool ok = false;
    double min_margin = 0.0;
};

/// Strict matrix inequality: lambda_min(M) > margin_strict everywhere.
StrictReport check_strict(const SubsolutionState& state, const PerturbationPair& p);

struct L2Report {
    bool ok = false;
    double lhs = 0.0;
    double rhs = 0.0;
};

/// |int V0.Vt/rho0| <= (1/8) int |Vt|^2/rho0.
L2Report check_l2(const SubsolutionState& state, const PerturbationPair& p);

/// Max pointwise gap between tr M and tr R0 - |Vt|^2/rho0 - 2 V0.Vt/rho0.
double trace_identity(const SubsolutionState& state, const PerturbationPair& p);

struct EnergyReport {
    double ratio = 0.0;  // int |Vt|^2/rho0 / int tr R0
    bool bound_ok = false;
};

/// Requires check_l2 to pass and lambda_min(M) >= 0; asserts ratio <= 4/3.
EnergyReport energy_ratio(const SubsolutionState& state, const PerturbationPair& p);

/// int |Vt|^2/rho0 and int tr R0 over P (trapezoid in time).
double weighted_energy(const SubsolutionState& state, const VectorField& Vt);
double trace_r0_integral(const SubsolutionState& state);

/// Verifies the rho0 pinching, U0 tracelessness, and R0 positivity invariants.
void validate_state(const SubsolutionState& state);

}  // namespace lomach
