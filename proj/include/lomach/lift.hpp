#pragma once

#include <vector>

#include "lomach/regularize.hpp"

namespace lomach {

/// Compressible subsolution built from the mollified incompressible data:
/// rho = (delta^2 pi_eps + K_star)^(1/gamma) with unit spatial mean, momentum
/// corrector m = grad (-lap)^-1 (d_t rho), v = (u_eps + m)/rho, and the
/// delta-small defect correction R_tilde.
struct LiftResult {
    double delta = 0.0;
    double gamma = 1.4;
    std::vector<double> K_star;  // one value per time slice
    ScalarField rho;
    VectorField m;
    VectorField v;
    VectorField V;  // rho * v = u_eps + m
    SymTensorField R_tilde;

    struct Report {
        double rho_c0_gap = 0.0;     // ||rho - 1||_C0
        double m_linf = 0.0;         // ||m||_Linf
        double m_l2 = 0.0;           // ||m||_L2
        double r_tilde_linf = 0.0;   // ||R_tilde - (eps/8) Id||_Linf
        double lambda_min_total = 0.0;  // min lambda_min(R_eps + R_tilde)
    } report;
};

/// Root of <(delta^2 pi_eps(t,.) + K)^(1/gamma)> = 1, found by safeguarded
/// Newton/bisection to 1e-13. Throws Infeasible when delta^2 pi_eps + K
/// cannot be kept positive.
double solve_K_star(const ScalarField& pi_eps, double delta, double gamma, int t);

struct DensityResult {
    ScalarField rho;
    std::vector<double> K_star;
};

DensityResult build_density(const ScalarField& pi_eps, double delta, double gamma);

/// m = grad (-lap)^-1 (d_t rho): solves d_t rho + div m = 0 spectrally.
VectorField build_momentum_corrector(const ScalarField& rho);

SymTensorField build_R_tilde(const VectorField& u_eps, const VectorField& m,
                             const ScalarField& rho, double epsilon);

/// Full lift of a regularized state.
LiftResult lift(const RegularizationResult& r, double delta, double gamma);

struct SubsolutionResidual {
    double mass_res = 0.0;
    double momentum_res = 0.0;
};

/// Strong-form residuals of the compressible relaxed system. The pressure
/// gradient uses the exact identity grad(rho^gamma)/delta^2 = grad pi_eps.
SubsolutionResidual subsolution_residual(const LiftResult& L,
                                         const RegularizationResult& r);

struct LiftBoundReport {
    double rho_c0 = 0.0;
    double momentum_l2 = 0.0;
    double r_tilde_linf = 0.0;
    double sum = 0.0;
    bool pass = false;
};

/// ||rho - 1||_C0 + ||rho v - u_eps||_L2 + ||R_tilde||_Linf <= eps ?
LiftBoundReport lift_bound_check(const LiftResult& L, const VectorField& u_eps,
                              double epsilon);

}  // namespace lomach
