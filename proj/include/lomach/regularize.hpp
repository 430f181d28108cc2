#pragma once

#include <vector>

#include "lomach/mollifier.hpp"
#include "lomach/scenario.hpp"

namespace lomach {

/// Mollified relaxed-system data on [0, T - epsilon]: divergence-free u_eps,
/// pressure pi_eps, and the strictly positive Reynolds defect
/// R_eps = (u (x) u)^eps - u_eps (x) u_eps + (eps/2) Id.
struct RegularizationResult {
    double epsilon = 0.0;
    double alpha_eps = 0.0;
    VectorField u_eps;
    ScalarField pi_eps;
    SymTensorField R_eps;

    struct Report {
        double u_l2_gap = 0.0;        // ||u_eps - u||_L2
        double commutator_l1 = 0.0;   // ||(u(x)u)^eps - u_eps(x)u_eps||_L1
        double lambda_min = 0.0;      // min over all points of lambda_min(R_eps)
        double lambda_max = 0.0;
        std::vector<double> ladder_alphas;  // scales tried, largest first
        std::vector<double> ladder_gaps;    // ||u_eps - u||_L2 at each scale
    } report;
};

/// Largest alpha on the geometric ladder {eps, eps/2, eps/4, ...} meeting
/// ||u_eps - u||_L2 <= eps/2 and the L1 commutator bound <= eps/2. Throws
/// ScaleLadderExhausted when the ladder drops below the discrete time window
/// (2 dt) without success.
RegularizationResult regularize(const Scenario& s, double epsilon);

/// Strong-form residual of the relaxed system:
/// max |d_t u_eps + div(u_eps (x) u_eps) + grad pi_eps + div R_eps|.
double relaxed_residual(const RegularizationResult& r);

struct BoundReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

/// lhs = ||u_eps - u||_L2 + ||R_eps||_L1, rhs = C_cal * epsilon.
BoundReport mollification_bound_check(const RegularizationResult& r, const Scenario& s,
                            double C_cal);

}  // namespace lomach
