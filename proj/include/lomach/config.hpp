#pragma once

namespace lomach {

/// All numeric tolerances in one place. Defaults are the values used by the
/// test suites; callers may override a copy per run.
struct Tolerances {
    double mean_zero_rel   = 1e-10;  ///< inv_laplacian precondition, relative to max|f|
    double trace_free      = 1e-12;  ///< traceless-flag check, relative to max entry
    double mollifier_mass  = 1e-10;  ///< unit-mass check of the bump profile
    double lin_residual_rel = 1e-8;  ///< linear-system residual budget, relative to max|V~|
    double margin_strict   = 1e-8;   ///< strictness margin for the matrix constraint
    double l2_slack_rel    = 1e-10;  ///< slack factor in the L2 pairing constraint
    double energy_slack_rel = 1e-8;  ///< slack in the 4/3 energy bound
    double k_star_tol      = 1e-13;  ///< root solve tolerance for the density offset
    double min_decrease    = 0.0;    ///< required strict decrease of the trace integral
    double eig_discriminant = 1e-12; ///< 3x3 closed-form vs Jacobi switch, relative
};

inline const Tolerances& default_tolerances() {
    static const Tolerances t{};
    return t;
}

}  // namespace lomach
