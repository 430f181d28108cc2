#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "lomach/constraint.hpp"

namespace lomach {

/// Space-time cube: a window of time slices times a spatial cube of
/// `size_cells` grid cells per axis (periodic wrap-around allowed).
struct CubePatch {
    int t_first = 0, t_last = 0;     // inclusive slice window
    std::array<int, 3> x0{};         // lower corner in cells
    int size_cells = 0;
    bool flat_time = false;          // no time cutoff (window spans all slices)

    // patch statistics at build time
    double rho_bar = 1.0;
    double rho_under = 1.0;          // min of rho0 over the cube
    std::array<double, 3> V_bar{};   // average of V0 + V_tilde
    std::array<double, 3> V0_bar{};
    std::array<double, 6> U_bar{};
    std::array<double, 6> R0_bar{};
    double C_Q = 0.0;                // min over Q of |V0|^2 / rho0
    std::array<double, 6> R_bar_Q{};  // -(lambda_*/16n) Id + R0_bar
    std::array<double, 6> M_bar_Q{};  // (C_Q/n) Id + R_bar_Q - Vbar(x)Vbar/rho_under + Ubar
    double min_tr_M = 0.0;            // min over Q of tr M
};

struct WaveSpec {
    std::array<double, 3> xi{};   // unit phase direction
    std::array<double, 3> e{};    // unit oscillation direction, e _|_ xi
    double amplitude = 0.0;
    double phase_speed = 0.0;
    int frequency = 4;            // integer spatial wavenumber multiplier
    double phase = 0.0;
};

struct StepRecord {
    int step = 0;
    double trace_before = 0.0;
    double trace_after = 0.0;
    double added_l1 = 0.0;        // L1 norm of the added velocity
    double scale = 1.0;           // accepted line-search factor
    double strict_margin = 0.0;
    double energy_ratio = 0.0;
    bool accepted = false;
};

struct IterateLog {
    std::vector<StepRecord> steps;
    double trace_initial = 0.0;
    double trace_final = 0.0;
    double fraction = 1.0;        // trace_final / trace_initial
    int accepted_steps = 0;
};

struct EngineConfig {
    double tol_lin_rel = 1e-8;    // residual budget relative to ||V_tilde||_inf
    double min_decrease = 0.0;
    int max_backtracks = 10;
    int frequency = 0;            // 0: auto (largest resolvable in the patch)
    std::uint64_t seed = 1;
};

/// Disjoint cover of the time interior by space-time cubes of a common size,
/// the coarsest on the halving ladder whose per-cube oscillation passes the
/// lambda_*-thresholds. Throws NoAdmissibleSize when even the finest fails.
std::vector<CubePatch> build_cube_grid(const SubsolutionState& state,
                                       const DefectField& defect,
                                       double shrink = 1.0);

/// Exact cube-localized solution of the linear constraint system, built from a
/// compactly supported potential so that div V_tilde = 0 and
/// d_t V_tilde + div U_tilde = 0 hold at the level of the discrete operators.
PerturbationPair localized_wave(const SubsolutionState& state, const CubePatch& patch,
                                const WaveSpec& spec);

/// Measures both residuals of the linear system.
double linear_residual(const PerturbationPair& p);

/// Flip the candidate's sign so that int V0 . V_tilde / rho0 >= 0.
PerturbationPair sign_select(const SubsolutionState& state, PerturbationPair candidate);

/// One greedy sweep: per-patch waves aimed at the top eigendirection of the
/// local defect, sign selection, then a shared backtracking scale accepted only
/// if the strict and L2 constraints hold and int tr M strictly decreases.
/// Throws NoDecrease when the line search exhausts.
PerturbationPair greedy_step(const SubsolutionState& state,
                             const PerturbationPair& current,
                             const std::vector<CubePatch>& patches, std::mt19937_64& rng,
                             StepRecord& record, const EngineConfig& cfg = {});

/// Greedy iteration until int tr M falls to target * initial or the budget is
/// exhausted; partial progress is always returned.
std::pair<PerturbationPair, IterateLog> run_iteration(const SubsolutionState& state,
                                                      int budget, double target,
                                                      const EngineConfig& cfg = {});

struct CoercivityReport {
    bool applicable = false;
    double min_ratio = 0.0;        // min over samples of ||V_added||_L1 / int tr M
    double min_ratio_volume = 0.0;  // per-cube, |Q| read as space-time volume
    double min_ratio_side = 0.0;    // per-cube, |Q| read as spatial volume only
    int samples = 0;
};

CoercivityReport coercivity_probe(const SubsolutionState& state,
                                  const std::vector<CubePatch>& patches, int samples,
                                  const EngineConfig& cfg = {});

}  // namespace lomach
