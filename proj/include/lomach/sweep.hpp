#pragma once

#include <string>
#include <vector>

#include "lomach/manifest.hpp"
#include "lomach/weakform.hpp"

namespace lomach {

/// One (epsilon, delta) cell of a sweep. When a pipeline stage throws, the
/// message lands in `error` and the remaining entries keep their defaults;
/// the sweep always completes.
struct SweepRow {
    double epsilon = 0.0;
    double delta = 0.0;
    double delta0 = 0.0;            // measured positivity threshold of the lift
    bool delta_le_delta0 = false;

    double rho_c0_gap = 0.0;        // ||rho - 1||_C0 on the common window
    double momentum_l2_gap = 0.0;   // ||rho vhat - u||_L2
    double sqrt_momentum_l2_gap = 0.0;  // ||sqrt(rho) vhat - u||_L2
    double vhat_minus_v_l2sq = 0.0;     // ||vhat - v||_L2^2
    double m_linf = 0.0;
    double r_tilde_gap_linf = 0.0;

    double relaxed_res = 0.0;
    double mass_res = 0.0;
    double momentum_res = 0.0;
    double weak_mass_defect = 0.0;
    double weak_momentum_defect = 0.0;

    double trace_fraction = 1.0;
    double energy_ratio = 0.0;
    double strict_margin = 0.0;
    double l2_lhs = 0.0;            // constraint-margin record of the final pair
    double l2_rhs = 0.0;
    double trace_r0 = 0.0;          // int tr R0 on the window
    int accepted_steps = 0;
    bool lift_bound_ok = false;

    std::string error;
    std::vector<ModePairing> pairings;  // initial-data table vs the scenario u0
};

struct SweepReport {
    RunManifest manifest;
    std::string manifest_digest;
    std::vector<SweepRow> rows;
};

/// Full pipeline per (epsilon, delta): regularize, lift, assemble the
/// relaxed state, run the greedy iteration, measure every reported norm on
/// the common window [0, T - 2 eps_max]. Rows run on LOMACH_WORKERS threads
/// (default 1); output order and content are independent of the worker count.
SweepReport run_sweep(const RunManifest& manifest);

/// Largest delta on the ladder {1/2, 1/4, ...} whose lift succeeds with a
/// strictly positive total defect; 0 when the ladder bottoms out.
double measure_delta0(const struct RegularizationResult& reg, double gamma);

struct RateFit {
    double slope = 0.0;
    double r2 = 0.0;
};

/// Log-log least-squares slope. Needs >= 3 positive samples spanning a factor
/// >= 4 in x; throws InsufficientSpan otherwise.
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y);

/// Deterministic serializations: equal reports give byte-equal strings, and
/// report_from_json is a two-sided inverse on emitted strings.
std::string report_to_json(const SweepReport& rep);
std::string report_to_csv(const SweepReport& rep);
SweepReport report_from_json(const std::string& text);

/// Writes report.json, report.csv and manifest.json under dir (created if
/// missing); dir is conventionally out_dir/<manifest hash>.
void emit_report(const SweepReport& rep, const std::string& dir);

}  // namespace lomach
