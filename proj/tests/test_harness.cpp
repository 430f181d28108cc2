#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "lomach/errors.hpp"
#include "lomach/manifest.hpp"
#include "lomach/sweep.hpp"
#include "lomach/weakform.hpp"

using namespace lomach;

namespace {

RunManifest zero_velocity_manifest() {
    RunManifest mf;
    mf.scenario = "shear_2d";
    mf.params["amplitude"] = 0.0;
    mf.grid.n = 2;
    mf.grid.modes_per_axis = 32;
    mf.grid.T = 1.0;
    mf.grid.time_steps = 40;
    mf.epsilons = {0.2};
    mf.deltas = {{0.04}};
    mf.budget = 20;
    mf.trace_target = 0.5;
    mf.test_modes = 3;
    mf.seed = 5;
    return mf;
}

}  // namespace

TEST_CASE("rate fit recovers a quadratic law") {
    std::vector<double> x{0.01, 0.02, 0.04, 0.08, 0.16};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * v * v);
    auto f = fit_rate(x, y);
    CHECK(std::abs(f.slope - 2.0) < 1e-6);
    CHECK(f.r2 > 1.0 - 1e-12);
}

TEST_CASE("rate fit of flat data is zero slope") {
    std::vector<double> x{0.01, 0.05, 0.25};
    std::vector<double> y{7.5, 7.5, 7.5};
    auto f = fit_rate(x, y);
    CHECK(std::abs(f.slope) < 1e-12);
    CHECK(f.r2 == 1.0);
}

TEST_CASE("rate fit rejects thin data") {
    CHECK_THROWS_AS(fit_rate({0.1, 0.4}, {1.0, 2.0}), InsufficientSpan);
    // three points but less than a factor 4 of span
    CHECK_THROWS_AS(fit_rate({0.1, 0.2, 0.3}, {1.0, 2.0, 3.0}), InsufficientSpan);
    CHECK_THROWS_AS(fit_rate({0.0, 0.1, 0.4}, {1.0, 2.0, 3.0}), InsufficientSpan);
}

TEST_CASE("manifest serialization round trips and hashes stably") {
    RunManifest mf = zero_velocity_manifest();
    mf.epsilons = {0.2, 0.1};
    mf.deltas = {{0.04, 0.02}, {0.02}};
    auto text = manifest_to_json(mf);
    auto back = manifest_from_json(text);
    CHECK(manifest_to_json(back) == text);
    CHECK(manifest_hash(back) == manifest_hash(mf));
    CHECK(manifest_hash(mf).size() == 16);

    RunManifest other = mf;
    other.seed = 6;
    CHECK(manifest_hash(other) != manifest_hash(mf));

    const std::string path = "test_manifest_tmp.json";
    save_manifest(mf, path);
    auto loaded = load_manifest(path);
    CHECK(manifest_to_json(loaded) == text);
    std::filesystem::remove(path);
}

TEST_CASE("manifest validation rejects malformed schedules") {
    RunManifest mf = zero_velocity_manifest();
    mf.epsilons.clear();
    mf.deltas.clear();
    CHECK_THROWS_AS(mf.validate(), PreconditionViolated);
    mf = zero_velocity_manifest();
    mf.deltas.push_back({0.01});
    CHECK_THROWS_AS(mf.validate(), PreconditionViolated);
    mf = zero_velocity_manifest();
    mf.epsilons = {0.6};  // empties the common window
    mf.deltas = {{0.01}};
    CHECK_THROWS_AS(mf.validate(), PreconditionViolated);
}

TEST_CASE("report serialization round trips byte for byte") {
    SweepReport rep;
    rep.manifest = zero_velocity_manifest();
    rep.manifest_digest = manifest_hash(rep.manifest);
    SweepRow r;
    r.epsilon = 0.2;
    r.delta = 0.04;
    r.delta0 = 0.5;
    r.delta_le_delta0 = true;
    r.rho_c0_gap = 1.25e-3;
    r.trace_fraction = 0.5;
    r.accepted_steps = 7;
    r.pairings.push_back({{0, 0, 0}, 0.0});
    r.pairings.push_back({{1, -2, 0}, 3.5e-4});
    rep.rows.push_back(r);

    auto j1 = report_to_json(rep);
    auto j2 = report_to_json(report_from_json(j1));
    CHECK(j1 == j2);
    auto csv = report_to_csv(rep);
    CHECK(csv.find("epsilon,delta,delta0") != std::string::npos);

    SweepReport empty = rep;
    empty.rows.clear();
    auto header_only = report_to_csv(empty);
    // comment block plus column header, no data rows
    CHECK(std::count(header_only.begin(), header_only.end(), '\n') == 4);
    CHECK(header_only.back() == '\n');
    CHECK(header_only.substr(header_only.size() - 7) == ",error\n");
}

TEST_CASE("zero velocity sweep: oscillation energy stays under the trace budget") {
    auto rep = run_sweep(zero_velocity_manifest());
    REQUIRE(rep.rows.size() == 1);
    const auto& r = rep.rows[0];
    CHECK(r.error.empty());
    CHECK(r.rho_c0_gap == 0.0);           // flat pressure gives unit density exactly
    CHECK(r.weak_mass_defect < 1e-10);
    CHECK(r.accepted_steps > 0);
    CHECK(r.delta_le_delta0);
    // ||rho vhat - u||^2 = int |V~|^2 <= (4/3) int tr R0 with
    // tr R0 = n (eps/2 + eps/8) on the window
    const double n = 2.0, eps = 0.2, vol = std::pow(kTwoPi, 2);
    const double t_window = rep.manifest.grid.T - 2.0 * eps;
    const double budget = (4.0 / 3.0) * (n * eps / 2 + n * eps / 8) * vol * t_window;
    CHECK(r.momentum_l2_gap * r.momentum_l2_gap <= budget * (1.0 + 1e-8));
    CHECK(std::abs(r.trace_r0 - (n * eps / 2 + n * eps / 8) * vol * t_window) < 1e-8);
    // mean-zero data pairs to nothing against the constant mode
    CHECK(r.pairings.at(0).value < 1e-12);
    CHECK(r.weak_momentum_defect <= 1e-3 + 2.0 * r.trace_fraction * r.trace_r0);
}

TEST_CASE("sweep output is deterministic and worker-count independent") {
    auto mf = zero_velocity_manifest();
    mf.budget = 6;
    mf.deltas = {{0.04, 0.02}};
    auto a = report_to_json(run_sweep(mf));
    auto b = report_to_json(run_sweep(mf));
    CHECK(a == b);
    setenv("LOMACH_WORKERS", "2", 1);
    auto c = report_to_json(run_sweep(mf));
    unsetenv("LOMACH_WORKERS");
    CHECK(a == c);
}

TEST_CASE("taylor-green row records lift quality and weak-form defects") {
    RunManifest mf;
    mf.scenario = "taylor_green_2d";
    mf.grid.n = 2;
    mf.grid.modes_per_axis = 32;
    mf.grid.T = 1.0;
    mf.grid.time_steps = 40;
    mf.epsilons = {0.2};
    mf.deltas = {{0.04, 0.02}};
    mf.budget = 5;
    mf.trace_target = 0.5;
    mf.test_modes = 3;
    mf.seed = 2;
    auto rep = run_sweep(mf);
    REQUIRE(rep.rows.size() == 2);
    for (const auto& r : rep.rows) {
        CHECK(r.error.empty());
        CHECK(r.delta0 > 0.0);
        if (r.delta <= r.delta0) CHECK(r.lift_bound_ok);
        CHECK(r.rho_c0_gap > 0.0);
        CHECK(r.rho_c0_gap < 0.05);
        CHECK(r.weak_mass_defect <= 1e-3 + 2.0 * r.trace_fraction * r.trace_r0);
        CHECK(r.weak_momentum_defect <= 1e-3 + 2.0 * r.trace_fraction * r.trace_r0);
        CHECK(!r.pairings.empty());
    }
    // the density gap shrinks with delta
    CHECK(rep.rows[1].rho_c0_gap <= rep.rows[0].rho_c0_gap * 1.1);
}
