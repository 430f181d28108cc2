#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lomach/constraint.hpp"
#include "lomach/engine.hpp"
#include "lomach/errors.hpp"
#include "lomach/norms.hpp"
#include "lomach/spectral.hpp"
#include "lomach/symmat.hpp"

using namespace lomach;

namespace {

GridSpec make_grid(int n, int N, int steps) {
    GridSpec g;
    g.n = n;
    g.modes_per_axis = N;
    g.T = 1.0;
    g.time_steps = steps;
    return g;
}

SubsolutionState identity_state(const GridSpec& g, double rho = 1.0,
                                double lambda = 2.0) {
    SubsolutionState s;
    s.rho0 = ScalarField(g, "rho0");
    for (auto& v : s.rho0.raw()) v = rho;
    s.V0 = VectorField(g, "V0");
    s.U0 = compute_U0(s.rho0, s.V0);
    s.R0 = SymTensorField(g, "R0");
    for (int t = 0; t < g.slices(); ++t)
        for (int i = 0; i < g.n; ++i) {
            auto d = s.R0.slice(t, SymTensorField::sym_index(g.n, i, i));
            for (auto& v : d) v = 1.0;
        }
    s.Lambda = lambda;
    return s;
}

// independent trapezoid quadrature for the test-side oracles
double pairing_oracle(const SubsolutionState& s, const VectorField& V) {
    const GridSpec& g = s.grid();
    double total = 0.0;
    for (int t = 0; t < g.slices(); ++t) {
        double sl = 0.0;
        for (std::size_t p = 0; p < g.points(); ++p)
            for (int d = 0; d < g.n; ++d)
                sl += s.V0.at(t, d, p) * V.at(t, d, p) / s.rho0.at(t, 0, p);
        double w = (t == 0 || t == g.time_steps) ? 0.5 : 1.0;
        total += w * g.dt() * g.cell_volume() * sl;
    }
    return total;
}

ScalarField component(const VectorField& v, int c) {
    ScalarField out(v.grid());
    for (int t = 0; t < v.slices(); ++t) {
        auto src = v.slice(t, c);
        auto dst = out.slice(t, 0);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

double min_lambda_min(const SubsolutionState& s, const PerturbationPair& p) {
    auto d = compute_M(s, p);
    double mn = 1e300;
    for (double v : d.lambda_min_field.raw()) mn = std::min(mn, v);
    return mn;
}

}  // namespace

TEST_CASE("cube grid on a constant state returns one coarsest cube") {
    auto g = make_grid(2, 16, 8);
    auto s = identity_state(g);
    auto d0 = compute_M(s, zero_perturbation(g));
    auto patches = build_cube_grid(s, d0);
    REQUIRE(patches.size() == 1);
    const auto& q = patches.front();
    CHECK(q.size_cells == 16);
    CHECK(q.t_first == 0);
    CHECK(q.t_last == g.time_steps);
    CHECK(q.rho_bar == doctest::Approx(1.0));
    CHECK(q.rho_under == doctest::Approx(1.0));
    CHECK(q.C_Q == doctest::Approx(0.0));
}

TEST_CASE("cube size shrinks when the margin budget is halved") {
    auto g = make_grid(2, 32, 32);
    auto s = identity_state(g);
    const double a = 0.004;
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p)
            s.R0.at(t, 0, p) += a * std::sin(s.R0.coord(p, 0));
    auto d0 = compute_M(s, zero_perturbation(g));
    auto coarse = build_cube_grid(s, d0);
    REQUIRE(!coarse.empty());
    CHECK(coarse.front().size_cells == 32);

    auto tight = d0;
    tight.lambda_star *= 0.5;
    auto fine = build_cube_grid(s, tight);
    REQUIRE(!fine.empty());
    CHECK(fine.front().size_cells < coarse.front().size_cells);
}

TEST_CASE("admissible cubes keep positive averages and trace lower bound") {
    auto g = make_grid(2, 32, 4);
    auto s = identity_state(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) {
            s.R0.at(t, 0, p) = 1.2 + 0.003 * std::sin(s.R0.coord(p, 0));
            s.R0.at(t, 2, p) = 1.1;
            s.V0.at(t, 0, p) = 0.05 * std::cos(s.V0.coord(p, 1));
        }
    s.U0 = compute_U0(s.rho0, s.V0);
    auto d0 = compute_M(s, zero_perturbation(g));
    auto patches = build_cube_grid(s, d0);
    REQUIRE(!patches.empty());
    for (const auto& q : patches) {
        CHECK(symmat::lambda_min(g.n, q.R_bar_Q.data()) > 0.0);
        double tr = 0.0;
        for (int i = 0; i < g.n; ++i)
            tr += q.M_bar_Q[SymTensorField::sym_index(g.n, i, i)];
        CHECK(tr > 0.25 * q.min_tr_M);
    }
}

TEST_CASE("zero amplitude wave is the zero pair") {
    auto g = make_grid(2, 16, 8);
    auto s = identity_state(g);
    auto d0 = compute_M(s, zero_perturbation(g));
    auto patches = build_cube_grid(s, d0);
    WaveSpec w;
    w.e = {1.0, 0.0, 0.0};
    w.xi = {0.0, 1.0, 0.0};
    w.amplitude = 0.0;
    w.frequency = 4;
    auto p = localized_wave(s, patches.front(), w);
    CHECK(p.V_tilde.max_abs() == 0.0);
    CHECK(p.U_tilde.max_abs() == 0.0);
    CHECK(p.linear_system_ok);
}

TEST_CASE("stream potential velocity is discretely divergence free") {
    auto g = make_grid(2, 32, 8);
    auto s = identity_state(g);
    auto d0 = compute_M(s, zero_perturbation(g));
    auto patches = build_cube_grid(s, d0);
    WaveSpec w;
    w.e = {1.0, 0.0, 0.0};
    w.xi = {0.0, 1.0, 0.0};
    w.amplitude = 0.7;
    w.phase_speed = 0.3;
    w.frequency = 4;
    auto p = localized_wave(s, patches.front(), w);
    REQUIRE(p.V_tilde.max_abs() > 0.0);
    ScalarField div(spectral::partial(component(p.V_tilde, 0), 0));
    div.axpy(1.0, spectral::partial(component(p.V_tilde, 1), 1));
    CHECK(div.max_abs() < 1e-11 * p.V_tilde.max_abs());
    CHECK(p.lin_residual <= 1e-8 * p.V_tilde.max_abs());

    // zero space-time mean
    double mean = 0.0;
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t q2 = 0; q2 < g.points(); ++q2)
            mean += p.V_tilde.at(t, 0, q2) + p.V_tilde.at(t, 1, q2);
    CHECK(std::abs(mean) / (g.slices() * g.points()) < 1e-12);
}

TEST_CASE("frequency doubling preserves energy and cancels weakly") {
    auto g = make_grid(2, 64, 8);
    auto s = identity_state(g);
    auto d0 = compute_M(s, zero_perturbation(g));
    auto patches = build_cube_grid(s, d0);
    WaveSpec w;
    w.e = {1.0, 0.0, 0.0};
    w.xi = {0.0, 1.0, 0.0};
    w.amplitude = 0.5;
    w.phase_speed = 0.2;
    w.frequency = 8;
    auto p1 = localized_wave(s, patches.front(), w);
    w.frequency = 16;
    auto p2 = localized_wave(s, patches.front(), w);

    double l2a = norm(p1.V_tilde, NormKind::L2);
    double l2b = norm(p2.V_tilde, NormKind::L2);
    CHECK(std::abs(l2a - l2b) <= 0.05 * std::max(l2a, l2b));

    // pairing against ten fixed smooth test fields
    double acc1 = 0.0, acc2 = 0.0;
    for (int j = 0; j < 10; ++j) {
        int a = j % 3 - 1, b = j / 3 % 3 - 1;
        double s1 = 0.0, s2 = 0.0;
        for (int t = 0; t < g.slices(); ++t) {
            double r1 = 0.0, r2 = 0.0;
            for (std::size_t q2 = 0; q2 < g.points(); ++q2) {
                double x = p1.V_tilde.coord(q2, 0), y = p1.V_tilde.coord(q2, 1);
                double ph0 = std::cos(a * x + b * y + 0.3 * j);
                double ph1 = std::sin((a + 1) * x - b * y + 0.1 * j);
                r1 += p1.V_tilde.at(t, 0, q2) * ph0 + p1.V_tilde.at(t, 1, q2) * ph1;
                r2 += p2.V_tilde.at(t, 0, q2) * ph0 + p2.V_tilde.at(t, 1, q2) * ph1;
            }
            double wt = (t == 0 || t == g.time_steps) ? 0.5 : 1.0;
            s1 += wt * g.dt() * g.cell_volume() * r1;
            s2 += wt * g.dt() * g.cell_volume() * r2;
        }
        acc1 += s1 * s1;
        acc2 += s2 * s2;
    }
    CHECK(std::sqrt(acc1) >= 1.8 * std::sqrt(acc2));
}

TEST_CASE("sign selection fixes the pairing sign") {
    auto g = make_grid(2, 16, 8);
    auto s = identity_state(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) s.V0.at(t, 0, p) = 1.0;
    s.U0 = compute_U0(s.rho0, s.V0);

    const double c = 3.0 / g.domain_volume();
    auto cand = zero_perturbation(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p)
            cand.V_tilde.at(t, 0, p) = c * (1.0 + std::cos(cand.V_tilde.coord(p, 1)));
    CHECK(pairing_oracle(s, cand.V_tilde) == doctest::Approx(3.0).epsilon(1e-12));

    auto kept = sign_select(s, cand);
    CHECK(pairing_oracle(s, kept.V_tilde) == doctest::Approx(3.0).epsilon(1e-12));
    for (std::size_t i = 0; i < kept.V_tilde.raw().size(); ++i)
        CHECK(kept.V_tilde.raw()[i] == cand.V_tilde.raw()[i]);

    auto neg = cand;
    neg.V_tilde.scale(-1.0);
    CHECK(pairing_oracle(s, neg.V_tilde) == doctest::Approx(-3.0).epsilon(1e-12));
    auto flipped = sign_select(s, neg);
    CHECK(pairing_oracle(s, flipped.V_tilde) == doctest::Approx(3.0).epsilon(1e-12));
    for (std::size_t i = 0; i < flipped.V_tilde.raw().size(); ++i)
        CHECK(flipped.V_tilde.raw()[i] == cand.V_tilde.raw()[i]);
}

TEST_CASE("negation preserves the linear residuals exactly") {
    auto g = make_grid(2, 32, 8);
    auto s = identity_state(g);
    auto d0 = compute_M(s, zero_perturbation(g));
    auto patches = build_cube_grid(s, d0);
    WaveSpec w;
    w.e = {0.6, 0.8, 0.0};
    w.xi = {0.8, -0.6, 0.0};
    w.amplitude = 0.5;
    w.phase_speed = -0.4;
    w.frequency = 4;
    auto p = localized_wave(s, patches.front(), w);
    auto neg = p;
    neg.V_tilde.scale(-1.0);
    neg.U_tilde.scale(-1.0);
    double r1 = linear_residual(p);
    double r2 = linear_residual(neg);
    CHECK(std::abs(r1 - r2) <= 1e-14 * std::max(1.0, r1));
}

TEST_CASE("first greedy step on the constant state is accepted") {
    auto g = make_grid(2, 16, 16);
    auto s = identity_state(g);
    auto d0 = compute_M(s, zero_perturbation(g));
    auto patches = build_cube_grid(s, d0);
    std::mt19937_64 rng(7);
    StepRecord rec;
    auto out = greedy_step(s, zero_perturbation(g), patches, rng, rec);
    CHECK(rec.accepted);
    CHECK(rec.trace_after < rec.trace_before);
    CHECK(min_lambda_min(s, out) > 0.0);
    auto er = energy_ratio(s, out);
    CHECK(er.bound_ok);
    CHECK(er.ratio <= 4.0 / 3.0 + 1e-12);
    CHECK(rec.energy_ratio <= 4.0 / 3.0 + 1e-12);
}

TEST_CASE("iteration reaches the trace target on the benchmark state") {
    auto g = make_grid(2, 32, 32);
    auto s = identity_state(g);
    EngineConfig cfg;
    cfg.seed = 1;
    auto [pair, log] = run_iteration(s, 200, 0.5, cfg);
    CHECK(log.fraction <= 0.5);
    double prev = log.trace_initial;
    for (const auto& r : log.steps)
        if (r.accepted) {
            CHECK(r.trace_after < prev);
            CHECK(r.energy_ratio <= 4.0 / 3.0 + 1e-12);
            prev = r.trace_after;
        }
    CHECK(min_lambda_min(s, pair) > 0.0);
}

TEST_CASE("distinct seeds give distinct iterates") {
    auto g = make_grid(2, 16, 16);
    auto s = identity_state(g);
    EngineConfig c1, c2;
    c1.seed = 11;
    c2.seed = 12;
    auto [p1, l1] = run_iteration(s, 8, 0.0, c1);
    auto [p2, l2] = run_iteration(s, 8, 0.0, c2);
    REQUIRE(l1.accepted_steps > 0);
    REQUIRE(l2.accepted_steps > 0);
    auto diff = p1.V_tilde;
    diff.axpy(-1.0, p2.V_tilde);
    double rel = norm(diff, NormKind::L2) / norm(p1.V_tilde, NormKind::L2);
    CHECK(rel > 1e-6);
}

TEST_CASE("vacuous trace target returns the zero pair immediately") {
    auto g = make_grid(2, 16, 8);
    auto s = identity_state(g);
    auto [pair, log] = run_iteration(s, 50, 1.0, {});
    CHECK(log.steps.empty());
    CHECK(pair.V_tilde.max_abs() == 0.0);
    CHECK(pair.U_tilde.max_abs() == 0.0);
    CHECK(log.fraction == doctest::Approx(1.0));
}

TEST_CASE("coercivity probe reports not-applicable on a zero defect") {
    auto g = make_grid(2, 16, 8);
    SubsolutionState s;
    s.rho0 = ScalarField(g, "rho0");
    for (auto& v : s.rho0.raw()) v = 1.0;
    s.V0 = VectorField(g, "V0");
    s.U0 = SymTensorField(g, "U0");
    s.U0.traceless = true;
    s.R0 = SymTensorField(g, "R0");
    auto rep = coercivity_probe(s, {}, 5);
    CHECK(!rep.applicable);
}

TEST_CASE("coercivity probe measures a positive ratio over 100 samples") {
    auto g = make_grid(2, 16, 8);
    auto s = identity_state(g);
    auto d0 = compute_M(s, zero_perturbation(g));
    auto patches = build_cube_grid(s, d0);
    auto rep = coercivity_probe(s, patches, 100);
    CHECK(rep.applicable);
    CHECK(rep.samples == 100);
    CHECK(rep.min_ratio > 0.0);
    CHECK(rep.min_ratio_volume > 0.0);
    CHECK(rep.min_ratio_side > 0.0);
}

TEST_CASE("coercivity ratio roughly halves when the pinching doubles") {
    auto g = make_grid(2, 16, 8);
    auto s1 = identity_state(g, 1.0 / 4.0, 2.0);
    auto s2 = identity_state(g, 1.0 / 16.0, 4.0);
    auto d1 = compute_M(s1, zero_perturbation(g));
    auto d2 = compute_M(s2, zero_perturbation(g));
    auto q1 = build_cube_grid(s1, d1);
    auto q2 = build_cube_grid(s2, d2);
    auto r1 = coercivity_probe(s1, q1, 20);
    auto r2 = coercivity_probe(s2, q2, 20);
    REQUIRE(r1.applicable);
    REQUIRE(r2.applicable);
    double ratio = r2.min_ratio / r1.min_ratio;
    CHECK(ratio >= 0.3);
    CHECK(ratio <= 0.7);
}
