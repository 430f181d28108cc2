#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lomach/constraint.hpp"
#include "lomach/errors.hpp"
#include "lomach/symmat.hpp"

using namespace lomach;

namespace {

GridSpec make_grid(int n, int N = 8, int steps = 4) {
    GridSpec g;
    g.n = n;
    g.modes_per_axis = N;
    g.T = 1.0;
    g.time_steps = steps;
    return g;
}

SubsolutionState identity_state(const GridSpec& g) {
    SubsolutionState s;
    s.rho0 = ScalarField(g, "rho0");
    for (auto& v : s.rho0.raw()) v = 1.0;
    s.V0 = VectorField(g, "V0");
    s.U0 = compute_U0(s.rho0, s.V0);
    s.R0 = SymTensorField(g, "R0");
    for (int t = 0; t < g.slices(); ++t)
        for (int i = 0; i < g.n; ++i) {
            auto d = s.R0.slice(t, SymTensorField::sym_index(g.n, i, i));
            for (auto& v : d) v = 1.0;
        }
    s.Lambda = 2.0;
    return s;
}

}  // namespace

TEST_CASE("U0: trivial and closed-form cases") {
    GridSpec g = make_grid(2);
    ScalarField rho(g);
    for (auto& v : rho.raw()) v = 1.0;
    VectorField V0(g);
    CHECK(compute_U0(rho, V0).max_abs() == 0.0);

    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) V0.at(t, 0, p) = 1.0;
    auto U0 = compute_U0(rho, V0);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) {
            CHECK(U0.at(t, 0, p) == doctest::Approx(0.5).epsilon(1e-14));
            CHECK(U0.at(t, 1, p) == 0.0);
            CHECK(U0.at(t, 2, p) == doctest::Approx(-0.5).epsilon(1e-14));
        }
}

TEST_CASE("U0 is traceless for random smooth data") {
    for (int n : {2, 3}) {
        GridSpec g = make_grid(n);
        ScalarField rho(g);
        VectorField V0(g);
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (auto& v : rho.raw()) v = 1.5 + 0.5 * U(rng);
        for (auto& v : V0.raw()) v = U(rng);
        auto U0 = compute_U0(rho, V0);
        CHECK(max_abs_trace(U0) <= 1e-12 * std::max(1.0, U0.max_abs()));
    }
}

TEST_CASE("U0 rejects nonpositive density") {
    GridSpec g = make_grid(2);
    ScalarField rho(g);
    VectorField V0(g);
    CHECK_THROWS_AS((void)compute_U0(rho, V0), NonpositiveDensity);
}

TEST_CASE("M: zero perturbation cancels back to R0") {
    for (int n : {2, 3}) {
        GridSpec g = make_grid(n);
        auto s = identity_state(g);
        std::mt19937 rng(9);
        std::uniform_real_distribution<double> U(-0.3, 0.3);
        for (auto& v : s.V0.raw()) v = U(rng);
        for (auto& v : s.rho0.raw()) v = 1.0 + 0.3 * U(rng);
        s.U0 = compute_U0(s.rho0, s.V0);
        auto d = compute_M(s, zero_perturbation(g));
        double worst = 0.0;
        for (std::size_t i = 0; i < d.M.raw().size(); ++i)
            worst = std::max(worst, std::abs(d.M.raw()[i] - s.R0.raw()[i]));
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("M: direct algebra example") {
    GridSpec g = make_grid(2);
    auto s = identity_state(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p)
            s.R0.at(t, 0, p) = 2.0;  // R0 = diag(2,1)
    auto pert = zero_perturbation(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) pert.V_tilde.at(t, 0, p) = 1.0;
    auto d = compute_M(s, pert);
    // M = R0 - Vt (x) Vt = diag(1, 1)
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) {
            CHECK(d.M.at(t, 0, p) == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(d.M.at(t, 1, p) == 0.0);
            CHECK(d.M.at(t, 2, p) == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(d.lambda_min_field.at(t, 0, p) == doctest::Approx(1.0).epsilon(1e-12));
        }
    CHECK(d.lambda_star == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("3x3 point kernel matches the dense eigensolver oracle") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int it = 0; it < 200; ++it) {
        double rho = 1.0 + 0.5 * std::abs(U(rng));
        double V0[3], Vt[3], U0[6], R0[6], Ut[6], M[6];
        for (auto& v : V0) v = U(rng);
        for (auto& v : Vt) v = U(rng);
        for (auto& v : R0) v = U(rng);
        pointwise::u0_entries(3, rho, V0, U0);
        double a = U(rng), b = U(rng);
        Ut[0] = a;
        Ut[3] = b;
        Ut[5] = -a - b;  // traceless
        Ut[1] = U(rng);
        Ut[2] = U(rng);
        Ut[4] = U(rng);
        pointwise::m_entries(3, rho, V0, U0, R0, Vt, Ut, M);
        auto fast = symmat::lambda_min(3, M);
        auto ev = symmat::eigenvalues_jacobi(3, M);
        CHECK(std::abs(fast - ev[0]) < 1e-10);
        CHECK(std::abs(symmat::trace(3, M) -
                       pointwise::trace_rhs(3, rho, V0, R0, Vt)) < 1e-10);
    }
}

TEST_CASE("strict constraint: zero perturbation, planted violation, monotone margin") {
    GridSpec g = make_grid(2);
    auto s = identity_state(g);
    auto r0 = check_strict(s, zero_perturbation(g));
    CHECK(r0.ok);
    CHECK(r0.min_margin == doctest::Approx(1.0).epsilon(1e-12));

    auto pert = zero_perturbation(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) pert.V_tilde.at(t, 0, p) = 1.0;
    double prev = 1e300;
    bool violated = false;
    for (double scale : {0.25, 0.5, 0.75, 1.0, 1.25}) {
        auto pp = pert;
        pp.V_tilde.scale(scale);
        auto r = check_strict(s, pp);
        CHECK(r.min_margin < prev);
        prev = r.min_margin;
        if (!r.ok) violated = true;
    }
    CHECK(violated);
}

TEST_CASE("L2 constraint cases") {
    GridSpec g = make_grid(2);
    auto s = identity_state(g);
    auto zero = zero_perturbation(g);
    auto rz = check_l2(s, zero);
    CHECK(rz.ok);
    CHECK(rz.lhs == 0.0);

    // disjoint supports: V0 lives on x1 < pi, Vt on x1 >= pi
    auto pert = zero_perturbation(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) {
            double x = s.V0.coord(p, 0);
            if (x < 3.14159265)
                s.V0.at(t, 0, p) = 1.0;
            else
                pert.V_tilde.at(t, 0, p) = 1.0;
        }
    auto rd = check_l2(s, pert);
    CHECK(rd.lhs == 0.0);
    CHECK(rd.ok);

    // aligned constants: lhs = |P| > |P|/8
    auto s2 = identity_state(g);
    auto p2 = zero_perturbation(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) {
            s2.V0.at(t, 0, p) = 1.0;
            p2.V_tilde.at(t, 0, p) = 1.0;
        }
    auto ra = check_l2(s2, p2);
    CHECK_FALSE(ra.ok);
    CHECK(ra.lhs == doctest::Approx(8.0 * ra.rhs).epsilon(1e-12));
}

TEST_CASE("trace identity: 1000-point fuzz in n = 2 and 3") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int n : {2, 3}) {
        const int nc = sym_components(n);
        for (int it = 0; it < 1000; ++it) {
            double rho = 0.5 + std::abs(U(rng));
            double V0[3], Vt[3], U0[6], R0[6], Ut[6], M[6];
            for (int d = 0; d < n; ++d) {
                V0[d] = U(rng);
                Vt[d] = U(rng);
            }
            for (int c = 0; c < nc; ++c) R0[c] = U(rng);
            pointwise::u0_entries(n, rho, V0, U0);
            for (int c = 0; c < nc; ++c) Ut[c] = 0.0;
            if (n == 2) {
                Ut[0] = U(rng);
                Ut[2] = -Ut[0];
                Ut[1] = U(rng);
            } else {
                Ut[0] = U(rng);
                Ut[3] = U(rng);
                Ut[5] = -Ut[0] - Ut[3];
                Ut[1] = U(rng);
                Ut[2] = U(rng);
                Ut[4] = U(rng);
            }
            pointwise::m_entries(n, rho, V0, U0, R0, Vt, Ut, M);
            double gap = std::abs(symmat::trace(n, M) -
                                  pointwise::trace_rhs(n, rho, V0, R0, Vt));
            CHECK(gap < 1e-10);
        }
    }
}

TEST_CASE("trace identity on fields and the zero-perturbation reduction") {
    GridSpec g = make_grid(3, 8, 4);
    auto s = identity_state(g);
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> U(-0.4, 0.4);
    for (auto& v : s.V0.raw()) v = U(rng);
    for (auto& v : s.rho0.raw()) v = 1.0 + 0.4 * U(rng);
    s.U0 = compute_U0(s.rho0, s.V0);
    auto pert = zero_perturbation(g);
    for (auto& v : pert.V_tilde.raw()) v = U(rng);
    CHECK(trace_identity(s, pert) < 1e-10);
    CHECK(trace_identity(s, zero_perturbation(g)) < 1e-12);
}

TEST_CASE("energy ratio: trivial and saturated cases, and the trace bound") {
    GridSpec g = make_grid(2);
    auto s = identity_state(g);
    auto re = energy_ratio(s, zero_perturbation(g));
    CHECK(re.ratio == 0.0);
    CHECK(re.bound_ok);

    // saturated: V0 = 0, R0 = Vt (x) Vt, so M = 0 and the ratio is exactly 1
    auto pert = zero_perturbation(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) {
            pert.V_tilde.at(t, 0, p) = 0.8;
            pert.V_tilde.at(t, 1, p) = 0.6;
            s.R0.at(t, 0, p) = 0.64;
            s.R0.at(t, 1, p) = 0.48;
            s.R0.at(t, 2, p) = 0.36;
        }
    auto rs = energy_ratio(s, pert);
    CHECK(rs.ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rs.bound_ok);

    // general PSD state: energy <= (4/3)(int tr R0 - int tr M)
    auto s3 = identity_state(g);
    std::mt19937 rng(37);
    std::uniform_real_distribution<double> U(-0.2, 0.2);
    auto p3 = zero_perturbation(g);
    for (auto& v : p3.V_tilde.raw()) v = U(rng);
    auto d3 = compute_M(s3, p3);
    double mn = 1e300;
    for (double v : d3.lambda_min_field.raw()) mn = std::min(mn, v);
    REQUIRE(mn >= 0.0);
    double energy = weighted_energy(s3, p3.V_tilde);
    double tr_r0 = trace_r0_integral(s3);
    CHECK(energy <= 4.0 / 3.0 * (tr_r0 - d3.trace_integral) + 1e-8 * tr_r0);
    CHECK(4.0 / 3.0 * (tr_r0 - d3.trace_integral) <= 4.0 / 3.0 * tr_r0 + 1e-8 * tr_r0);
}

TEST_CASE("energy ratio preconditions") {
    GridSpec g = make_grid(2);
    auto s = identity_state(g);
    auto pert = zero_perturbation(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) {
            s.V0.at(t, 0, p) = 1.0;
            pert.V_tilde.at(t, 0, p) = 0.1;  // aligned, tiny: the pairing bound fails
        }
    s.U0 = compute_U0(s.rho0, s.V0);
    CHECK_THROWS_AS((void)energy_ratio(s, pert), PreconditionViolated);
}

TEST_CASE("state validation") {
    GridSpec g = make_grid(2);
    auto s = identity_state(g);
    CHECK_NOTHROW(validate_state(s));
    auto bad_rho = s;
    bad_rho.rho0.at(0, 0, 0) = 100.0;
    CHECK_THROWS_AS(validate_state(bad_rho), PreconditionViolated);
    auto bad_r0 = s;
    bad_r0.R0.at(0, 0, 0) = -1.0;
    CHECK_THROWS_AS(validate_state(bad_r0), PreconditionViolated);
    auto bad_u0 = s;
    bad_u0.U0.at(0, 0, 0) = 0.5;
    CHECK_THROWS_AS(validate_state(bad_u0), PreconditionViolated);
}
