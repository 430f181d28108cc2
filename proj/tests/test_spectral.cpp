#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lomach/errors.hpp"
#include "lomach/field_io.hpp"
#include "lomach/mollifier.hpp"
#include "lomach/norms.hpp"
#include "lomach/spectral.hpp"
#include "lomach/symmat.hpp"
#include "lomach/time_fd.hpp"

using namespace lomach;

namespace {

GridSpec grid2(int N, int steps = 8, double T = 1.0) {
    GridSpec g;
    g.n = 2;
    g.modes_per_axis = N;
    g.T = T;
    g.time_steps = steps;
    return g;
}

ScalarField fill_scalar(const GridSpec& g, auto f) {
    ScalarField out(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) {
            double x = out.coord(p, 0), y = out.coord(p, 1);
            double z = g.n == 3 ? out.coord(p, 2) : 0.0;
            out.at(t, 0, p) = f(t * g.dt(), x, y, z);
        }
    return out;
}

double max_diff(const FieldData& a, const FieldData& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.raw().size(); ++i)
        m = std::max(m, std::abs(a.raw()[i] - b.raw()[i]));
    return m;
}

}  // namespace

TEST_CASE("gradient of a constant is zero") {
    auto g = grid2(16);
    auto f = fill_scalar(g, [](double, double, double, double) { return 3.7; });
    auto gr = spectral::gradient(f);
    CHECK(gr.max_abs() < 1e-13);
}

TEST_CASE("divergence of a perpendicular gradient vanishes") {
    auto g = grid2(32);
    auto psi = fill_scalar(g, [](double, double x, double y, double) {
        return std::sin(x) * std::cos(2 * y) + 0.3 * std::cos(3 * x + y);
    });
    auto gp = spectral::gradient(psi);
    VectorField perp(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) {
            perp.at(t, 0, p) = -gp.at(t, 1, p);
            perp.at(t, 1, p) = gp.at(t, 0, p);
        }
    CHECK(spectral::divergence(perp).max_abs() < 1e-12);
}

TEST_CASE("divergence matches an 8th-order finite-difference oracle") {
    GridSpec g = grid2(256, 1);
    VectorField v(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) v.at(t, 0, p) = std::sin(v.coord(p, 0));
    auto dv = spectral::divergence(v);
    // 8th-order centered first-derivative oracle along x1
    const int N = g.modes_per_axis;
    const double h = g.dx();
    static const double c[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
    double err = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            double d = 0.0;
            for (int s = 1; s <= 4; ++s) {
                std::size_t ip = static_cast<std::size_t>(((i + s) % N)) * N + j;
                std::size_t im = static_cast<std::size_t>(((i - s + N) % N)) * N + j;
                d += c[s - 1] * (v.at(0, 0, ip) - v.at(0, 0, im)) / h;
            }
            err = std::max(err, std::abs(dv.at(0, 0, static_cast<std::size_t>(i) * N + j) - d));
        }
    CHECK(err < 1e-6);
}

TEST_CASE("inverse Laplacian eigenfunctions and round trip") {
    auto g = grid2(32);
    auto f1 = fill_scalar(g, [](double, double x, double, double) { return std::cos(x); });
    auto s1 = spectral::inv_laplacian_mean_zero(f1);
    CHECK(max_diff(s1, f1) < 1e-12);

    auto f2 = fill_scalar(g, [](double, double x, double, double) { return std::cos(2 * x); });
    auto s2 = spectral::inv_laplacian_mean_zero(f2);
    for (auto& v : s2.raw()) v *= 4.0;
    CHECK(max_diff(s2, f2) < 1e-12);

    // random band-limited mean-zero round trip
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    ScalarField r(g);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) {
            double x = r.coord(p, 0), y = r.coord(p, 1);
            r.at(t, 0, p) = 0.0;
            for (int kx = 0; kx <= 3; ++kx)
                for (int ky = -3; ky <= 3; ++ky) {
                    if (kx == 0 && ky == 0) continue;
                    r.at(t, 0, p) += (t == 0 ? 1.0 : 1.0 + 0.1 * t) *
                                     (0.1 * kx + 0.07 * ky) * std::cos(kx * x + ky * y);
                }
            (void)U;
        }
    auto inv = spectral::inv_laplacian_mean_zero(r);
    auto back = spectral::laplacian(inv);
    for (auto& v : back.raw()) v = -v;
    CHECK(max_diff(back, r) < 1e-10 * r.max_abs());
}

TEST_CASE("inverse Laplacian rejects nonzero mean") {
    auto g = grid2(16);
    auto f = fill_scalar(g, [](double, double x, double, double) { return 1.0 + std::cos(x); });
    CHECK_THROWS_AS((void)spectral::inv_laplacian_mean_zero(f), MeanNotZero);
}

TEST_CASE("mollifier preserves constants and matches the quadrature symbol") {
    auto g = grid2(64, 32, 1.0);
    Mollifier m{0.25};
    auto c = fill_scalar(g, [](double, double, double, double) { return 2.5; });
    auto mc = mollify(c, m);
    for (double v : mc.raw()) CHECK(std::abs(v - 2.5) < 1e-10);

    auto f = fill_scalar(g, [](double, double x, double, double) { return std::sin(x); });
    auto mf = mollify(f, m);
    // independent quadrature oracle for the spatial symbol at k=1
    const int Q = 20001;
    double sig = 0.0, mass = 0.0;
    for (int i = 0; i < Q; ++i) {
        double s = -1.0 + 2.0 * i / (Q - 1);
        double w = (i == 0 || i == Q - 1) ? 0.5 : 1.0;
        double b = std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0;
        sig += w * b * std::cos(m.alpha * s);
        mass += w * b;
    }
    sig /= mass;
    double worst = 0.0;
    for (int t = 0; t < mf.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p)
            worst = std::max(worst,
                             std::abs(mf.at(t, 0, p) - sig * std::sin(mf.coord(p, 0))));
    CHECK(worst < 1e-6 * std::abs(sig));
}

TEST_CASE("mollify commutes with differentiation on band-limited inputs") {
    auto g = grid2(64, 32, 1.0);
    Mollifier m{0.2};
    auto f = fill_scalar(g, [](double t, double x, double y, double) {
        return std::sin(x + 2 * y) * (1.0 + 0.3 * t);
    });
    auto a = spectral::gradient(ScalarField(mollify(f, m)));
    auto b = mollify(spectral::gradient(f), m);
    CHECK(max_diff(a, b) < 1e-8);
}

TEST_CASE("mollify is bounded in sup norm") {
    auto g = grid2(64, 32, 1.0);
    Mollifier m{0.3};
    auto f = fill_scalar(g, [](double t, double x, double y, double) {
        return std::sin(3 * x) * std::cos(y) + 0.5 * std::sin(t * 5 + x);
    });
    auto mf = mollify(f, m);
    CHECK(norm(ScalarField(mf), NormKind::Linf) <=
          norm(f, NormKind::Linf) * (1.0 + 1e-8));
}

TEST_CASE("norms: closed forms") {
    auto g = grid2(64, 16, 1.0);
    auto f = fill_scalar(g, [](double, double x, double, double) { return std::sin(x); });
    const double pi = 3.14159265358979323846;
    CHECK(norm(f, NormKind::L2) == doctest::Approx(pi * std::sqrt(2.0)).epsilon(1e-8));
    CHECK(norm(f, NormKind::L1) == doctest::Approx(8.0 * pi).epsilon(1e-4));
    ScalarField z(g);
    CHECK(norm(z, NormKind::Linf) == 0.0);
}

TEST_CASE("norms are monotone under pointwise domination") {
    auto g = grid2(32, 8, 1.0);
    auto f = fill_scalar(g, [](double t, double x, double y, double) {
        return std::sin(x + y) * std::cos(2 * x) * (1 + 0.2 * t);
    });
    ScalarField f2 = f;
    f2.scale(2.0);
    for (auto kind : {NormKind::L1, NormKind::L2, NormKind::Linf})
        CHECK(norm(f, kind) <= norm(f2, kind) + 1e-12);
}

TEST_CASE("time derivative: polynomial exactness and order") {
    auto g = grid2(16, 16, 1.0);
    auto f = fill_scalar(g, [](double t, double x, double, double) { return t * std::sin(x); });
    auto dfdt = time_derivative(f, 1);
    auto expect = fill_scalar(g, [](double, double x, double, double) { return std::sin(x); });
    CHECK(max_diff(dfdt, expect) < 1e-10);

    auto c = fill_scalar(g, [](double, double x, double y, double) { return std::cos(x) + y * 0; });
    CHECK(time_derivative(c, 1).max_abs() < 1e-11);

    // 4th-order convergence of the second derivative
    double errs[2];
    int steps[2] = {16, 32};
    for (int i = 0; i < 2; ++i) {
        auto gi = grid2(16, steps[i], 1.0);
        auto fi = fill_scalar(gi, [](double t, double x, double, double) {
            return std::sin(t) * std::cos(x);
        });
        auto d2 = time_derivative(fi, 2);
        auto ex = fill_scalar(gi, [](double t, double x, double, double) {
            return -std::sin(t) * std::cos(x);
        });
        errs[i] = max_diff(d2, ex);
    }
    CHECK(errs[0] / errs[1] > 10.0);  // ~16x for 4th order
}

TEST_CASE("symmetric eigenvalues match a Jacobi oracle") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int it = 0; it < 500; ++it) {
        double e[6];
        for (double& x : e) x = U(rng);
        auto fast = symmat::eigenvalues(3, e);
        auto slow = symmat::eigenvalues_jacobi(3, e);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(fast[i] - slow[i]) < 1e-10);
        double f2[3] = {e[0], e[1], e[2]};
        auto ev2 = symmat::eigenvalues(2, f2);
        // 2x2 oracle via characteristic polynomial roots
        double tr = f2[0] + f2[2], det = f2[0] * f2[2] - f2[1] * f2[1];
        double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
        CHECK(std::abs(ev2[0] - (tr / 2 - disc)) < 1e-12);
        CHECK(std::abs(ev2[1] - (tr / 2 + disc)) < 1e-12);
    }
}

TEST_CASE("lambda_min is 1-Lipschitz in the spectral norm") {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int it = 0; it < 300; ++it) {
        double a[6], b[6], d[6];
        for (int i = 0; i < 6; ++i) {
            a[i] = U(rng);
            b[i] = a[i] + 0.1 * U(rng);
            d[i] = a[i] - b[i];
        }
        double gap = std::abs(symmat::lambda_min(3, a) - symmat::lambda_min(3, b));
        CHECK(gap <= symmat::spectral_norm(3, d) + 1e-12);
    }
}
