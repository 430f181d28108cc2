#include "lomach/lift.hpp"

#include <algorithm>
#include <cmath>

#include "lomach/errors.hpp"
#include "lomach/norms.hpp"
#include "lomach/spectral.hpp"
#include "lomach/symmat.hpp"
#include "lomach/time_fd.hpp"

namespace lomach {
namespace {

double slice_mean_pow(const ScalarField& pi_eps, int t, double d2, double K,
                      double inv_gamma) {
    auto s = pi_eps.slice(t, 0);
    double sum = 0.0;
    for (double v : s) sum += std::pow(d2 * v + K, inv_gamma);
    return sum / static_cast<double>(s.size());
}

// The unit-mean constraint on rho makes the slice means of its time
// derivatives pure round-off (amplified by the FD stencils); verify that scale
// and strip it before inverting the Laplacian.
void strip_roundoff_mean(FieldData& f, double thr) {
    for (int t = 0; t < f.slices(); ++t) {
        double m = spectral::spatial_mean(f, t, 0);
        if (std::abs(m) > thr)
            throw MeanNotZero("time-differentiated density has slice mean " +
                              std::to_string(m));
    }
    spectral::remove_spatial_mean(f);
}

}  // namespace

double solve_K_star(const ScalarField& pi_eps, double delta, double gamma, int t) {
    const double d2 = delta * delta;
    const double inv_gamma = 1.0 / gamma;
    auto s = pi_eps.slice(t, 0);
    double pmin = s[0], pmax = s[0];
    for (double v : s) {
        pmin = std::min(pmin, v);
        pmax = std::max(pmax, v);
    }
    // positivity boundary for the radicand
    double lo = -d2 * pmin + 1e-14 * (1.0 + d2 * std::abs(pmin));
    double hi = std::pow(1.0 + d2 * std::abs(pmax), gamma) + d2 * std::abs(pmin) + 1.0;
    auto f = [&](double K) { return slice_mean_pow(pi_eps, t, d2, K, inv_gamma) - 1.0; };
    if (f(lo) > 0.0)
        throw Infeasible("solve_K_star: unit-mean density unreachable with positive "
                         "radicand; delta too large for this pressure");
    const double tol = default_tolerances().k_star_tol;
    double K = std::min(std::max(1.0 - d2 * (pmin + pmax) / 2, lo), hi);
    for (int it = 0; it < 200; ++it) {
        double fv = f(K);
        if (std::abs(fv) < tol) return K;
        (fv > 0 ? hi : lo) = K;
        // Newton step on the strictly increasing mean map, bisection fallback
        double df = 0.0;
        for (double v : s) df += std::pow(d2 * v + K, inv_gamma - 1.0);
        df *= inv_gamma / static_cast<double>(s.size());
        double next = K - fv / df;
        K = (next > lo && next < hi) ? next : 0.5 * (lo + hi);
    }
    return K;
}

DensityResult build_density(const ScalarField& pi_eps, double delta, double gamma) {
    const GridSpec& g = pi_eps.grid();
    DensityResult out;
    out.rho = ScalarField(g, "rho");
    out.K_star.resize(g.slices());
    const double d2 = delta * delta;
    const double inv_gamma = 1.0 / gamma;
    for (int t = 0; t < g.slices(); ++t) {
        double K = solve_K_star(pi_eps, delta, gamma, t);
        out.K_star[t] = K;
        auto src = pi_eps.slice(t, 0);
        auto dst = out.rho.slice(t, 0);
        for (std::size_t p = 0; p < dst.size(); ++p) {
            double rad = d2 * src[p] + K;
            if (rad <= 0) throw NonpositiveDensity("density radicand <= 0");
            dst[p] = std::pow(rad, inv_gamma);
        }
    }
    return out;
}

VectorField build_momentum_corrector(const ScalarField& rho) {
    auto drho = time_derivative(rho, 1);
    strip_roundoff_mean(drho, 1e-10 / rho.grid().dt());
    auto phi = spectral::inv_laplacian_mean_zero(drho);
    auto m = spectral::gradient(phi);
    m.set_name("m");
    return m;
}

SymTensorField build_R_tilde(const VectorField& u_eps, const VectorField& m,
                             const ScalarField& rho, double epsilon) {
    const GridSpec& g = u_eps.grid();
    auto d2rho = time_derivative(rho, 2);
    double dt = rho.grid().dt();
    strip_roundoff_mean(d2rho, 1e-10 / (dt * dt));
    auto A = spectral::inv_laplacian_mean_zero(d2rho);  // (-lap)^-1 d_t^2 rho
    SymTensorField R(g, "R_tilde");
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) {
            double w[3], u[3];
            for (int d = 0; d < g.n; ++d) {
                u[d] = u_eps.at(t, d, p);
                w[d] = u[d] + m.at(t, d, p);
            }
            double inv_rho = 1.0 / rho.at(t, 0, p);
            for (int i = 0; i < g.n; ++i)
                for (int j = i; j < g.n; ++j) {
                    double val = -w[i] * w[j] * inv_rho + u[i] * u[j];
                    if (i == j) val += -A.at(t, 0, p) + epsilon / 8;
                    R.at(t, SymTensorField::sym_index(g.n, i, j), p) = val;
                }
        }
    return R;
}

LiftResult lift(const RegularizationResult& r, double delta, double gamma) {
    LiftResult L;
    L.delta = delta;
    L.gamma = gamma;
    auto dens = build_density(r.pi_eps, delta, gamma);
    L.rho = std::move(dens.rho);
    L.K_star = std::move(dens.K_star);
    L.m = build_momentum_corrector(L.rho);

    const GridSpec& g = L.rho.grid();
    L.V = r.u_eps;
    L.V.axpy(1.0, L.m);
    L.V.set_name("V");
    L.v = L.V;
    for (int t = 0; t < g.slices(); ++t)
        for (int d = 0; d < g.n; ++d) {
            auto num = L.v.slice(t, d);
            auto den = L.rho.slice(t, 0);
            for (std::size_t p = 0; p < num.size(); ++p) num[p] /= den[p];
        }
    L.v.set_name("v");
    L.R_tilde = build_R_tilde(r.u_eps, L.m, L.rho, r.epsilon);

    ScalarField rho_gap = L.rho;
    for (auto& x : rho_gap.raw()) x -= 1.0;
    L.report.rho_c0_gap = norm(rho_gap, NormKind::C0);
    L.report.m_linf = norm(L.m, NormKind::Linf);
    L.report.m_l2 = norm(L.m, NormKind::L2);

    SymTensorField dev = L.R_tilde;
    for (int t = 0; t < g.slices(); ++t)
        for (int i = 0; i < g.n; ++i) {
            auto diag = dev.slice(t, SymTensorField::sym_index(g.n, i, i));
            for (auto& x : diag) x -= r.epsilon / 8;
        }
    L.report.r_tilde_linf = norm(dev, NormKind::Linf);

    double lmin = 1e300;
    const int nc = sym_components(g.n);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) {
            double e[6];
            for (int c = 0; c < nc; ++c)
                e[c] = r.R_eps.at(t, c, p) + L.R_tilde.at(t, c, p);
            lmin = std::min(lmin, symmat::lambda_min(g.n, e));
        }
    L.report.lambda_min_total = lmin;
    return L;
}

SubsolutionResidual subsolution_residual(const LiftResult& L,
                                         const RegularizationResult& r) {
    const GridSpec& g = L.rho.grid();
    SubsolutionResidual out;

    auto mass = time_derivative(L.rho, 1);
    mass.axpy(1.0, spectral::divergence(L.V));
    out.mass_res = mass.max_abs();

    // rho v (x) v = (V (x) V)/rho
    SymTensorField VV = outer(L.V);
    for (int t = 0; t < g.slices(); ++t)
        for (int c = 0; c < VV.ncomp(); ++c) {
            auto num = VV.slice(t, c);
            auto den = L.rho.slice(t, 0);
            for (std::size_t p = 0; p < num.size(); ++p) num[p] /= den[p];
        }
    SymTensorField total = VV;
    total.axpy(1.0, r.R_eps);
    total.axpy(1.0, L.R_tilde);

    auto mom = time_derivative(L.V, 1);
    mom.axpy(1.0, spectral::divergence_tensor(total));
    mom.axpy(1.0, spectral::gradient(r.pi_eps));
    out.momentum_res = norm(VectorField(std::move(mom)), NormKind::Linf);
    return out;
}

LiftBoundReport lift_bound_check(const LiftResult& L, const VectorField& u_eps,
                              double epsilon) {
    LiftBoundReport b;
    ScalarField rho_gap = L.rho;
    for (auto& x : rho_gap.raw()) x -= 1.0;
    b.rho_c0 = norm(rho_gap, NormKind::C0);

    VectorField gap = L.V;
    gap.axpy(-1.0, u_eps);
    b.momentum_l2 = norm(gap, NormKind::L2);

    b.r_tilde_linf = norm(L.R_tilde, NormKind::Linf);
    b.sum = b.rho_c0 + b.momentum_l2 + b.r_tilde_linf;
    b.pass = b.sum <= epsilon;
    return b;
}

}  // namespace lomach
