#include "lomach/regularize.hpp"

#include <algorithm>
#include <cmath>

#include "lomach/errors.hpp"
#include "lomach/norms.hpp"
#include "lomach/spectral.hpp"
#include "lomach/symmat.hpp"
#include "lomach/time_fd.hpp"

namespace lomach {
namespace {

struct Candidate {
    VectorField u_eps;
    SymTensorField commutator;  // (u(x)u)^eps - u_eps(x)u_eps
    double u_l2_gap = 0.0;
    double commutator_l1 = 0.0;
};

Candidate build_candidate(const Scenario& s, double alpha, double t_max) {
    Mollifier m{alpha};
    Candidate c;
    c.u_eps = VectorField(mollify(s.u, m).restricted_to(t_max));
    auto uu_eps = SymTensorField(mollify(outer(s.u), m).restricted_to(t_max));
    c.commutator = uu_eps;
    c.commutator.axpy(-1.0, outer(c.u_eps));

    auto u_ref = VectorField(s.u.restricted_to(c.u_eps.grid().T));
    VectorField gap = c.u_eps;
    gap.axpy(-1.0, u_ref);
    c.u_l2_gap = norm(gap, NormKind::L2);
    c.commutator_l1 = norm(c.commutator, NormKind::L1);
    return c;
}

}  // namespace

RegularizationResult regularize(const Scenario& s, double epsilon) {
    const GridSpec& g = s.u.grid();
    if (!(epsilon > 0) || epsilon >= g.T / 2)
        throw PreconditionViolated("regularize: need 0 < epsilon < T/2");

    // Snap the common time domain [0, T - eps] to the grid so every ladder
    // candidate restricts to identical slices.
    const double t_max =
        std::floor((g.T - epsilon) / g.dt() + 1e-9) * g.dt();
    // Spatial smoothing acts through the exact Fourier symbol, so only the
    // discrete time window constrains alpha.
    const double floor_alpha = 2.0 * g.dt();

    RegularizationResult r;
    r.epsilon = epsilon;
    bool found = false;
    for (double alpha = epsilon; alpha >= floor_alpha; alpha /= 2.0) {
        auto c = build_candidate(s, alpha, t_max);
        r.report.ladder_alphas.push_back(alpha);
        r.report.ladder_gaps.push_back(c.u_l2_gap);
        if (c.u_l2_gap <= epsilon / 2 && c.commutator_l1 <= epsilon / 2) {
            r.alpha_eps = alpha;
            r.u_eps = std::move(c.u_eps);
            r.R_eps = std::move(c.commutator);
            r.report.u_l2_gap = c.u_l2_gap;
            r.report.commutator_l1 = c.commutator_l1;
            found = true;
            break;
        }
    }
    if (!found)
        throw ScaleLadderExhausted(
            "no mollifier scale on the ladder meets the eps/2 bounds; refine the "
            "grid or increase epsilon");

    const GridSpec& ge = r.R_eps.grid();
    for (int t = 0; t < ge.slices(); ++t)
        for (int i = 0; i < ge.n; ++i) {
            auto diag = r.R_eps.slice(t, SymTensorField::sym_index(ge.n, i, i));
            for (auto& v : diag) v += epsilon / 2;
        }
    r.R_eps.set_name("R_eps");

    r.pi_eps = ScalarField(mollify(s.pi, Mollifier{r.alpha_eps}).restricted_to(t_max));
    r.pi_eps.set_name("pi_eps");
    r.u_eps.set_name("u_eps");

    double lmin = 1e300, lmax = -1e300;
    const int nc = sym_components(ge.n);
    for (int t = 0; t < ge.slices(); ++t)
        for (std::size_t p = 0; p < ge.points(); ++p) {
            double e[6];
            for (int c = 0; c < nc; ++c) e[c] = r.R_eps.at(t, c, p);
            lmin = std::min(lmin, symmat::lambda_min(ge.n, e));
            lmax = std::max(lmax, symmat::lambda_max(ge.n, e));
        }
    r.report.lambda_min = lmin;
    r.report.lambda_max = lmax;
    return r;
}

double relaxed_residual(const RegularizationResult& r) {
    auto res = time_derivative(r.u_eps, 1);
    res.axpy(1.0, spectral::divergence_tensor(outer(r.u_eps)));
    res.axpy(1.0, spectral::gradient(r.pi_eps));
    res.axpy(1.0, spectral::divergence_tensor(r.R_eps));
    return norm(VectorField(std::move(res)), NormKind::Linf);
}

BoundReport mollification_bound_check(const RegularizationResult& r, const Scenario& s,
                            double C_cal) {
    BoundReport b;
    auto u_ref = VectorField(s.u.restricted_to(r.u_eps.grid().T));
    VectorField gap = r.u_eps;
    gap.axpy(-1.0, u_ref);
    b.lhs = norm(gap, NormKind::L2) + norm(r.R_eps, NormKind::L1);
    b.rhs = C_cal * r.epsilon;
    b.pass = b.lhs <= b.rhs;
    return b;
}

}  // namespace lomach
