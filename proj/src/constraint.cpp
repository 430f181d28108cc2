#include "lomach/constraint.hpp"

#include <cmath>

#include "lomach/config.hpp"
#include "lomach/errors.hpp"
#include "lomach/norms.hpp"
#include "lomach/symmat.hpp"

namespace lomach {

namespace pointwise {

void u0_entries(int n, double rho, const double* V, double* out) {
    double v2 = 0.0;
    for (int d = 0; d < n; ++d) v2 += V[d] * V[d];
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double val = V[i] * V[j] / rho;
            if (i == j) val -= v2 / (n * rho);
            out[SymTensorField::sym_index(n, i, j)] = val;
        }
}

void m_entries(int n, double rho, const double* V0, const double* U0,
               const double* R0, const double* Vt, const double* Ut, double* out) {
    double v0sq = 0.0;
    double W[3];
    for (int d = 0; d < n; ++d) {
        v0sq += V0[d] * V0[d];
        W[d] = V0[d] + Vt[d];
    }
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            int c = SymTensorField::sym_index(n, i, j);
            double val = R0[c] - W[i] * W[j] / rho + U0[c] + Ut[c];
            if (i == j) val += v0sq / (n * rho);
            out[c] = val;
        }
}

double trace_rhs(int n, double rho, const double* V0, const double* R0,
                 const double* Vt) {
    double tr = 0.0, vt2 = 0.0, dot = 0.0;
    for (int i = 0; i < n; ++i) tr += R0[SymTensorField::sym_index(n, i, i)];
    for (int d = 0; d < n; ++d) {
        vt2 += Vt[d] * Vt[d];
        dot += V0[d] * Vt[d];
    }
    return tr - vt2 / rho - 2.0 * dot / rho;
}

}  // namespace pointwise

namespace {

void gather(const FieldData& f, int t, std::size_t p, int nc, double* out) {
    for (int c = 0; c < nc; ++c) out[c] = f.at(t, c, p);
}

void check_rho(double rho) {
    if (!(rho > 0)) throw NonpositiveDensity("rho0 must be positive");
}

}  // namespace

PerturbationPair zero_perturbation(const GridSpec& g) {
    PerturbationPair p;
    p.V_tilde = VectorField(g, "V_tilde");
    p.U_tilde = SymTensorField(g, "U_tilde");
    p.U_tilde.traceless = true;
    p.linear_system_ok = true;
    return p;
}

SymTensorField compute_U0(const ScalarField& rho0, const VectorField& V0) {
    const GridSpec& g = rho0.grid();
    SymTensorField U0(g, "U0");
    U0.traceless = true;
    const int nc = sym_components(g.n);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t p = 0; p < g.points(); ++p) {
            double V[3], out[6];
            gather(V0, t, p, g.n, V);
            double rho = rho0.at(t, 0, p);
            check_rho(rho);
            pointwise::u0_entries(g.n, rho, V, out);
            for (int c = 0; c < nc; ++c) U0.at(t, c, p) = out[c];
        }
    return U0;
}

DefectField compute_M(const SubsolutionState& state, const PerturbationPair& p) {
    const GridSpec& g = state.grid();
    const int nc = sym_components(g.n);
    DefectField d;
    d.M = SymTensorField(g, "M");
    d.lambda_min_field = ScalarField(g, "lambda_min_M");
    double lstar = 1e300;
    auto wt = trapezoid_weights(g);
    const double cv = g.cell_volume();
    double tr_int = 0.0;
    for (int t = 0; t < g.slices(); ++t) {
        double tr_slice = 0.0;
        for (std::size_t q = 0; q < g.points(); ++q) {
            double V0[3], Vt[3], U0[6], R0[6], Ut[6], out[6];
            gather(state.V0, t, q, g.n, V0);
            gather(p.V_tilde, t, q, g.n, Vt);
            gather(state.U0, t, q, nc, U0);
            gather(state.R0, t, q, nc, R0);
            gather(p.U_tilde, t, q, nc, Ut);
            double rho = state.rho0.at(t, 0, q);
            check_rho(rho);
            pointwise::m_entries(g.n, rho, V0, U0, R0, Vt, Ut, out);
            double lm = symmat::lambda_min(g.n, out);
            double lr = symmat::lambda_min(g.n, R0);
            lstar = std::min(lstar, std::min(lm, lr));
            d.lambda_min_field.at(t, 0, q) = lm;
            for (int c = 0; c < nc; ++c) d.M.at(t, c, q) = out[c];
            tr_slice += symmat::trace(g.n, out);
        }
        tr_int += wt[t] * cv * tr_slice;
    }
    d.lambda_star = lstar;
    d.trace_integral = tr_int;
    return d;
}

StrictReport check_strict(const SubsolutionState& state, const PerturbationPair& p) {
    auto d = compute_M(state, p);
    StrictReport r;
    double mn = 1e300;
    for (double v : d.lambda_min_field.raw()) mn = std::min(mn, v);
    r.min_margin = mn;
    r.ok = mn > default_tolerances().margin_strict;
    return r;
}

double weighted_energy(const SubsolutionState& state, const VectorField& Vt) {
    const GridSpec& g = state.grid();
    auto wt = trapezoid_weights(g);
    const double cv = g.cell_volume();
    double total = 0.0;
    for (int t = 0; t < g.slices(); ++t) {
        double s = 0.0;
        for (std::size_t q = 0; q < g.points(); ++q) {
            double v2 = 0.0;
            for (int d = 0; d < g.n; ++d) v2 += Vt.at(t, d, q) * Vt.at(t, d, q);
            s += v2 / state.rho0.at(t, 0, q);
        }
        total += wt[t] * cv * s;
    }
    return total;
}

double trace_r0_integral(const SubsolutionState& state) {
    const GridSpec& g = state.grid();
    auto wt = trapezoid_weights(g);
    const double cv = g.cell_volume();
    const int nc = sym_components(g.n);
    double total = 0.0;
    for (int t = 0; t < g.slices(); ++t) {
        double s = 0.0;
        for (std::size_t q = 0; q < g.points(); ++q) {
            double e[6];
            gather(state.R0, t, q, nc, e);
            s += symmat::trace(g.n, e);
        }
        total += wt[t] * cv * s;
    }
    return total;
}

L2Report check_l2(const SubsolutionState& state, const PerturbationPair& p) {
    const GridSpec& g = state.grid();
    auto wt = trapezoid_weights(g);
    const double cv = g.cell_volume();
    double dot = 0.0;
    for (int t = 0; t < g.slices(); ++t) {
        double s = 0.0;
        for (std::size_t q = 0; q < g.points(); ++q) {
            double d0 = 0.0;
            for (int d = 0; d < g.n; ++d)
                d0 += state.V0.at(t, d, q) * p.V_tilde.at(t, d, q);
            s += d0 / state.rho0.at(t, 0, q);
        }
        dot += wt[t] * cv * s;
    }
    L2Report r;
    r.lhs = std::abs(dot);
    r.rhs = weighted_energy(state, p.V_tilde) / 8.0;
    r.ok = r.lhs <= r.rhs * (1.0 + 1e-10);
    return r;
}

double trace_identity(const SubsolutionState& state, const PerturbationPair& p) {
    const GridSpec& g = state.grid();
    const int nc = sym_components(g.n);
    auto d = compute_M(state, p);
    double worst = 0.0;
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t q = 0; q < g.points(); ++q) {
            double V0[3], Vt[3], R0[6], M[6];
            gather(state.V0, t, q, g.n, V0);
            gather(p.V_tilde, t, q, g.n, Vt);
            gather(state.R0, t, q, nc, R0);
            gather(d.M, t, q, nc, M);
            double rhs = pointwise::trace_rhs(g.n, state.rho0.at(t, 0, q), V0, R0, Vt);
            worst = std::max(worst, std::abs(symmat::trace(g.n, M) - rhs));
        }
    return worst;
}

EnergyReport energy_ratio(const SubsolutionState& state, const PerturbationPair& p) {
    auto l2 = check_l2(state, p);
    if (!l2.ok) throw PreconditionViolated("energy_ratio: pairing bound fails");
    auto d = compute_M(state, p);
    double mn = 1e300;
    for (double v : d.lambda_min_field.raw()) mn = std::min(mn, v);
    if (mn < -1e-12 * std::max(1.0, d.M.max_abs()))
        throw PreconditionViolated("energy_ratio: defect matrix not PSD");
    EnergyReport r;
    double tr_r0 = trace_r0_integral(state);
    r.ratio = tr_r0 == 0.0 ? 0.0 : weighted_energy(state, p.V_tilde) / tr_r0;
    r.bound_ok = r.ratio <= 4.0 / 3.0 + 1e-8;
    return r;
}

void validate_state(const SubsolutionState& state) {
    const GridSpec& g = state.grid();
    const double lo = 1.0 / (state.Lambda * state.Lambda);
    const double hi = state.Lambda * state.Lambda;
    const int nc = sym_components(g.n);
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t q = 0; q < g.points(); ++q) {
            double rho = state.rho0.at(t, 0, q);
            if (!(rho >= lo && rho <= hi))
                throw PreconditionViolated("rho0 escapes the Lambda pinching");
            double e[6];
            gather(state.R0, t, q, nc, e);
            if (!(symmat::lambda_min(g.n, e) > 0))
                throw PreconditionViolated("R0 loses positive definiteness");
        }
    if (max_abs_trace(state.U0) > 1e-12 * std::max(1.0, state.U0.max_abs()))
        throw PreconditionViolated("U0 trace exceeds tolerance");
}

}  // namespace lomach
