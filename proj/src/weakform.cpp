#include "lomach/weakform.hpp"

#include <cmath>
#include <functional>

#include "lomach/errors.hpp"
#include "lomach/norms.hpp"

namespace lomach {

namespace {

struct TimeProfile {
    std::function<double(double)> psi, dpsi;
};

std::vector<TimeProfile> profiles_vanishing_at(double T) {
    return {{[T](double t) { double r = 1 - t / T; return r * r; },
             [T](double t) { return -2 * (1 - t / T) / T; }},
            {[T](double t) { double r = 1 - t / T; return r * r * r; },
             [T](double t) { double r = 1 - t / T; return -3 * r * r / T; }},
            {[T](double t) { double r = 1 - t / T; return r * r * (1 + 2 * t / T); },
             [T](double t) { double r = 1 - t / T; return -6 * r * (t / T) / T; }}};
}

template <typename F>
void for_half_space(int n, int m, F&& f) {
    int kv[3] = {0, 0, 0};
    if (n == 2) {
        for (kv[0] = 0; kv[0] <= m; ++kv[0])
            for (kv[1] = kv[0] == 0 ? 1 : -m; kv[1] <= m; ++kv[1]) f(kv);
    } else {
        for (kv[0] = 0; kv[0] <= m; ++kv[0])
            for (kv[1] = kv[0] == 0 ? 0 : -m; kv[1] <= m; ++kv[1])
                for (kv[2] = (kv[0] == 0 && kv[1] == 0) ? 1 : -m; kv[2] <= m; ++kv[2])
                    f(kv);
    }
}

}  // namespace

WeakFormReport compressible_weak_residual(const ScalarField& rho, const VectorField& m,
                                          const ScalarField& pi_eps, int test_modes) {
    const GridSpec& g = rho.grid();
    if (!(m.grid() == g) || !(pi_eps.grid() == g))
        throw DimensionMismatch("weak residual: field grids differ");
    const auto profiles = profiles_vanishing_at(g.T);
    auto wt = highorder_time_weights(g);
    const double cv = g.cell_volume();

    WeakFormReport rep;
    // Slice integrals a(t), b(t) against one space profile; the time pairing
    // r = sum wt (psi' a + psi b) + psi(0) a0 is shared by both identities.
    auto consider = [&](const std::vector<double>& a, const std::vector<double>& b,
                        double a0, double& worst) {
        for (const auto& pr : profiles) {
            double r = 0.0;
            for (int t = 0; t < g.slices(); ++t)
                r += wt[t] * (pr.dpsi(t * g.dt()) * a[t] + pr.psi(t * g.dt()) * b[t]);
            r += pr.psi(0.0) * a0;
            worst = std::max(worst, std::abs(r));
        }
    };

    // Mass, constant test function: d/dt of the total mass.
    {
        std::vector<double> a(g.slices()), b(g.slices(), 0.0);
        for (int t = 0; t < g.slices(); ++t) {
            double s = 0.0;
            for (double v : rho.slice(t, 0)) s += v;
            a[t] = cv * s;
        }
        double a0 = 0.0;
        for (double v : rho.slice(0, 0)) a0 += v;
        consider(a, b, cv * a0, rep.mass_defect);
    }
    // Momentum, constant test fields: d/dt of the total momentum (the
    // gradient terms all vanish).
    for (int d = 0; d < g.n; ++d) {
        std::vector<double> a(g.slices()), b(g.slices(), 0.0);
        for (int t = 0; t < g.slices(); ++t) {
            double s = 0.0;
            for (double v : m.slice(t, d)) s += v;
            a[t] = cv * s;
        }
        double a0 = 0.0;
        for (double v : m.slice(0, d)) a0 += v;
        consider(a, b, cv * a0, rep.momentum_defect);
    }

    for_half_space(g.n, test_modes, [&](const int* k) {
        std::vector<double> phase(g.points());
        for (std::size_t q = 0; q < g.points(); ++q) {
            double ph = 0.0;
            for (int d = 0; d < g.n; ++d) ph += k[d] * rho.coord(q, d);
            phase[q] = ph;
        }
        for (int trig = 0; trig < 2; ++trig) {
            // Mass: phi = w(x), grad phi = k dw.
            {
                std::vector<double> a(g.slices()), b(g.slices());
                double a0 = 0.0;
                for (int t = 0; t < g.slices(); ++t) {
                    double sa = 0.0, sb = 0.0;
                    for (std::size_t q = 0; q < g.points(); ++q) {
                        double w = trig == 0 ? std::cos(phase[q]) : std::sin(phase[q]);
                        double dw = trig == 0 ? -std::sin(phase[q]) : std::cos(phase[q]);
                        sa += rho.at(t, 0, q) * w;
                        double mk = 0.0;
                        for (int d = 0; d < g.n; ++d) mk += m.at(t, d, q) * k[d];
                        sb += mk * dw;
                        if (t == 0) a0 += rho.at(0, 0, q) * w;
                    }
                    a[t] = cv * sa;
                    b[t] = cv * sb;
                }
                consider(a, b, cv * a0, rep.mass_defect);
            }
            // Momentum: phi = e w(x) over the full direction basis; the
            // convective term pairs (m (x) m / rho) with grad phi_j = k_i e_j dw
            // and the pressure pairs pi_eps with div phi = (k.e) dw.
            for (int ed = 0; ed < g.n; ++ed) {
                std::vector<double> a(g.slices()), b(g.slices());
                double a0 = 0.0;
                for (int t = 0; t < g.slices(); ++t) {
                    double sa = 0.0, sb = 0.0;
                    for (std::size_t q = 0; q < g.points(); ++q) {
                        double w = trig == 0 ? std::cos(phase[q]) : std::sin(phase[q]);
                        double dw = trig == 0 ? -std::sin(phase[q]) : std::cos(phase[q]);
                        sa += m.at(t, ed, q) * w;
                        double mk = 0.0;
                        for (int i = 0; i < g.n; ++i) mk += m.at(t, i, q) * k[i];
                        double conv = mk * m.at(t, ed, q) / rho.at(t, 0, q);
                        sb += (conv + pi_eps.at(t, 0, q) * k[ed]) * dw;
                        if (t == 0) a0 += m.at(0, ed, q) * w;
                    }
                    a[t] = cv * sa;
                    b[t] = cv * sb;
                }
                consider(a, b, cv * a0, rep.momentum_defect);
            }
        }
    });
    return rep;
}

std::vector<ModePairing> initial_pairings(const VectorField& m0, const VectorField& u0,
                                          int max_mode) {
    const GridSpec& g = m0.grid();
    if (!g.same_space(u0.grid()) || m0.ncomp() != u0.ncomp())
        throw DimensionMismatch("initial pairings: field shapes differ");
    const double cv = g.cell_volume();

    auto pairing = [&](const int* k) {
        double best = 0.0;
        const bool zero_k = k[0] == 0 && k[1] == 0 && k[2] == 0;
        for (int trig = 0; trig < (zero_k ? 1 : 2); ++trig)
            for (int ed = 0; ed < g.n; ++ed) {
                double s = 0.0;
                for (std::size_t q = 0; q < g.points(); ++q) {
                    double ph = 0.0;
                    for (int d = 0; d < g.n; ++d) ph += k[d] * m0.coord(q, d);
                    double w = trig == 0 ? std::cos(ph) : std::sin(ph);
                    s += (m0.at(0, ed, q) - u0.at(0, ed, q)) * w;
                }
                best = std::max(best, std::abs(cv * s));
            }
        return best;
    };

    std::vector<ModePairing> table;
    int k0[3] = {0, 0, 0};
    table.push_back({{0, 0, 0}, pairing(k0)});
    for_half_space(g.n, max_mode, [&](const int* k) {
        table.push_back({{k[0], k[1], k[2]}, pairing(k)});
    });
    return table;
}

}  // namespace lomach
