#include "lomach/scenario.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include "lomach/errors.hpp"
#include "lomach/field_io.hpp"
#include "lomach/norms.hpp"
#include "lomach/spectral.hpp"

namespace lomach {
namespace {

double param(const ScenarioParams& p, const std::string& key, double dflt) {
    auto it = p.find(key);
    return it == p.end() ? dflt : it->second;
}

Scenario taylor_green_2d(const GridSpec& g, const ScenarioParams& p) {
    const double A = param(p, "amplitude", 1.0);
    const double d1 = param(p, "drift_x1", 0.0);
    const double d2 = param(p, "drift_x2", 0.0);
    Scenario s;
    s.name = "taylor_green_2d";
    s.u = VectorField(g, "u");
    s.pi = ScalarField(g, "pi");
    for (int t = 0; t < g.slices(); ++t) {
        const double tt = t * g.dt();
        for (std::size_t q = 0; q < g.points(); ++q) {
            double X1 = s.u.coord(q, 0) - d1 * tt;
            double X2 = s.u.coord(q, 1) - d2 * tt;
            s.u.at(t, 0, q) = d1 + A * std::cos(X1) * std::sin(X2);
            s.u.at(t, 1, q) = d2 - A * std::sin(X1) * std::cos(X2);
            s.pi.at(t, 0, q) = -A * A * (std::cos(2 * X1) + std::cos(2 * X2)) / 4.0;
        }
    }
    return s;
}

Scenario shear_2d(const GridSpec& g, const ScenarioParams& p) {
    const double A = param(p, "amplitude", 1.0);
    const int k = static_cast<int>(param(p, "mode", 1.0));
    Scenario s;
    s.name = "shear_2d";
    s.u = VectorField(g, "u");
    s.pi = ScalarField(g, "pi");
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t q = 0; q < g.points(); ++q)
            s.u.at(t, 0, q) = A * std::cos(k * s.u.coord(q, 1));
    return s;
}

Scenario beltrami_3d(const GridSpec& g, const ScenarioParams& p) {
    const double A = param(p, "a", 1.0);
    const double B = param(p, "b", 1.0);
    const double C = param(p, "c", 1.0);
    Scenario s;
    s.name = "beltrami_3d";
    s.u = VectorField(g, "u");
    s.pi = ScalarField(g, "pi");
    for (int t = 0; t < g.slices(); ++t)
        for (std::size_t q = 0; q < g.points(); ++q) {
            double x1 = s.u.coord(q, 0), x2 = s.u.coord(q, 1), x3 = s.u.coord(q, 2);
            double u1 = A * std::sin(x3) + C * std::cos(x2);
            double u2 = B * std::sin(x1) + A * std::cos(x3);
            double u3 = C * std::sin(x2) + B * std::cos(x1);
            s.u.at(t, 0, q) = u1;
            s.u.at(t, 1, q) = u2;
            s.u.at(t, 2, q) = u3;
            s.pi.at(t, 0, q) = -(u1 * u1 + u2 * u2 + u3 * u3) / 2.0;
        }
    spectral::remove_spatial_mean(s.pi);
    return s;
}

VectorField initial_slice(const VectorField& u) {
    GridSpec g0 = u.grid();
    g0.time_steps = 0;
    VectorField out(g0, "u0");
    for (int c = 0; c < u.ncomp(); ++c) {
        auto src = u.slice(0, c);
        auto dst = out.slice(0, c);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

/// Orthonormal basis of the plane perpendicular to integer wavevector k.
std::vector<std::array<double, 3>> perp_basis(int n, const int* k) {
    double nk = 0;
    for (int d = 0; d < n; ++d) nk += double(k[d]) * k[d];
    nk = std::sqrt(nk);
    if (n == 2) return {{-k[1] / nk, k[0] / nk, 0.0}};
    std::array<double, 3> a{double(k[0]) / nk, double(k[1]) / nk, double(k[2]) / nk};
    std::array<double, 3> h = std::abs(a[0]) < 0.9 ? std::array<double, 3>{1, 0, 0}
                                                   : std::array<double, 3>{0, 1, 0};
    std::array<double, 3> e1{a[1] * h[2] - a[2] * h[1], a[2] * h[0] - a[0] * h[2],
                             a[0] * h[1] - a[1] * h[0]};
    double ne = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
    for (auto& v : e1) v /= ne;
    std::array<double, 3> e2{a[1] * e1[2] - a[2] * e1[1], a[2] * e1[0] - a[0] * e1[2],
                             a[0] * e1[1] - a[1] * e1[0]};
    return {e1, e2};
}

struct TimeProfile {
    std::function<double(double)> psi, dpsi;
};

}  // namespace

Scenario make_analytic(const std::string& name, const GridSpec& grid,
                       const ScenarioParams& params) {
    grid.validate();
    Scenario s;
    if (name == "taylor_green_2d") {
        if (grid.n != 2) throw DimensionMismatch("taylor_green_2d needs n = 2");
        s = taylor_green_2d(grid, params);
    } else if (name == "shear_2d") {
        if (grid.n != 2) throw DimensionMismatch("shear_2d needs n = 2");
        s = shear_2d(grid, params);
    } else if (name == "beltrami_3d") {
        if (grid.n != 3) throw DimensionMismatch("beltrami_3d needs n = 3");
        s = beltrami_3d(grid, params);
    } else {
        throw UnknownScenario("no analytic scenario named " + name);
    }
    s.u0 = initial_slice(s.u);
    return s;
}

ScalarField recover_pressure(const VectorField& u) {
    auto uu = outer(u);
    auto dd = spectral::divergence(spectral::divergence_tensor(uu));
    spectral::remove_spatial_mean(dd);
    auto pi = spectral::inv_laplacian_mean_zero(dd);
    pi.set_name("pi");
    return pi;
}

Scenario load_scenario(const std::string& u_path, const std::string& pi_path) {
    Scenario s;
    s.provenance = Scenario::Provenance::file;
    s.u = read_vector(u_path);
    s.name = s.u.name().empty() ? "file" : s.u.name();
    if (pi_path.empty()) {
        s.pi = recover_pressure(s.u);
        s.pi_recovered = true;
    } else {
        s.pi = read_scalar(pi_path);
        if (!(s.pi.grid() == s.u.grid()))
            throw DimensionMismatch("pressure grid differs from velocity grid");
    }
    s.u0 = initial_slice(s.u);
    return s;
}

double incompressible_residual(const Scenario& s, int test_modes) {
    const GridSpec& g = s.u.grid();
    const double T = g.T;
    // Polynomial profiles of degree <= 5 vanishing at t = T: the composite
    // quadrature integrates psi and psi' exactly, so steady solutions hit
    // spatial round-off.
    const std::vector<TimeProfile> profiles = {
        {[T](double t) { double r = 1 - t / T; return r * r; },
         [T](double t) { return -2 * (1 - t / T) / T; }},
        {[T](double t) { double r = 1 - t / T; return r * r * r; },
         [T](double t) { double r = 1 - t / T; return -3 * r * r / T; }},
        {[T](double t) { double r = 1 - t / T; return r * r * (1 + 2 * t / T); },
         [T](double t) { double r = 1 - t / T; return -6 * r * (t / T) / T; }}};

    auto uu = outer(s.u);
    auto wt = highorder_time_weights(g);
    const double cv = g.cell_volume();

    // Enumerate spatial test fields w; for each, precompute the slice
    // integrals a(t) = int u.w and b(t) = int (u(x)u):grad w.
    double worst = 0.0;
    auto consider = [&](const std::vector<double>& a, const std::vector<double>& b,
                        double a0) {
        for (const auto& pr : profiles) {
            double r = 0.0;
            for (int t = 0; t < g.slices(); ++t)
                r += wt[t] * (pr.dpsi(t * g.dt()) * a[t] + pr.psi(t * g.dt()) * b[t]);
            r += pr.psi(0.0) * a0;
            worst = std::max(worst, std::abs(r));
        }
    };

    // Constant test fields: grad w = 0.
    for (int d = 0; d < g.n; ++d) {
        std::vector<double> a(g.slices()), b(g.slices(), 0.0);
        for (int t = 0; t < g.slices(); ++t) {
            double sum = 0.0;
            auto ud = s.u.slice(t, d);
            for (double v : ud) sum += v;
            a[t] = cv * sum;
        }
        double a0 = 0.0;
        for (double v : s.u0.slice(0, d)) a0 += v;
        consider(a, b, cv * a0);
    }

    // Oscillatory fields w = e cos(k.x), e sin(k.x) with e _|_ k. Half-space of
    // k avoids testing +-k twice.
    int kv[3] = {0, 0, 0};
    auto run_k = [&](const int* k) {
        for (const auto& e : perp_basis(g.n, k)) {
            std::vector<double> phase(g.points());
            for (std::size_t q = 0; q < g.points(); ++q) {
                double ph = 0.0;
                for (int d = 0; d < g.n; ++d) ph += k[d] * s.u.coord(q, d);
                phase[q] = ph;
            }
            for (int trig = 0; trig < 2; ++trig) {
                std::vector<double> a(g.slices()), b(g.slices());
                double a0 = 0.0;
                for (std::size_t q = 0; q < g.points(); ++q) {
                    double w = trig == 0 ? std::cos(phase[q]) : std::sin(phase[q]);
                    double ue = 0.0;
                    for (int d = 0; d < g.n; ++d) ue += s.u0.at(0, d, q) * e[d];
                    a0 += ue * w;
                }
                for (int t = 0; t < g.slices(); ++t) {
                    double sa = 0.0, sb = 0.0;
                    for (std::size_t q = 0; q < g.points(); ++q) {
                        double w = trig == 0 ? std::cos(phase[q]) : std::sin(phase[q]);
                        double dw = trig == 0 ? -std::sin(phase[q]) : std::cos(phase[q]);
                        double ue = 0.0;
                        for (int d = 0; d < g.n; ++d) ue += s.u.at(t, d, q) * e[d];
                        sa += ue * w;
                        // (u(x)u) : grad w, grad w_j = k_i e_j dw
                        double kij = 0.0;
                        for (int i = 0; i < g.n; ++i)
                            for (int j = 0; j < g.n; ++j)
                                kij += uu.at(t, SymTensorField::sym_index(g.n, i, j), q) *
                                       k[i] * e[j];
                        sb += kij * dw;
                    }
                    a[t] = cv * sa;
                    b[t] = cv * sb;
                }
                consider(a, b, cv * a0);
            }
        }
    };

    const int m = test_modes;
    if (g.n == 2) {
        for (kv[0] = 0; kv[0] <= m; ++kv[0])
            for (kv[1] = kv[0] == 0 ? 1 : -m; kv[1] <= m; ++kv[1]) run_k(kv);
    } else {
        for (kv[0] = 0; kv[0] <= m; ++kv[0])
            for (kv[1] = kv[0] == 0 ? 0 : -m; kv[1] <= m; ++kv[1])
                for (kv[2] = (kv[0] == 0 && kv[1] == 0) ? 1 : -m; kv[2] <= m; ++kv[2])
                    run_k(kv);
    }
    return worst;
}

}  // namespace lomach
