#include "lomach/norms.hpp"

#include <algorithm>
#include <cmath>

#include "lomach/errors.hpp"
#include "lomach/spectral.hpp"
#include "lomach/symmat.hpp"

namespace lomach {

ScalarField magnitude_field(const FieldData& f, bool sym_tensor) {
    const GridSpec& g = f.grid();
    ScalarField out(g);
    const int nc = f.ncomp();
    for (int t = 0; t < f.slices(); ++t) {
        auto dst = out.slice(t, 0);
        if (nc == 1) {
            auto s = f.slice(t, 0);
            for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = std::abs(s[p]);
        } else if (!sym_tensor) {
            for (int c = 0; c < nc; ++c) {
                auto s = f.slice(t, c);
                for (std::size_t p = 0; p < dst.size(); ++p)
                    dst[p] = (c == 0 ? 0.0 : dst[p]) + s[p] * s[p];
            }
            for (double& v : dst) v = std::sqrt(v);
        } else {
            double e[6];
            for (std::size_t p = 0; p < dst.size(); ++p) {
                for (int c = 0; c < nc; ++c) e[c] = f.at(t, c, p);
                dst[p] = symmat::spectral_norm(g.n, e);
            }
        }
    }
    return out;
}

std::vector<double> trapezoid_weights(const GridSpec& g) {
    std::vector<double> w(g.slices(), g.dt());
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

std::vector<double> highorder_time_weights(const GridSpec& g) {
    const int m = g.time_steps;
    const double h = g.dt();
    std::vector<double> w(m + 1, 0.0);
    if (m % 4 == 0 && m >= 4) {
        // composite Boole
        static const double b[5] = {7, 32, 12, 32, 7};
        for (int seg = 0; seg < m / 4; ++seg)
            for (int j = 0; j <= 4; ++j) w[4 * seg + j] += b[j] * 2.0 * h / 45.0;
    } else if (m % 2 == 0) {
        for (int seg = 0; seg < m / 2; ++seg) {
            w[2 * seg] += h / 3.0;
            w[2 * seg + 1] += 4.0 * h / 3.0;
            w[2 * seg + 2] += h / 3.0;
        }
    } else {
        return trapezoid_weights(g);
    }
    return w;
}

namespace {

double integrate_scalar(const ScalarField& mag, int power) {
    const GridSpec& g = mag.grid();
    const auto w = trapezoid_weights(g);
    const double cell = g.cell_volume();
    double total = 0.0;
    for (int t = 0; t < g.slices(); ++t) {
        double s = 0.0;
        for (double v : mag.slice(t, 0)) s += power == 1 ? v : v * v;
        total += w[t] * s * cell;
    }
    return total;
}

double norm_impl(const FieldData& f, NormKind kind, bool sym) {
    switch (kind) {
        case NormKind::Linf:
        case NormKind::C0: {
            ScalarField mag = magnitude_field(f, sym);
            return mag.max_abs();
        }
        case NormKind::L2: {
            ScalarField mag = magnitude_field(f, sym);
            return std::sqrt(integrate_scalar(mag, 2));
        }
        case NormKind::L1: {
            // non-smooth integrand: oversampled collocation
            FieldData fine = spectral::oversample(f, 4);
            ScalarField mag = magnitude_field(fine, sym);
            return integrate_scalar(mag, 1);
        }
    }
    throw Error("unreachable norm kind");
}

}  // namespace

double norm(const ScalarField& f, NormKind kind) { return norm_impl(f, kind, false); }
double norm(const VectorField& f, NormKind kind) { return norm_impl(f, kind, false); }
double norm(const SymTensorField& f, NormKind kind) { return norm_impl(f, kind, true); }

}  // namespace lomach
