#include "lomach/mollifier.hpp"

#include <cmath>

#include "lomach/errors.hpp"
#include "lomach/spectral.hpp"

namespace lomach {
namespace {

double raw_bump(double s) {
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
}

double simpson_mass(int nodes) {
    // nodes odd, over [-1,1]
    const double h = 2.0 / (nodes - 1);
    double sum = 0.0;
    for (int i = 0; i < nodes; ++i) {
        double w = (i == 0 || i == nodes - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * raw_bump(-1.0 + i * h);
    }
    return sum * h / 3.0;
}

}  // namespace

double Mollifier::raw_mass() {
    static const double m = simpson_mass(4097);
    return m;
}

double Mollifier::bump(double s) { return raw_bump(s) / raw_mass(); }

double Mollifier::spatial_symbol(int k) const {
    // integral over [-alpha, alpha] of bump_alpha(x) cos(kx) dx
    //   = integral over [-1,1] of bump(s) cos(k alpha s) ds.
    const int nodes = 4097;
    const double h = 2.0 / (nodes - 1);
    double sum = 0.0;
    for (int i = 0; i < nodes; ++i) {
        double s = -1.0 + i * h;
        double w = (i == 0 || i == nodes - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * bump(s) * std::cos(k * alpha * s);
    }
    double v = sum * h / 3.0;
    return v;
}

std::vector<double> Mollifier::spatial_symbols(int half_modes) const {
    std::vector<double> sig(half_modes + 1);
    for (int k = 0; k <= half_modes; ++k) sig[k] = spatial_symbol(k);
    sig[0] = 1.0;  // exact unit mass on the zero mode
    double s0 = spatial_symbol(0);
    for (int k = 1; k <= half_modes; ++k) sig[k] /= s0;
    return sig;
}

std::vector<double> Mollifier::time_weights(double dt) const {
    const int taps = static_cast<int>(std::floor(alpha / dt + 1e-12)) + 1;
    std::vector<double> w(taps);
    double sum = 0.0;
    for (int j = 0; j < taps; ++j) {
        double tau = j * dt;  // sample at t + tau, weight eta_alpha(-tau)
        double s = -tau / alpha;        // in [-1, 0]
        double val = bump(2.0 * s + 1.0);  // time profile supported on [-1,0]
        double trap = (j == 0 || j == taps - 1) ? 0.5 : 1.0;
        w[j] = trap * val;
        sum += w[j];
    }
    if (sum <= 0.0) throw AlphaTooLarge("mollifier window has no interior samples");
    for (double& x : w) x /= sum;
    return w;
}

FieldData mollify(const FieldData& f, const Mollifier& m) {
    const GridSpec& g = f.grid();
    const double dt = g.dt();
    if (m.alpha > g.T) throw AlphaTooLarge("alpha exceeds the time horizon");
    if (m.alpha < 2.0 * dt) throw AlphaTooLarge("alpha below two time steps");

    const auto w = m.time_weights(dt);
    const int taps = static_cast<int>(w.size());
    const int out_steps = static_cast<int>(std::floor((g.T - m.alpha) / dt + 1e-9));
    if (out_steps < 1) throw AlphaTooLarge("no output window remains");

    GridSpec go = g;
    go.time_steps = out_steps;
    go.T = out_steps * dt;
    FieldData out(go, f.ncomp(), f.name());
    for (int t = 0; t <= out_steps; ++t) {
        for (int c = 0; c < f.ncomp(); ++c) {
            auto dst = out.slice(t, c);
            for (int j = 0; j < taps; ++j) {
                auto src = f.slice(t + j, c);
                const double wj = w[j];
                for (std::size_t p = 0; p < dst.size(); ++p)
                    dst[p] = (j == 0 ? 0.0 : dst[p]) + wj * src[p];
            }
        }
    }
    spectral::apply_axis_symbol(out, m.spatial_symbols(g.modes_per_axis / 2));
    return out;
}

ScalarField mollify(const ScalarField& f, const Mollifier& m) {
    return ScalarField(mollify(static_cast<const FieldData&>(f), m));
}
VectorField mollify(const VectorField& f, const Mollifier& m) {
    return VectorField(mollify(static_cast<const FieldData&>(f), m));
}
SymTensorField mollify(const SymTensorField& f, const Mollifier& m) {
    return SymTensorField(mollify(static_cast<const FieldData&>(f), m));
}

}  // namespace lomach
