#include "lomach/time_fd.hpp"

#include <vector>

#include "lomach/errors.hpp"

namespace lomach {
namespace {

/// Fornberg finite-difference weights for derivative `m` at point z on nodes x.
std::vector<double> fd_weights(double z, const std::vector<double>& x, int m) {
    const int nd = static_cast<int>(x.size()) - 1;
    std::vector<std::vector<double>> c(nd + 1, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0, c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i <= nd; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0, c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(nd + 1);
    for (int i = 0; i <= nd; ++i) w[i] = c[i][m];
    return w;
}

/// Per output slice: (window start, weights over the window).
std::vector<std::pair<int, std::vector<double>>> build_stencils(int slices, double dt,
                                                                int order) {
    if (order != 1 && order != 2) throw Error("time_derivative: order must be 1 or 2");
    if (slices < 5) throw TooFewSlices("time_derivative needs at least 5 slices");
    const int W = std::min(slices, order == 1 ? 5 : 6);  // boundary window, 4th order
    std::vector<std::pair<int, std::vector<double>>> st(slices);
    for (int i = 0; i < slices; ++i) {
        int start;
        int width;
        if (i >= 2 && i + 2 < slices) {
            start = i - 2;
            width = 5;
        } else {
            start = i < 2 ? 0 : slices - W;
            width = W;
        }
        std::vector<double> x(width);
        for (int j = 0; j < width; ++j) x[j] = (start + j) * dt;
        st[i] = {start, fd_weights(i * dt, x, order)};
    }
    return st;
}

}  // namespace

FieldData time_derivative(const FieldData& f, int order) {
    const GridSpec& g = f.grid();
    auto st = build_stencils(g.slices(), g.dt(), order);
    FieldData out(g, f.ncomp(), f.name());
    for (int t = 0; t < g.slices(); ++t) {
        const auto& [start, w] = st[t];
        for (int c = 0; c < f.ncomp(); ++c) {
            auto dst = out.slice(t, c);
            for (int j = 0; j < static_cast<int>(w.size()); ++j) {
                auto src = f.slice(start + j, c);
                const double wj = w[j];
                for (std::size_t p = 0; p < dst.size(); ++p)
                    dst[p] = (j == 0 ? 0.0 : dst[p]) + wj * src[p];
            }
        }
    }
    return out;
}

ScalarField time_derivative(const ScalarField& f, int order) {
    return ScalarField(time_derivative(static_cast<const FieldData&>(f), order));
}
VectorField time_derivative(const VectorField& f, int order) {
    return VectorField(time_derivative(static_cast<const FieldData&>(f), order));
}

std::vector<double> time_derivative_sequence(const std::vector<double>& k, double dt,
                                             int order) {
    auto st = build_stencils(static_cast<int>(k.size()), dt, order);
    std::vector<double> out(k.size(), 0.0);
    for (std::size_t i = 0; i < k.size(); ++i) {
        const auto& [start, w] = st[i];
        for (std::size_t j = 0; j < w.size(); ++j) out[i] += w[j] * k[start + j];
    }
    return out;
}

}  // namespace lomach
