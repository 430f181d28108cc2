#include "lomach/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <vector>

#include "lomach/errors.hpp"

namespace lomach::spectral {
namespace {

using cplx = std::complex<double>;

struct Workspace {
    int n = 0, N = 0;
    std::size_t real_size = 0, cplx_size = 0;
    double* rbuf = nullptr;
    fftw_complex* cbuf = nullptr;
    fftw_plan fwd = nullptr, bwd = nullptr;

    Workspace(int n_, int N_) : n(n_), N(N_) {
        real_size = 1;
        for (int d = 0; d < n; ++d) real_size *= N;
        cplx_size = real_size / N * (N / 2 + 1);
        rbuf = fftw_alloc_real(real_size);
        cbuf = fftw_alloc_complex(cplx_size);
        if (n == 2) {
            fwd = fftw_plan_dft_r2c_2d(N, N, rbuf, cbuf, FFTW_ESTIMATE);
            bwd = fftw_plan_dft_c2r_2d(N, N, cbuf, rbuf, FFTW_ESTIMATE);
        } else {
            fwd = fftw_plan_dft_r2c_3d(N, N, N, rbuf, cbuf, FFTW_ESTIMATE);
            bwd = fftw_plan_dft_c2r_3d(N, N, N, cbuf, rbuf, FFTW_ESTIMATE);
        }
    }
    ~Workspace() {
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(rbuf);
        fftw_free(cbuf);
    }
};

Workspace& workspace(int n, int N) {
    // Workspaces (buffers and plans) are per-thread; plan creation goes
    // through FFTW's planner, made thread safe once up front.
    static const bool planner_guard = [] {
        fftw_make_planner_thread_safe();
        return true;
    }();
    (void)planner_guard;
    thread_local std::map<int, Workspace*> cache;
    const int key = n * 100000 + N;
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, new Workspace(n, N)).first;
    return *it->second;
}

inline int wavenumber(int idx, int N) { return idx <= N / 2 ? idx : idx - N; }

/// Visit every retained complex mode; F(cplx&, k[3]).
template <typename F>
void for_each_mode(Workspace& w, F&& f) {
    const int N = w.N, H = N / 2 + 1;
    cplx* c = reinterpret_cast<cplx*>(w.cbuf);
    if (w.n == 2) {
        for (int i1 = 0; i1 < N; ++i1) {
            int k[3] = {wavenumber(i1, N), 0, 0};
            for (int i2 = 0; i2 < H; ++i2) {
                k[1] = i2;
                f(c[static_cast<std::size_t>(i1) * H + i2], k);
            }
        }
    } else {
        for (int i1 = 0; i1 < N; ++i1) {
            int k[3];
            k[0] = wavenumber(i1, N);
            for (int i2 = 0; i2 < N; ++i2) {
                k[1] = wavenumber(i2, N);
                for (int i3 = 0; i3 < H; ++i3) {
                    k[2] = i3;
                    f(c[(static_cast<std::size_t>(i1) * N + i2) * H + i3], k);
                }
            }
        }
    }
}

/// One slice/component through the transform pair with a spectral mutation.
template <typename F>
void transform_slice(std::span<const double> in, std::span<double> out, Workspace& w,
                     F&& mutate) {
    std::memcpy(w.rbuf, in.data(), sizeof(double) * w.real_size);
    fftw_execute(w.fwd);
    const double scale = 1.0 / static_cast<double>(w.real_size);
    for_each_mode(w, [&](cplx& c, const int k[3]) {
        c *= scale;
        mutate(c, k);
    });
    fftw_execute(w.bwd);
    std::memcpy(out.data(), w.rbuf, sizeof(double) * w.real_size);
}

bool nyquist(const int k[3], int n, int N) {
    for (int d = 0; d < n; ++d)
        if (k[d] == N / 2) return true;
    return false;
}

}  // namespace

VectorField gradient(const ScalarField& f) {
    const GridSpec& g = f.grid();
    g.validate();
    Workspace& w = workspace(g.n, g.modes_per_axis);
    const int cut = static_cast<int>(std::floor(g.dealias_fraction * g.modes_per_axis / 2));
    VectorField out(g, f.name().empty() ? "" : "grad_" + f.name());
    for (int t = 0; t < g.slices(); ++t) {
        for (int d = 0; d < g.n; ++d) {
            transform_slice(f.slice(t, 0), out.slice(t, d), w, [&](cplx& c, const int k[3]) {
                bool keep = !nyquist(k, g.n, g.modes_per_axis);
                for (int a = 0; a < g.n; ++a)
                    if (std::abs(k[a]) > cut) keep = false;
                c = keep ? c * cplx(0.0, static_cast<double>(k[d])) : cplx(0.0, 0.0);
            });
        }
    }
    return out;
}

ScalarField partial(const ScalarField& f, int axis) {
    const GridSpec& g = f.grid();
    Workspace& w = workspace(g.n, g.modes_per_axis);
    ScalarField out(g);
    for (int t = 0; t < g.slices(); ++t) {
        transform_slice(f.slice(t, 0), out.slice(t, 0), w, [&](cplx& c, const int k[3]) {
            c = nyquist(k, g.n, g.modes_per_axis) ? cplx(0.0, 0.0)
                                                  : c * cplx(0.0, static_cast<double>(k[axis]));
        });
    }
    return out;
}

ScalarField divergence(const VectorField& v) {
    const GridSpec& g = v.grid();
    g.validate();
    if (v.ncomp() != g.n) throw DimensionMismatch("divergence: component count != n");
    Workspace& w = workspace(g.n, g.modes_per_axis);
    const int cut = static_cast<int>(std::floor(g.dealias_fraction * g.modes_per_axis / 2));
    ScalarField out(g, v.name().empty() ? "" : "div_" + v.name());
    std::vector<double> tmp(g.points());
    for (int t = 0; t < g.slices(); ++t) {
        auto acc = out.slice(t, 0);
        for (int d = 0; d < g.n; ++d) {
            transform_slice(v.slice(t, d), std::span<double>(tmp), w,
                            [&](cplx& c, const int k[3]) {
                                bool keep = !nyquist(k, g.n, g.modes_per_axis);
                                for (int a = 0; a < g.n; ++a)
                                    if (std::abs(k[a]) > cut) keep = false;
                                c = keep ? c * cplx(0.0, static_cast<double>(k[d]))
                                         : cplx(0.0, 0.0);
                            });
            for (std::size_t p = 0; p < tmp.size(); ++p) acc[p] = (d == 0 ? 0.0 : acc[p]) + tmp[p];
        }
    }
    return out;
}

VectorField divergence_tensor(const SymTensorField& s) {
    const GridSpec& g = s.grid();
    g.validate();
    if (s.ncomp() != sym_components(g.n))
        throw DimensionMismatch("divergence_tensor: component count mismatch");
    // (div S)_i = sum_j d_j S_ij; reuse the vector divergence on each row.
    VectorField out(g, s.name().empty() ? "" : "div_" + s.name());
    for (int i = 0; i < g.n; ++i) {
        VectorField row(g);
        for (int t = 0; t < g.slices(); ++t)
            for (int j = 0; j < g.n; ++j) {
                auto src = s.slice(t, s.sym_index(i, j));
                auto dst = row.slice(t, j);
                std::memcpy(dst.data(), src.data(), sizeof(double) * src.size());
            }
        ScalarField di = divergence(row);
        for (int t = 0; t < g.slices(); ++t) {
            auto src = di.slice(t, 0);
            auto dst = out.slice(t, i);
            std::memcpy(dst.data(), src.data(), sizeof(double) * src.size());
        }
    }
    return out;
}

ScalarField laplacian(const ScalarField& f) {
    const GridSpec& g = f.grid();
    Workspace& w = workspace(g.n, g.modes_per_axis);
    ScalarField out(g);
    for (int t = 0; t < g.slices(); ++t) {
        transform_slice(f.slice(t, 0), out.slice(t, 0), w, [&](cplx& c, const int k[3]) {
            double k2 = 0.0;
            for (int a = 0; a < g.n; ++a) k2 += static_cast<double>(k[a]) * k[a];
            c = nyquist(k, g.n, g.modes_per_axis) ? cplx(0.0, 0.0) : c * (-k2);
        });
    }
    return out;
}

ScalarField inv_laplacian_mean_zero(const ScalarField& f, const Tolerances& tol) {
    const GridSpec& g = f.grid();
    const double fmax = f.max_abs();
    const double bound = tol.mean_zero_rel * fmax;
    for (int t = 0; t < g.slices(); ++t) {
        double m = spatial_mean(f, t, 0);
        if (std::abs(m) > bound && fmax > 0.0)
            throw MeanNotZero("inv_laplacian: slice mean " + std::to_string(m));
    }
    Workspace& w = workspace(g.n, g.modes_per_axis);
    ScalarField out(g);
    for (int t = 0; t < g.slices(); ++t) {
        transform_slice(f.slice(t, 0), out.slice(t, 0), w, [&](cplx& c, const int k[3]) {
            double k2 = 0.0;
            for (int a = 0; a < g.n; ++a) k2 += static_cast<double>(k[a]) * k[a];
            c = (k2 == 0.0) ? cplx(0.0, 0.0) : c / k2;
        });
    }
    return out;
}

void dealias(FieldData& f) {
    const GridSpec& g = f.grid();
    Workspace& w = workspace(g.n, g.modes_per_axis);
    const int cut = static_cast<int>(std::floor(g.dealias_fraction * g.modes_per_axis / 2));
    for (int t = 0; t < g.slices(); ++t)
        for (int c = 0; c < f.ncomp(); ++c)
            transform_slice(f.slice(t, c), f.slice(t, c), w, [&](cplx& z, const int k[3]) {
                for (int a = 0; a < g.n; ++a)
                    if (std::abs(k[a]) > cut) z = cplx(0.0, 0.0);
            });
}

FieldData oversample(const FieldData& f, int factor) {
    const GridSpec& g = f.grid();
    const int N = g.modes_per_axis, M = N * factor;
    GridSpec gf = g;
    gf.modes_per_axis = M;
    FieldData out(gf, f.ncomp(), f.name());
    Workspace& wN = workspace(g.n, N);
    Workspace& wM = workspace(g.n, M);
    const int HN = N / 2 + 1, HM = M / 2 + 1;
    cplx* cN = reinterpret_cast<cplx*>(wN.cbuf);
    cplx* cM = reinterpret_cast<cplx*>(wM.cbuf);
    for (int t = 0; t < g.slices(); ++t) {
        for (int c = 0; c < f.ncomp(); ++c) {
            auto in = f.slice(t, c);
            std::memcpy(wN.rbuf, in.data(), sizeof(double) * wN.real_size);
            fftw_execute(wN.fwd);
            std::memset(wM.cbuf, 0, sizeof(fftw_complex) * wM.cplx_size);
            const double scale = 1.0 / static_cast<double>(wN.real_size);
            if (g.n == 2) {
                for (int i1 = 0; i1 < N; ++i1) {
                    int k1 = wavenumber(i1, N);
                    if (std::abs(k1) >= N / 2) continue;
                    int j1 = k1 >= 0 ? k1 : k1 + M;
                    for (int k2 = 0; k2 < N / 2; ++k2)
                        cM[static_cast<std::size_t>(j1) * HM + k2] =
                            cN[static_cast<std::size_t>(i1) * HN + k2] * scale;
                }
            } else {
                for (int i1 = 0; i1 < N; ++i1) {
                    int k1 = wavenumber(i1, N);
                    if (std::abs(k1) >= N / 2) continue;
                    int j1 = k1 >= 0 ? k1 : k1 + M;
                    for (int i2 = 0; i2 < N; ++i2) {
                        int k2 = wavenumber(i2, N);
                        if (std::abs(k2) >= N / 2) continue;
                        int j2 = k2 >= 0 ? k2 : k2 + M;
                        for (int k3 = 0; k3 < N / 2; ++k3)
                            cM[(static_cast<std::size_t>(j1) * M + j2) * HM + k3] =
                                cN[(static_cast<std::size_t>(i1) * N + i2) * HN + k3] * scale;
                    }
                }
            }
            fftw_execute(wM.bwd);
            auto dst = out.slice(t, c);
            std::memcpy(dst.data(), wM.rbuf, sizeof(double) * wM.real_size);
        }
    }
    return out;
}

void apply_axis_symbol(FieldData& f, const std::vector<double>& sigma) {
    const GridSpec& g = f.grid();
    Workspace& w = workspace(g.n, g.modes_per_axis);
    for (int t = 0; t < g.slices(); ++t)
        for (int c = 0; c < f.ncomp(); ++c)
            transform_slice(f.slice(t, c), f.slice(t, c), w, [&](cplx& z, const int k[3]) {
                for (int a = 0; a < g.n; ++a) z *= sigma[std::abs(k[a])];
            });
}

double spatial_mean(const FieldData& f, int t, int c) {
    auto s = f.slice(t, c);
    double sum = 0.0;
    for (double v : s) sum += v;
    return sum / static_cast<double>(s.size());
}

void remove_spatial_mean(FieldData& f) {
    for (int t = 0; t < f.slices(); ++t)
        for (int c = 0; c < f.ncomp(); ++c) {
            double m = spatial_mean(f, t, c);
            for (double& v : f.slice(t, c)) v -= m;
        }
}

}  // namespace lomach::spectral
