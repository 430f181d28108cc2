#include "lomach/symmat.hpp"

#include <algorithm>
#include <cmath>

namespace lomach::symmat {
namespace {

void unpack3(const double* e, double a[3][3]) {
    a[0][0] = e[0]; a[0][1] = e[1]; a[0][2] = e[2];
    a[1][0] = e[1]; a[1][1] = e[3]; a[1][2] = e[4];
    a[2][0] = e[2]; a[2][1] = e[4]; a[2][2] = e[5];
}

std::array<double, 3> jacobi3(const double* e) {
    double a[3][3];
    unpack3(e, a);
    for (int sweep = 0; sweep < 30; ++sweep) {
        double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
        if (off == 0.0) break;
        for (int p = 0; p < 2; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (a[p][q] == 0.0) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int r = 0; r < 3; ++r) {
                    double arp = a[r][p], arq = a[r][q];
                    a[r][p] = c * arp - s * arq;
                    a[r][q] = s * arp + c * arq;
                }
                for (int r = 0; r < 3; ++r) {
                    double apr = a[p][r], aqr = a[q][r];
                    a[p][r] = c * apr - s * aqr;
                    a[q][r] = s * apr + c * aqr;
                }
            }
    }
    std::array<double, 3> ev = {a[0][0], a[1][1], a[2][2]};
    std::sort(ev.begin(), ev.end());
    return ev;
}

std::array<double, 3> eig3(const double* e, const Tolerances& tol) {
    // Trigonometric closed form for symmetric 3x3 (deflate by the mean first).
    const double q = (e[0] + e[3] + e[5]) / 3.0;
    const double b00 = e[0] - q, b11 = e[3] - q, b22 = e[5] - q;
    const double p2 = b00 * b00 + b11 * b11 + b22 * b22 +
                      2.0 * (e[1] * e[1] + e[2] * e[2] + e[4] * e[4]);
    const double scale = std::abs(e[0]) + std::abs(e[3]) + std::abs(e[5]) +
                         std::abs(e[1]) + std::abs(e[2]) + std::abs(e[4]);
    if (p2 <= tol.eig_discriminant * tol.eig_discriminant * scale * scale)
        return {q, q, q};
    const double p = std::sqrt(p2 / 6.0);
    // det(B/p)/2
    const double c00 = b00 / p, c11 = b11 / p, c22 = b22 / p;
    const double c01 = e[1] / p, c02 = e[2] / p, c12 = e[4] / p;
    const double detB = c00 * (c11 * c22 - c12 * c12) - c01 * (c01 * c22 - c12 * c02) +
                        c02 * (c01 * c12 - c11 * c02);
    double r = detB / 2.0;
    if (r >= 1.0 - tol.eig_discriminant || r <= -1.0 + tol.eig_discriminant)
        return jacobi3(e);
    const double phi = std::acos(r) / 3.0;
    const double l1 = q + 2.0 * p * std::cos(phi);
    const double l3 = q + 2.0 * p * std::cos(phi + 2.0 * 3.14159265358979323846 / 3.0);
    const double l2 = 3.0 * q - l1 - l3;
    std::array<double, 3> ev = {l3, l2, l1};
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace

double trace(int n, const double* e) {
    return n == 2 ? e[0] + e[2] : e[0] + e[3] + e[5];
}

std::array<double, 3> eigenvalues(int n, const double* e, const Tolerances& tol) {
    if (n == 2) {
        const double m = 0.5 * (e[0] + e[2]);
        const double d = std::sqrt(0.25 * (e[0] - e[2]) * (e[0] - e[2]) + e[1] * e[1]);
        return {m - d, m + d, 0.0};
    }
    return eig3(e, tol);
}

std::array<double, 3> eigenvalues_jacobi(int n, const double* e) {
    if (n == 2) return eigenvalues(2, e);
    return jacobi3(e);
}

double lambda_min(int n, const double* e, const Tolerances& tol) {
    return eigenvalues(n, e, tol)[0];
}

double lambda_max(int n, const double* e, const Tolerances& tol) {
    auto ev = eigenvalues(n, e, tol);
    return n == 2 ? ev[1] : ev[2];
}

double spectral_norm(int n, const double* e, const Tolerances& tol) {
    auto ev = eigenvalues(n, e, tol);
    double lo = ev[0], hi = n == 2 ? ev[1] : ev[2];
    return std::max(std::abs(lo), std::abs(hi));
}

std::array<double, 3> top_eigenvector(int n, const double* e, const Tolerances& tol) {
    if (n == 2) {
        const double l = lambda_max(2, e, tol);
        // (A - l I) v = 0; pick the larger row of the adjugate.
        double v1[2] = {e[1], l - e[0]};
        double v2[2] = {l - e[2], e[1]};
        double n1 = std::hypot(v1[0], v1[1]), n2 = std::hypot(v2[0], v2[1]);
        if (n1 < 1e-300 && n2 < 1e-300) return {1.0, 0.0, 0.0};
        if (n1 >= n2) return {v1[0] / n1, v1[1] / n1, 0.0};
        return {v2[0] / n2, v2[1] / n2, 0.0};
    }
    auto ev = eig3(e, tol);
    const double l = ev[2];
    double a[3][3];
    unpack3(e, a);
    // columns of (A - l2)(A - l1), pick the longest
    double m1[3][3], m2[3][3], prod[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            m1[i][j] = a[i][j] - (i == j ? ev[0] : 0.0);
            m2[i][j] = a[i][j] - (i == j ? ev[1] : 0.0);
        }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            prod[i][j] = 0.0;
            for (int k = 0; k < 3; ++k) prod[i][j] += m1[i][k] * m2[k][j];
        }
    int best = 0;
    double bestn = -1.0;
    for (int j = 0; j < 3; ++j) {
        double nn = prod[0][j] * prod[0][j] + prod[1][j] * prod[1][j] + prod[2][j] * prod[2][j];
        if (nn > bestn) { bestn = nn; best = j; }
    }
    if (bestn < 1e-280) return {1.0, 0.0, 0.0};
    double inv = 1.0 / std::sqrt(bestn);
    (void)l;
    return {prod[0][best] * inv, prod[1][best] * inv, prod[2][best] * inv};
}

}  // namespace lomach::symmat
