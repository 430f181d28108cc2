#pragma once

#include <vector>

#include "lomach/config.hpp"
#include "lomach/field.hpp"

namespace lomach {

/// Space-time mollifier: tensor product of a normalized smooth bump in each
/// spatial variable (support [-1,1]) and in time (support [-1,0]), both scaled
/// by `alpha`. Convolution uses only samples at times in [t, t+alpha].
struct Mollifier {
    double alpha = 0.1;

    /// The unscaled symmetric bump exp(-1/(1-s^2)) on (-1,1), normalized to
    /// unit mass. Zero outside.
    static double bump(double s);
    /// Unit mass of the raw (unnormalized) bump, by dense quadrature.
    static double raw_mass();

    /// Spatial Fourier symbol of the scaled profile at integer wavenumber k,
    /// per axis: integral of bump_alpha(x) cos(kx) dx.
    double spatial_symbol(int k) const;
    /// Symbols for k = 0..N/2 (index by |k|).
    std::vector<double> spatial_symbols(int half_modes) const;

    /// Normalized one-sided quadrature weights on the time grid: w[j] is the
    /// weight of sample f(t + j*dt), j = 0..taps-1.
    std::vector<double> time_weights(double dt) const;
};

/// eta_alpha * f on [0, T - alpha]. Throws AlphaTooLarge if alpha > T or
/// alpha < 2 time steps.
FieldData mollify(const FieldData& f, const Mollifier& m);
ScalarField mollify(const ScalarField& f, const Mollifier& m);
VectorField mollify(const VectorField& f, const Mollifier& m);
SymTensorField mollify(const SymTensorField& f, const Mollifier& m);

}  // namespace lomach
