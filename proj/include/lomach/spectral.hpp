#pragma once

#include "lomach/config.hpp"
#include "lomach/field.hpp"

namespace lomach::spectral {

VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& v);
VectorField divergence_tensor(const SymTensorField& s);
ScalarField laplacian(const ScalarField& f);
ScalarField partial(const ScalarField& f, int axis);

/// Solve -Lap g = f with zero spatial mean per slice. Throws MeanNotZero if
/// any slice mean exceeds tol.mean_zero_rel * max|f|.
ScalarField inv_laplacian_mean_zero(const ScalarField& f,
                                    const Tolerances& tol = default_tolerances());

/// Zero all modes with any |k_d| above dealias_fraction * N/2, in place.
void dealias(FieldData& f);

/// Spectral zero-padding interpolation onto a grid refined by `factor` per
/// axis. Nyquist modes are dropped.
FieldData oversample(const FieldData& f, int factor);

/// Multiply each mode by prod_d sigma[|k_d|]; sigma has N/2+1 entries.
void apply_axis_symbol(FieldData& f, const std::vector<double>& sigma);

double spatial_mean(const FieldData& f, int t, int c);

/// Subtract the per-slice spatial mean of every component, in place.
void remove_spatial_mean(FieldData& f);

}  // namespace lomach::spectral
