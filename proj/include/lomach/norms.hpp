#pragma once

#include "lomach/field.hpp"

namespace lomach {

enum class NormKind { L1, L2, Linf, C0 };

/// Pointwise magnitude: |f| for scalars, Euclidean norm for vectors, matrix
/// spectral norm for symmetric tensors (the one convention, used everywhere).
ScalarField magnitude_field(const FieldData& f, bool sym_tensor);

/// Space-time norms over [0,T]: trapezoidal in time, collocation in space.
/// L1 uses 4x spectrally oversampled collocation (non-smooth integrands).
/// Linf and C0 are both the max over all collocation points and times.
double norm(const ScalarField& f, NormKind kind);
double norm(const VectorField& f, NormKind kind);
double norm(const SymTensorField& f, NormKind kind);

/// Trapezoidal weights for the time grid (dt * [1/2, 1, ..., 1, 1/2]).
std::vector<double> trapezoid_weights(const GridSpec& g);

/// High-order (composite Boole where the step count allows, else Simpson,
/// else trapezoid) weights; used by the weak-form residual tests where
/// trapezoid accuracy is insufficient.
std::vector<double> highorder_time_weights(const GridSpec& g);

}  // namespace lomach
