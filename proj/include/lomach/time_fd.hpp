#pragma once

#include "lomach/field.hpp"

namespace lomach {

/// Finite-difference time derivative: 4th-order centered in the interior,
/// one-sided near the endpoints. order = 1 or 2 (second derivative).
/// Requires at least 5 time slices.
FieldData time_derivative(const FieldData& f, int order);
ScalarField time_derivative(const ScalarField& f, int order);
VectorField time_derivative(const VectorField& f, int order);

/// Apply the same stencils to a per-slice scalar sequence (used for the
/// spatially constant density offset).
std::vector<double> time_derivative_sequence(const std::vector<double>& k, double dt,
                                             int order);

}  // namespace lomach
