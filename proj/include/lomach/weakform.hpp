#pragma once

#include <array>
#include <vector>

#include "lomach/field.hpp"

namespace lomach {

struct WeakFormReport {
    double mass_defect = 0.0;      // worst mass identity defect over the battery
    double momentum_defect = 0.0;  // worst momentum identity defect
    double worst() const { return mass_defect > momentum_defect ? mass_defect : momentum_defect; }
};

/// Weak residuals of a compressible pair (rho, m = rho v) against constants
/// and trigonometric test functions with |k|_inf <= test_modes, each paired
/// with three smooth time profiles vanishing at t = T; includes the
/// initial-data terms from the t = 0 slices. The pressure enters through
/// pi_eps: the barotropic pressure splits into pi_eps plus a spatially
/// constant part, and the constant part pairs to zero with any periodic
/// test field.
WeakFormReport compressible_weak_residual(const ScalarField& rho, const VectorField& m,
                                          const ScalarField& pi_eps, int test_modes);

struct ModePairing {
    std::array<int, 3> k{};  // wavevector (half-space representative)
    double value = 0.0;      // max |int (m0 - u0) . phi| over phases/directions
};

/// Initial-data pairing table: for every |k|_inf <= max_mode (half space, plus
/// k = 0) the largest pairing of m0 - u0 against e * cos(k.x), e * sin(k.x)
/// over unit directions e. Both fields are single-slice on the same spatial
/// grid.
std::vector<ModePairing> initial_pairings(const VectorField& m0, const VectorField& u0,
                                          int max_mode);

}  // namespace lomach
