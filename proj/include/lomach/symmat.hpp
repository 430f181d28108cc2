#pragma once

#include <array>

#include "lomach/config.hpp"

namespace lomach {

/// Point-level symmetric matrix helpers for n = 2 or 3. Entries are packed in
/// the SymTensorField order: 2D (00,01,11), 3D (00,01,02,11,12,22).
namespace symmat {

double trace(int n, const double* e);

/// Smallest eigenvalue; closed form for 2x2, trigonometric closed form for
/// 3x3 with a Jacobi-rotation fallback near-degenerate discriminants.
double lambda_min(int n, const double* e,
                  const Tolerances& tol = default_tolerances());
double lambda_max(int n, const double* e,
                  const Tolerances& tol = default_tolerances());
/// Pointwise matrix spectral norm max(|lambda_min|, |lambda_max|).
double spectral_norm(int n, const double* e,
                     const Tolerances& tol = default_tolerances());

/// All eigenvalues ascending (3 entries used for n=3, 2 for n=2).
std::array<double, 3> eigenvalues(int n, const double* e,
                                  const Tolerances& tol = default_tolerances());

/// Unit eigenvector for the largest eigenvalue.
std::array<double, 3> top_eigenvector(int n, const double* e,
                                      const Tolerances& tol = default_tolerances());

/// Jacobi rotations (dense oracle path, also the fallback).
std::array<double, 3> eigenvalues_jacobi(int n, const double* e);

}  // namespace symmat
}  // namespace lomach
