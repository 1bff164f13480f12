#pragma once

#include "lqr_regret/types.hpp"

namespace lqr::linalg {

// Max modulus over the eigenvalues of a square matrix.
double spectral_radius(const Matrix& m);

Matrix symmetrize(const Matrix& m);

// Smallest eigenvalue of the symmetric part of m.
double min_symmetric_eigenvalue(const Matrix& m);

double spectral_norm(const Matrix& m);

bool all_finite(const Matrix& m);

// (X + Xᵀ)/2 must match X within tol·max(1, ‖X‖_F).
bool is_symmetric(const Matrix& m, double tol = 1e-10);

}  // namespace lqr::linalg
