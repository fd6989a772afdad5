#pragma once

#include "asv/matrix.hpp"

namespace asv {

/// Full spectral decomposition of a symmetric matrix.
/// Eigenvalues are sorted nonincreasing; columns of `vectors` are the
/// matching orthonormal eigenvectors.
struct EigenSym {
    Vector values;
    Matrix vectors;
};

// Cyclic Jacobi rotations, deterministic sweep order, until the
// off-diagonal Frobenius norm drops below 1e-14 * ||M||_F.
EigenSym eig_sym(const Matrix& m);

// Singular values, nonincreasing, via one-sided Jacobi orthogonalization.
Vector singular_values(const Matrix& m);

// Generalized symmetric eigenvalues of (M, T) with T SPD, solved by
// congruence through the spectral square root of T. Nonincreasing.
Vector eig_pencil(const Matrix& m, const Matrix& t);

// Spectral radius of a general square matrix by normalized repeated squaring.
double spectral_radius(const Matrix& m);

}  // namespace asv
