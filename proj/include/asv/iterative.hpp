#pragma once

#include <iosfwd>

#include "asv/sym_operator.hpp"

namespace asv {

/// Stationary iteration u^{m+1} = u^m + B(f - A u^m) for a semi-SPD A
/// with f in R(A).
struct StationaryScheme {
    StationaryScheme(SymOperator a, Matrix b, Vector f);

    SymOperator a;
    Matrix b;
    Vector f;
};

Vector step(const StationaryScheme& s, const Vector& u);

/// Symmetrized operator B + B^t - B^t A B; exactly symmetric by construction.
SymOperator symmetrize(const SymOperator& a, const Matrix& b);

struct ConvergenceCertificate {
    double spectral_radius;     // of the error operator restricted to R(A)
    bool is_convergent;
    bool identity_available;    // the symmetrized operator is SPD on R(A)
    double norm_identity_left;  // |I - BA|_A^2 via the operator seminorm
    double norm_identity_right; // 1 - (sup over the A-unit sphere of (Bbar_Q^{-1} v, v))^{-1}
};
ConvergenceCertificate convergence_certificate(const SymOperator& a, const Matrix& b);

struct IterationTrace {
    std::vector<Vector> iterates;
    Vector energy_errors;      // |u - u^m|_A against the minimum-norm solution
    Vector projected_errors;   // ||Q(u - u^m)||
    bool converged = false;
    int breakdown_at = -1;     // iteration index of a PCG breakdown, -1 if none
};

/// Preconditioned conjugate gradients with projected-residual stopping rule
/// ||Q r^m|| <= tol * ||Q r^0||. Requires f in R(A) and B SPD on R(A).
IterationTrace pcg_solve(const SymOperator& a, const SymOperator& b, const Vector& f,
                         const Vector& u0, double tol = 1e-10, int max_iter = -1);

/// CSV columns: iter, energy_error, projected_error (17 significant digits).
void write_trace_csv(std::ostream& os, const IterationTrace& trace);

}  // namespace asv
