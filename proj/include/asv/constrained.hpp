#pragma once

#include "asv/sym_operator.hpp"

namespace asv {

/// Equality-constrained quadratic minimization
///     minimize  w^t M w   subject to  C w = v,
/// with M symmetric semi-SPD and C surjective, by orthonormal null-space
/// parametrization: w = w0 + N z, where N spans null(C) and w0 is the
/// minimum-norm particular solution. No KKT/saddle solve is involved, so
/// the result is independent of any closed-form identity being verified.
class ConstrainedQuadraticForm {
public:
    ConstrainedQuadraticForm(Matrix m, Matrix c);

    int constraint_dim() const { return c_.rows(); }
    int lift_dim() const { return c_.cols(); }

    /// Linear map v -> argmin (lift_dim x constraint_dim).
    const Matrix& minimizer_map() const { return minimizer_map_; }

    /// Quadratic form S with  min value = v^t S v  (constraint_dim square).
    const Matrix& schur_form() const { return schur_form_; }

    double value(const Vector& v) const;
    Vector minimizer(const Vector& v) const { return minimizer_map_.apply(v); }

private:
    Matrix m_;
    Matrix c_;
    Matrix minimizer_map_;
    Matrix schur_form_;
};

struct ConstrainedMin {
    double value;
    Vector minimizer;
};

/// min (Bt^{-1} w, w) over {w : C w = v}; Bt must be SPD and C surjective.
ConstrainedMin constrained_inf(const SymOperator& bt, const LinearMap& c, const Vector& v);

}  // namespace asv
