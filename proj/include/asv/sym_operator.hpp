#pragma once

#include <memory>
#include <mutex>
#include <optional>

#include "asv/eig.hpp"
#include "asv/matrix.hpp"

namespace asv {

/// Dense symmetric operator on a finite-dimensional space with cached
/// spectral data and a range/null split.
///
/// The constructor symmetrizes via (M + M^t)/2. Spectral data is computed
/// on first use and shared between copies; the value is logically immutable
/// and safe for concurrent read access.
class SymOperator {
public:
    explicit SymOperator(Matrix m, std::optional<double> null_threshold = std::nullopt);

    int dim() const { return m_.rows(); }
    const Matrix& entries() const { return m_; }
    Vector apply(const Vector& v) const { return m_.apply(v); }

    const Vector& eigenvalues() const { return spectral().eig.values; }
    const Matrix& eigenvectors() const { return spectral().eig.vectors; }
    double lambda_max() const { return spectral().lambda_max; }
    /// dim * eps_mach * max(1, lambda_max) unless overridden at construction.
    double null_threshold() const { return spectral().tau_null; }
    int rank() const { return spectral().rank; }

    bool is_semi_spd() const;
    bool is_spd() const;
    bool is_zero() const;

    /// Orthonormal basis of R(A) (eigenvectors with |lambda| > tau_null), dim x rank.
    Matrix range_basis() const;
    /// Orthonormal basis of N(A), dim x (dim - rank).
    Matrix null_basis() const;

    /// Minimum-norm solution A^+ b through the spectral decomposition.
    Vector pseudo_solve(const Vector& b) const;
    Matrix pseudo_inverse() const;
    /// Spectral inverse; requires SPD.
    Matrix inverse() const;

private:
    struct Spectral {
        EigenSym eig;
        double lambda_max = 0.0;
        double tau_null = 0.0;
        int rank = 0;
    };
    struct Cache {
        std::once_flag flag;
        Spectral data;
    };

    const Spectral& spectral() const;

    Matrix m_;
    std::optional<double> tau_override_;
    std::shared_ptr<Cache> cache_;
};

/// Dense rectangular map between two spaces.
class LinearMap {
public:
    explicit LinearMap(Matrix m);

    int rows() const { return m_.rows(); }
    int cols() const { return m_.cols(); }
    const Matrix& entries() const { return m_; }
    Vector apply(const Vector& v) const { return m_.apply(v); }
    Vector apply_transpose(const Vector& v) const { return m_.apply_transpose(v); }

    /// Certified by singular values above max(rows, cols) * eps_mach * sigma_max.
    bool is_surjective() const;
    double sigma_max() const;

private:
    Matrix m_;
    mutable std::shared_ptr<Vector> sv_;  // lazily computed singular values
    const Vector& singular_values_cached() const;
};

/// A subspace given by an orthonormal basis (columns).
class Subspace {
public:
    Subspace(int ambient_dim, Matrix basis);
    static Subspace full(int ambient_dim);

    int ambient_dim() const { return ambient_dim_; }
    int dim() const { return basis_.cols(); }
    const Matrix& basis() const { return basis_; }

private:
    int ambient_dim_;
    Matrix basis_;
};

/// |v|_T = sqrt((Tv, v)), clamped against roundoff negatives.
double seminorm(const SymOperator& t, const Vector& v);

/// |S|_T = sup over the T-unit sphere of |Sv|_T, via the symmetric pencil
/// (P^t S^t T S P, P^t T P) with P an orthonormal basis of R(T).
/// Precondition: T S maps N(T) into N(T).
double operator_seminorm(const Matrix& s, const SymOperator& t);

struct RangeNullSplit {
    Subspace range;
    Subspace null_space;
    LinearMap q;  // rank x dim, rows form an orthonormal basis of R(A)
};
RangeNullSplit range_null_split(const SymOperator& a);

struct PencilExtremes {
    double lambda_min;
    double lambda_max;
};
/// Extreme generalized eigenvalues of (P^t M P, P^t T P), P = restriction basis.
PencilExtremes pencil_extremes(const SymOperator& m, const SymOperator& t,
                               const Subspace& restriction);

}  // namespace asv
