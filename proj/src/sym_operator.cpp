#include "asv/sym_operator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace asv {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
}

SymOperator::SymOperator(Matrix m, std::optional<double> null_threshold)
    : m_(std::move(m)), tau_override_(null_threshold), cache_(std::make_shared<Cache>()) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("SymOperator: square matrix required");
    if (m_.rows() == 0) throw std::invalid_argument("SymOperator: positive dimension required");
    for (int i = 0; i < m_.rows(); ++i)
        for (int j = i + 1; j < m_.cols(); ++j) {
            const double v = 0.5 * (m_(i, j) + m_(j, i));
            m_(i, j) = v;
            m_(j, i) = v;
        }
}

const SymOperator::Spectral& SymOperator::spectral() const {
    std::call_once(cache_->flag, [this] {
        Spectral s;
        s.eig = eig_sym(m_);
        s.lambda_max = 0.0;
        for (double lam : s.eig.values) s.lambda_max = std::max(s.lambda_max, std::abs(lam));
        s.tau_null = tau_override_ ? *tau_override_
                                   : dim() * kEps * std::max(1.0, s.lambda_max);
        s.rank = 0;
        for (double lam : s.eig.values)
            if (std::abs(lam) > s.tau_null) ++s.rank;
        cache_->data = std::move(s);
    });
    return cache_->data;
}

bool SymOperator::is_semi_spd() const {
    const Spectral& s = spectral();
    for (double lam : s.eig.values)
        if (lam < -s.tau_null) return false;
    return true;
}

bool SymOperator::is_spd() const {
    const Spectral& s = spectral();
    for (double lam : s.eig.values)
        if (lam <= s.tau_null) return false;
    return true;
}

bool SymOperator::is_zero() const { return rank() == 0; }

Matrix SymOperator::range_basis() const {
    const Spectral& s = spectral();
    Matrix b(dim(), s.rank);
    int c = 0;
    for (int k = 0; k < dim(); ++k)
        if (std::abs(s.eig.values[k]) > s.tau_null) b.set_column(c++, s.eig.vectors.column(k));
    return b;
}

Matrix SymOperator::null_basis() const {
    const Spectral& s = spectral();
    Matrix b(dim(), dim() - s.rank);
    int c = 0;
    for (int k = 0; k < dim(); ++k)
        if (std::abs(s.eig.values[k]) <= s.tau_null) b.set_column(c++, s.eig.vectors.column(k));
    return b;
}

Vector SymOperator::pseudo_solve(const Vector& b) const {
    const Spectral& s = spectral();
    if (static_cast<int>(b.size()) != dim())
        throw std::invalid_argument("pseudo_solve: size mismatch");
    Vector x(dim(), 0.0);
    for (int k = 0; k < dim(); ++k) {
        if (std::abs(s.eig.values[k]) <= s.tau_null) continue;
        const Vector uk = s.eig.vectors.column(k);
        const double c = dot(uk, b) / s.eig.values[k];
        axpy(c, uk, x);
    }
    return x;
}

Matrix SymOperator::pseudo_inverse() const {
    const Spectral& s = spectral();
    Matrix p(dim(), dim());
    for (int k = 0; k < dim(); ++k) {
        if (std::abs(s.eig.values[k]) <= s.tau_null) continue;
        const Vector uk = s.eig.vectors.column(k);
        const double inv = 1.0 / s.eig.values[k];
        for (int i = 0; i < dim(); ++i)
            for (int j = 0; j < dim(); ++j) p(i, j) += inv * uk[i] * uk[j];
    }
    return p;
}

Matrix SymOperator::inverse() const {
    if (!is_spd()) throw std::runtime_error("SymOperator::inverse: operator is not SPD");
    return pseudo_inverse();
}

LinearMap::LinearMap(Matrix m) : m_(std::move(m)) {
    if (m_.rows() <= 0 || m_.cols() <= 0)
        throw std::invalid_argument("LinearMap: positive dimensions required");
}

const Vector& LinearMap::singular_values_cached() const {
    if (!sv_) sv_ = std::make_shared<Vector>(singular_values(m_));
    return *sv_;
}

double LinearMap::sigma_max() const {
    const Vector& sv = singular_values_cached();
    return sv.empty() ? 0.0 : sv.front();
}

bool LinearMap::is_surjective() const {
    const Vector& sv = singular_values_cached();
    if (rows() > cols()) return false;
    const double tau = std::max(rows(), cols()) * kEps * sigma_max();
    int rank = 0;
    for (double s : sv)
        if (s > tau) ++rank;
    return rank == rows();
}

Subspace::Subspace(int ambient_dim, Matrix basis)
    : ambient_dim_(ambient_dim), basis_(std::move(basis)) {
    if (basis_.rows() != ambient_dim)
        throw std::invalid_argument("Subspace: basis rows must equal ambient dimension");
    if (basis_.cols() > ambient_dim)
        throw std::invalid_argument("Subspace: more basis vectors than ambient dimension");
    const Matrix gram = basis_.transpose() * basis_;
    const Matrix err = gram - Matrix::identity(basis_.cols());
    if (err.max_abs() > 1e-12)
        throw std::invalid_argument("Subspace: basis is not orthonormal");
}

Subspace Subspace::full(int ambient_dim) { return Subspace(ambient_dim, Matrix::identity(ambient_dim)); }

double seminorm(const SymOperator& t, const Vector& v) {
    if (static_cast<int>(v.size()) != t.dim())
        throw std::invalid_argument("seminorm: dimension mismatch");
    if (!t.is_semi_spd()) throw std::runtime_error("seminorm: operator is not semi-SPD");
    const double q = dot(t.apply(v), v);
    return std::sqrt(std::max(0.0, q));
}

double operator_seminorm(const Matrix& s, const SymOperator& t) {
    if (s.rows() != s.cols() || s.rows() != t.dim())
        throw std::invalid_argument("operator_seminorm: shape mismatch");
    if (t.is_zero()) return 0.0;  // zero operator convention
    // Well-definedness on representatives: T S must annihilate N(T).
    const Matrix nb = t.null_basis();
    for (int j = 0; j < nb.cols(); ++j) {
        const Vector tsn = t.apply(s.apply(nb.column(j)));
        if (norm2(tsn) > 100.0 * t.null_threshold() * std::max(1.0, s.max_abs()))
            throw std::runtime_error("operator_seminorm: S does not preserve N(T)");
    }
    const Matrix p = t.range_basis();
    const Matrix sp = s * p;
    const Matrix lhs = sp.transpose() * t.entries() * sp;
    const Matrix rhs = p.transpose() * t.entries() * p;
    const Vector ev = eig_pencil(lhs, rhs);
    return std::sqrt(std::max(0.0, ev.front()));
}

RangeNullSplit range_null_split(const SymOperator& a) {
    if (!a.is_semi_spd()) throw std::runtime_error("range_null_split: operator is not semi-SPD");
    const Matrix rb = a.range_basis();
    const Matrix nb = a.null_basis();
    return RangeNullSplit{Subspace(a.dim(), rb), Subspace(a.dim(), nb), LinearMap(rb.transpose())};
}

PencilExtremes pencil_extremes(const SymOperator& m, const SymOperator& t,
                               const Subspace& restriction) {
    if (m.dim() != t.dim() || restriction.ambient_dim() != t.dim())
        throw std::invalid_argument("pencil_extremes: shape mismatch");
    const Matrix& p = restriction.basis();
    const Matrix mp = p.transpose() * m.entries() * p;
    const Matrix tp = p.transpose() * t.entries() * p;
    const Vector ev = eig_pencil(mp, tp);
    return PencilExtremes{ev.back(), ev.front()};
}

}  // namespace asv
