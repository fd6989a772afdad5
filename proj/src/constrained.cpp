#include "asv/constrained.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace asv {

ConstrainedQuadraticForm::ConstrainedQuadraticForm(Matrix m, Matrix c)
    : m_(std::move(m)), c_(std::move(c)) {
    if (m_.rows() != m_.cols() || m_.rows() != c_.cols())
        throw std::invalid_argument("ConstrainedQuadraticForm: shape mismatch");
    const int k = c_.cols();
    const int r = c_.rows();
    if (r > k) throw std::invalid_argument("ConstrainedQuadraticForm: C cannot be surjective");

    // null(C) from the spectral decomposition of C^t C.
    const SymOperator gram{c_.transpose() * c_};
    if (gram.dim() - gram.rank() != k - r)
        throw std::runtime_error("ConstrainedQuadraticForm: C is not surjective");
    const Matrix n = gram.null_basis();  // k x (k - r)

    // Minimum-norm lift w0(v) = C^t (C C^t)^{-1} v.
    const SymOperator cct{c_ * c_.transpose()};
    const Matrix lift = c_.transpose() * cct.inverse();  // k x r

    // Reduced problem over z: (N^t M N) z = -N^t M w0. The reduced Hessian is
    // semi-SPD and the system is consistent, so the pseudo-solve is exact.
    Matrix wstar = lift;
    if (n.cols() > 0) {
        const SymOperator h{n.transpose() * m_ * n};
        const Matrix g = n.transpose() * m_ * lift;
        const Matrix z = h.pseudo_inverse() * g;  // (k - r) x r
        wstar = lift - n * z;
    }
    minimizer_map_ = wstar;
    Matrix s = wstar.transpose() * m_ * wstar;
    for (int i = 0; i < s.rows(); ++i)
        for (int j = i + 1; j < s.cols(); ++j) {
            const double v = 0.5 * (s(i, j) + s(j, i));
            s(i, j) = v;
            s(j, i) = v;
        }
    schur_form_ = std::move(s);
}

double ConstrainedQuadraticForm::value(const Vector& v) const {
    return dot(schur_form_.apply(v), v);
}

ConstrainedMin constrained_inf(const SymOperator& bt, const LinearMap& c, const Vector& v) {
    if (static_cast<int>(v.size()) != c.rows())
        throw std::invalid_argument("constrained_inf: dimension mismatch");
    if (bt.dim() != c.cols()) throw std::invalid_argument("constrained_inf: shape mismatch");
    if (!bt.is_spd()) throw std::runtime_error("constrained_inf: Bt is not SPD");
    if (!c.is_surjective()) throw std::runtime_error("constrained_inf: C is not surjective");
    const ConstrainedQuadraticForm form(bt.inverse(), c.entries());
    return ConstrainedMin{form.value(v), form.minimizer(v)};
}

}  // namespace asv
