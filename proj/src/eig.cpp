#include "asv/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace asv {

namespace {

double off_diagonal_norm(const Matrix& s) {
    double sum = 0.0;
    for (int i = 0; i < s.rows(); ++i)
        for (int j = 0; j < s.cols(); ++j)
            if (i != j) sum += s(i, j) * s(i, j);
    return std::sqrt(sum);
}

void sort_pairs_descending(EigenSym& e) {
    const int n = static_cast<int>(e.values.size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return e.values[a] > e.values[b]; });
    Vector vals(n);
    Matrix vecs(n, n);
    for (int k = 0; k < n; ++k) {
        vals[k] = e.values[idx[k]];
        vecs.set_column(k, e.vectors.column(idx[k]));
    }
    e.values = std::move(vals);
    e.vectors = std::move(vecs);
}

}  // namespace

EigenSym eig_sym(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("eig_sym: square matrix required");
    const int n = m.rows();
    Matrix s = m;
    // Work on the symmetric part; callers are expected to pass symmetric input.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = 0.5 * (s(i, j) + s(j, i));
            s(i, j) = v;
            s(j, i) = v;
        }
    Matrix v = Matrix::identity(n);
    const double tol = 1e-14 * std::max(s.frobenius_norm(), 1e-300);
    const int max_sweeps = 50;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_diagonal_norm(s) <= tol) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = s(p, q);
                if (apq == 0.0) continue;
                const double app = s(p, p);
                const double aqq = s(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0)
                                     ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * c;
                for (int k = 0; k < n; ++k) {
                    const double skp = s(k, p);
                    const double skq = s(k, q);
                    s(k, p) = c * skp - sn * skq;
                    s(k, q) = sn * skp + c * skq;
                }
                for (int k = 0; k < n; ++k) {
                    const double spk = s(p, k);
                    const double sqk = s(q, k);
                    s(p, k) = c * spk - sn * sqk;
                    s(q, k) = sn * spk + c * sqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    EigenSym e;
    e.values.resize(n);
    for (int i = 0; i < n; ++i) e.values[i] = s(i, i);
    e.vectors = std::move(v);
    sort_pairs_descending(e);
    return e;
}

Vector singular_values(const Matrix& m) {
    // One-sided Jacobi on the thinner orientation: orthogonalize columns,
    // singular values are the resulting column norms.
    Matrix a = (m.rows() >= m.cols()) ? m : m.transpose();
    const int n = a.cols();
    const int rows = a.rows();
    const double tol = 1e-15;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (int i = 0; i < rows; ++i) {
                    const double ap = a(i, p);
                    const double aq = a(i, q);
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                if (std::abs(gamma) <= tol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0)
                                     ? 1.0 / (zeta + std::sqrt(1.0 + zeta * zeta))
                                     : 1.0 / (zeta - std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < rows; ++i) {
                    const double ap = a(i, p);
                    const double aq = a(i, q);
                    a(i, p) = c * ap - s * aq;
                    a(i, q) = s * ap + c * aq;
                }
            }
        }
        if (!rotated) break;
    }
    Vector sv(n);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < rows; ++i) s += a(i, j) * a(i, j);
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

Vector eig_pencil(const Matrix& m, const Matrix& t) {
    if (m.rows() != m.cols() || t.rows() != t.cols() || m.rows() != t.rows())
        throw std::invalid_argument("eig_pencil: shape mismatch");
    const EigenSym et = eig_sym(t);
    const int n = t.rows();
    const double lmax = et.values.empty() ? 0.0 : std::abs(et.values.front());
    for (double lam : et.values)
        if (lam <= 1e-13 * std::max(1.0, lmax))
            throw std::runtime_error("eig_pencil: T is not SPD on the given space");
    // W = T^{-1/2}
    Matrix w(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k)
                s += et.vectors(i, k) * et.vectors(j, k) / std::sqrt(et.values[k]);
            w(i, j) = s;
        }
    return eig_sym(w * m * w).values;
}

double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius: square matrix required");
    if (m.rows() == 0) return 0.0;
    Matrix x = m;
    double log_rho = 0.0;
    double weight = 1.0;
    for (int k = 0; k < 60; ++k) {
        const double a = x.frobenius_norm();
        if (a == 0.0) return 0.0;
        log_rho += weight * std::log(a);
        if (log_rho * 1.0 < -700.0) return 0.0;  // underflow of the estimate
        weight *= 0.5;
        x *= 1.0 / a;
        x = x * x;
    }
    return std::exp(log_rho);
}

}  // namespace asv
