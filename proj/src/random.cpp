#include "asv/random.hpp"

#include <cmath>
#include <stdexcept>

namespace asv {

double Rng::uniform() {
    // 53-bit mantissa, uniform in [0, 1).
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int Rng::uniform_int(int lo, int hi) {
    const int span = hi - lo + 1;
    return lo + static_cast<int>(uniform() * span);
}

Vector random_vector(int n, Rng& rng) {
    Vector v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

Matrix random_matrix(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

SymOperator random_spd(int dim, Rng& rng, double shift) {
    const Matrix g = random_matrix(dim, dim, rng);
    Matrix m = g.transpose() * g;
    for (int i = 0; i < dim; ++i) m(i, i) += shift;
    return SymOperator{std::move(m)};
}

SymOperator random_semi_spd(int dim, int null_dim, Rng& rng) {
    if (null_dim < 0 || null_dim >= dim)
        throw std::invalid_argument("random_semi_spd: bad null dimension");
    const SymOperator spd = random_spd(dim, rng);
    const EigenSym eig{spd.eigenvalues(), spd.eigenvectors()};
    Matrix m(dim, dim);
    // Keep the dim - null_dim largest spectral directions.
    for (int k = 0; k < dim - null_dim; ++k) {
        const Vector u = eig.vectors.column(k);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) m(i, j) += eig.values[k] * u[i] * u[j];
    }
    return SymOperator{std::move(m)};
}

LinearMap random_surjective(int rows, int cols, Rng& rng) {
    if (rows > cols) throw std::invalid_argument("random_surjective: rows must not exceed cols");
    for (int attempt = 0; attempt < 20; ++attempt) {
        LinearMap pi{random_matrix(rows, cols, rng)};
        if (pi.is_surjective()) return pi;
    }
    throw std::runtime_error("random_surjective: failed to draw a surjective map");
}

Matrix random_convergent_smoother(const SymOperator& a, Rng& rng, bool symmetric) {
    const SymOperator m = random_spd(a.dim(), rng);
    Matrix base = m.inverse();
    if (!symmetric) {
        const Matrix g = random_matrix(a.dim(), a.dim(), rng);
        base += 0.1 * (g - g.transpose());
    }
    // Scale to put the preconditioned spectrum inside (0, 2) on R(A).
    const Matrix q = a.range_basis().transpose();
    double omega = 1.0;
    {
        const Matrix ba_q = q * (base * a.entries()) * q.transpose();
        const double rho = spectral_radius(ba_q);
        if (rho > 0.0) omega = 1.0 / rho;
    }
    for (int attempt = 0; attempt < 20; ++attempt) {
        const Matrix b = omega * base;
        const Matrix bt = b.transpose();
        const Matrix bbar = b + bt - bt * a.entries() * b;
        const SymOperator bbar_q{q * bbar * q.transpose()};
        if (bbar_q.is_spd()) return b;
        omega *= 0.5;
    }
    throw std::runtime_error("random_convergent_smoother: tuning failed");
}

Matrix dirichlet_laplacian_1d(int n) {
    Matrix a(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = 2.0;
        if (i > 0) a(i, i - 1) = -1.0;
        if (i + 1 < n) a(i, i + 1) = -1.0;
    }
    return a;
}

Matrix neumann_laplacian_1d(int n) {
    Matrix a = dirichlet_laplacian_1d(n);
    a(0, 0) = 1.0;
    a(n - 1, n - 1) = 1.0;
    return a;
}

}  // namespace asv
