#include "asv/matrix.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace asv {

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

Vector& axpy(double alpha, const Vector& x, Vector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
    return y;
}

Vector scaled(const Vector& x, double alpha) {
    Vector r(x);
    for (double& v : r) v *= alpha;
    return r;
}

Vector operator+(const Vector& a, const Vector& b) {
    Vector r(a);
    axpy(1.0, b, r);
    return r;
}

Vector operator-(const Vector& a, const Vector& b) {
    Vector r(a);
    axpy(-1.0, b, r);
    return r;
}

Matrix::Matrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
}

Matrix::Matrix(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(rows) * cols)
        throw std::invalid_argument("Matrix: data size mismatch");
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(const Vector& d) {
    Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Vector Matrix::apply(const Vector& x) const {
    if (static_cast<int>(x.size()) != cols_) throw std::invalid_argument("apply: size mismatch");
    Vector y(rows_, 0.0);
    for (int i = 0; i < rows_; ++i) {
        const double* r = row(i);
        double s = 0.0;
        for (int j = 0; j < cols_; ++j) s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

Vector Matrix::apply_transpose(const Vector& x) const {
    if (static_cast<int>(x.size()) != rows_)
        throw std::invalid_argument("apply_transpose: size mismatch");
    Vector y(cols_, 0.0);
    for (int i = 0; i < rows_; ++i) {
        const double* r = row(i);
        const double xi = x[i];
        for (int j = 0; j < cols_; ++j) y[j] += r[j] * xi;
    }
    return y;
}

Vector Matrix::column(int j) const {
    Vector c(rows_);
    for (int i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
}

void Matrix::set_column(int j, const Vector& v) {
    if (static_cast<int>(v.size()) != rows_) throw std::invalid_argument("set_column: size mismatch");
    for (int i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw std::invalid_argument("Matrix +=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw std::invalid_argument("Matrix -=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    Matrix r(a);
    r += b;
    return r;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    Matrix r(a);
    r -= b;
    return r;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("Matrix *: shape mismatch");
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b.row(k);
            for (int j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix r(a);
    r *= s;
    return r;
}

LuFactors lu_factor(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("lu_factor: square matrix required");
    const int n = a.rows();
    LuFactors f{a, std::vector<int>(n)};
    for (int i = 0; i < n; ++i) f.perm[i] = i;
    Matrix& m = f.lu;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(m(k, k));
        for (int i = k + 1; i < n; ++i) {
            const double v = std::abs(m(i, k));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best == 0.0) throw std::runtime_error("lu_factor: singular matrix");
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
            std::swap(f.perm[k], f.perm[piv]);
        }
        const double d = m(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double l = m(i, k) / d;
            m(i, k) = l;
            if (l == 0.0) continue;
            for (int j = k + 1; j < n; ++j) m(i, j) -= l * m(k, j);
        }
    }
    return f;
}

Vector lu_solve(const LuFactors& f, const Vector& b) {
    const int n = f.lu.rows();
    if (static_cast<int>(b.size()) != n) throw std::invalid_argument("lu_solve: size mismatch");
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = b[f.perm[i]];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j) x[i] -= f.lu(i, j) * x[j];
        x[i] /= f.lu(i, i);
    }
    return x;
}

Matrix lu_solve(const LuFactors& f, const Matrix& b) {
    Matrix x(b.rows(), b.cols());
    for (int j = 0; j < b.cols(); ++j) x.set_column(j, lu_solve(f, b.column(j)));
    return x;
}

Matrix invert(const Matrix& a) { return lu_solve(lu_factor(a), Matrix::identity(a.rows())); }

std::optional<Matrix> cholesky(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("cholesky: square matrix required");
    const int n = a.rows();
    Matrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double* li = l.row(i);
            const double* lj = l.row(j);
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= li[k] * lj[k];
            if (i == j) {
                if (s <= 0.0) return std::nullopt;
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

Vector cholesky_solve(const Matrix& l, const Vector& b) {
    const int n = l.rows();
    Vector x(b);
    for (int i = 0; i < n; ++i) {
        const double* li = l.row(i);
        double s = x[i];
        for (int j = 0; j < i; ++j) s -= li[j] * x[j];
        x[i] = s / li[i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int j = i + 1; j < n; ++j) s -= l(j, i) * x[j];
        x[i] = s / l(i, i);
    }
    return x;
}

void save_matrix(std::ostream& os, const Matrix& m) {
    os << m.rows() << " " << m.cols() << "\n";
    char buf[64];
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            os << buf << (j + 1 == m.cols() ? "" : " ");
        }
        os << "\n";
    }
}

Matrix load_matrix(std::istream& is) {
    int rows = 0;
    int cols = 0;
    if (!(is >> rows >> cols) || rows < 0 || cols < 0)
        throw std::runtime_error("load_matrix: bad header");
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (!(is >> m(i, j))) throw std::runtime_error("load_matrix: truncated entries");
    return m;
}

void save_matrix(const std::string& path, const Matrix& m) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_matrix: cannot open " + path);
    save_matrix(os, m);
}

Matrix load_matrix(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_matrix: cannot open " + path);
    return load_matrix(is);
}

}  // namespace asv
