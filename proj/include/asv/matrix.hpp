#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace asv {

using Vector = std::vector<double>;

// Vector helpers.
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
Vector& axpy(double alpha, const Vector& x, Vector& y);  // y += alpha*x
Vector scaled(const Vector& x, double alpha);
Vector operator+(const Vector& a, const Vector& b);
Vector operator-(const Vector& a, const Vector& b);

/// Dense real matrix, row-major.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols);  // zero-filled
    Matrix(int rows, int cols, std::vector<double> data);

    static Matrix identity(int n);
    static Matrix diagonal(const Vector& d);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    const double* row(int i) const { return data_.data() + static_cast<std::size_t>(i) * cols_; }
    double* row(int i) { return data_.data() + static_cast<std::size_t>(i) * cols_; }

    const std::vector<double>& data() const { return data_; }

    Matrix transpose() const;
    Vector apply(const Vector& x) const;            // A x
    Vector apply_transpose(const Vector& x) const;  // A^t x
    Vector column(int j) const;
    void set_column(int j, const Vector& v);

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

    double frobenius_norm() const;
    double max_abs() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

/// LU factorization with partial pivoting.
struct LuFactors {
    Matrix lu;
    std::vector<int> perm;
};

LuFactors lu_factor(const Matrix& a);  // throws std::runtime_error on singularity
Vector lu_solve(const LuFactors& f, const Vector& b);
Matrix lu_solve(const LuFactors& f, const Matrix& b);
Matrix invert(const Matrix& a);

/// Cholesky factor (lower triangular) of an SPD matrix; nullopt if a pivot fails.
std::optional<Matrix> cholesky(const Matrix& a);
Vector cholesky_solve(const Matrix& l, const Vector& b);

// Plain-text round-trip: first line "rows cols", then row-major entries
// with 17 significant digits.
void save_matrix(std::ostream& os, const Matrix& m);
Matrix load_matrix(std::istream& is);
void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

}  // namespace asv
