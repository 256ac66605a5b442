#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rogo {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Entry (r, c) lives at data[r * cols + c].
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    /// Builds a matrix whose columns are the given vectors (all of length `rows`).
    static Matrix from_columns(std::size_t rows, std::span<const Vector> columns);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    Vector col(std::size_t c) const;
    void set_col(std::size_t c, std::span<const double> v);

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    const std::vector<double>& values() const noexcept { return data_; }

    Matrix transpose() const;
    /// Columns [first, first + count).
    Matrix col_range(std::size_t first, std::size_t count) const;
    /// Appends the columns of `other` on the right.
    Matrix hcat(const Matrix& other) const;
    /// Stacks `other` below this matrix.
    Matrix vcat(const Matrix& other) const;

    bool all_finite() const noexcept;
    double max_abs() const noexcept;
    double frobenius() const noexcept;

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(double s) noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

/// A * B, A^T * B and A * B^T. Dispatch to the OpenMP kernels.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, std::span<const double> x);
Vector matvec_t(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
bool all_finite(std::span<const double> v);

struct ToleranceConfig {
    double rank_tol = 1e-10;
    double orthonorm_tol = 1e-8;
    double angle_tol = 1e-9;

    /// Throws InvalidInput unless every tolerance is strictly positive.
    void validate() const;

    friend bool operator==(const ToleranceConfig&, const ToleranceConfig&) = default;
};

/// Modified Gram-Schmidt with one re-orthogonalization pass. Columns whose
/// residual falls below rank_tol times the largest input column norm are dropped.
Matrix orthonormalize(const Matrix& m, const ToleranceConfig& tol = {});

struct SvdResult {
    Matrix left;       // rows x k
    Vector singular;   // k = min(rows, cols), non-increasing
    Matrix right;      // cols x k
};

/// Thin SVD. Sign convention: the largest-magnitude entry of every right
/// singular vector is non-negative (ties go to the lowest index).
SvdResult svd(const Matrix& m);

/// Smallest k with sum_{i<k} s_i^2 >= epsilon * sum_i s_i^2.
std::size_t energy_rank(std::span<const double> singular, double epsilon);

/// max_ij |B^T B - I|
double orthonormality_error(const Matrix& basis);

}  // namespace rogo
