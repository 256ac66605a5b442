#include "rogo/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rogo/errors.hpp"
#include "rogo/kernels.hpp"

namespace rogo {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw InvalidInput("Matrix: data length " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw InvalidInput("Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_columns(std::size_t rows, std::span<const Vector> columns) {
    Matrix m(rows, columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) m.set_col(c, columns[c]);
    return m;
}

Vector Matrix::col(std::size_t c) const {
    Vector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
}

void Matrix::set_col(std::size_t c, std::span<const double> v) {
    if (v.size() != rows_ || c >= cols_) throw InvalidInput("Matrix::set_col: shape mismatch");
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix Matrix::col_range(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw InvalidInput("Matrix::col_range: out of range");
    Matrix m(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
        std::copy_n(data_.data() + r * cols_ + first, count, m.data() + r * count);
    return m;
}

Matrix Matrix::hcat(const Matrix& other) const {
    if (cols_ == 0 && rows_ == 0) return other;
    if (other.rows_ != rows_) throw InvalidInput("Matrix::hcat: row count mismatch");
    Matrix m(rows_, cols_ + other.cols_);
    for (std::size_t r = 0; r < rows_; ++r) {
        std::copy_n(data_.data() + r * cols_, cols_, m.data() + r * m.cols_);
        std::copy_n(other.data_.data() + r * other.cols_, other.cols_,
                    m.data() + r * m.cols_ + cols_);
    }
    return m;
}

Matrix Matrix::vcat(const Matrix& other) const {
    if (rows_ == 0 && cols_ == 0) return other;
    if (other.cols_ != cols_) throw InvalidInput("Matrix::vcat: column count mismatch");
    Matrix m(rows_ + other.rows_, cols_);
    std::copy(data_.begin(), data_.end(), m.data_.begin());
    std::copy(other.data_.begin(), other.data_.end(), m.data_.begin() + data_.size());
    return m;
}

bool Matrix::all_finite() const noexcept { return rogo::all_finite(data_); }

double Matrix::max_abs() const noexcept {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
}

double Matrix::frobenius() const noexcept { return norm(data_); }

Matrix& Matrix::operator+=(const Matrix& o) {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw InvalidInput("Matrix +=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw InvalidInput("Matrix -=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
    for (double& x : data_) x *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw InvalidInput("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                           std::to_string(b.rows()));
    Matrix c(a.rows(), b.cols());
    kernels::gemm_nn(a.rows(), b.cols(), a.cols(), a.data(), b.data(), c.data());
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw InvalidInput("matmul_tn: row counts differ");
    Matrix c(a.cols(), b.cols());
    kernels::gemm_tn(a.cols(), b.cols(), a.rows(), a.data(), b.data(), c.data());
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw InvalidInput("matmul_nt: column counts differ");
    Matrix c(a.rows(), b.rows());
    kernels::gemm_nt(a.rows(), b.rows(), a.cols(), a.data(), b.data(), c.data());
    return c;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.cols()) throw InvalidInput("matvec: dimension mismatch");
    Vector y(a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) y[r] = dot(a.row(r), x);
    return y;
}

Vector matvec_t(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.rows()) throw InvalidInput("matvec_t: dimension mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto row = a.row(r);
        for (std::size_t c = 0; c < a.cols(); ++c) y[c] += x[r] * row[c];
    }
    return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void ToleranceConfig::validate() const {
    if (!(rank_tol > 0.0) || !(orthonorm_tol > 0.0) || !(angle_tol > 0.0))
        throw InvalidInput("ToleranceConfig: tolerances must be strictly positive");
}

Matrix orthonormalize(const Matrix& m, const ToleranceConfig& tol) {
    tol.validate();
    if (!m.all_finite()) throw InvalidInput("orthonormalize: non-finite entries");
    const std::size_t n = m.rows();
    double max_norm = 0.0;
    std::vector<Vector> cols;
    cols.reserve(m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) {
        cols.push_back(m.col(c));
        max_norm = std::max(max_norm, norm(cols.back()));
    }
    std::vector<Vector> basis;
    if (max_norm == 0.0) return Matrix(n, 0);
    const double cutoff = tol.rank_tol * max_norm;
    for (auto& v : cols) {
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) {
                const double p = dot(q, v);
                for (std::size_t i = 0; i < n; ++i) v[i] -= p * q[i];
            }
        }
        const double r = norm(v);
        if (r <= cutoff) continue;
        for (double& x : v) x /= r;
        basis.push_back(std::move(v));
    }
    return Matrix::from_columns(n, basis);
}

SvdResult svd(const Matrix& m) {
    if (!m.all_finite()) throw InvalidInput("svd: non-finite entries");
    const auto rows = static_cast<Eigen::Index>(m.rows());
    const auto cols = static_cast<Eigen::Index>(m.cols());
    const std::size_t k = std::min(m.rows(), m.cols());
    SvdResult out{Matrix(m.rows(), k), Vector(k, 0.0), Matrix(m.cols(), k)};
    if (k == 0) return out;

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> map(
        m.data(), rows, cols);
    Eigen::BDCSVD<Eigen::MatrixXd> solver(map, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (solver.info() != Eigen::Success) throw NumericalFailure("svd did not converge", 0);

    const Eigen::VectorXd& s = solver.singularValues();
    const Eigen::MatrixXd& u = solver.matrixU();
    const Eigen::MatrixXd& v = solver.matrixV();
    for (std::size_t j = 0; j < k; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        out.singular[j] = s(jj);
        std::size_t arg = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < cols; ++r) {
            const double a = std::abs(v(r, jj));
            if (a > best) {
                best = a;
                arg = static_cast<std::size_t>(r);
            }
        }
        const double sign = v(static_cast<Eigen::Index>(arg), jj) < 0.0 ? -1.0 : 1.0;
        for (Eigen::Index r = 0; r < cols; ++r)
            out.right(static_cast<std::size_t>(r), j) = sign * v(r, jj);
        for (Eigen::Index r = 0; r < rows; ++r)
            out.left(static_cast<std::size_t>(r), j) = sign * u(r, jj);
    }
    return out;
}

std::size_t energy_rank(std::span<const double> singular, double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw InvalidInput("energy_rank: epsilon must lie in (0, 1]");
    double total = 0.0;
    for (double s : singular) {
        if (!(s >= 0.0) || !std::isfinite(s))
            throw InvalidInput("energy_rank: singular values must be finite and non-negative");
        total += s * s;
    }
    if (total == 0.0) throw InvalidInput("energy_rank: all-zero spectrum");
    const double target = epsilon * total;
    double acc = 0.0;
    for (std::size_t k = 0; k < singular.size(); ++k) {
        acc += singular[k] * singular[k];
        if (acc >= target) return k + 1;
    }
    // Roundoff can leave acc a hair below target at epsilon = 1. Trailing
    // exact zeros carry no energy, so stop at the last nonzero value.
    std::size_t k = singular.size();
    while (k > 0 && singular[k - 1] == 0.0) --k;
    return k;
}

double orthonormality_error(const Matrix& basis) {
    const Matrix g = matmul_tn(basis, basis);
    double err = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j)
            err = std::max(err, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    return err;
}

}  // namespace rogo
