#include "rogo/subspace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "rogo/errors.hpp"
#include "rogo/serialize.hpp"

namespace rogo {

Subspace Subspace::from_orthonormal(Matrix basis, const ToleranceConfig& tol) {
    if (!basis.all_finite()) throw InvalidInput("Subspace: non-finite basis");
    if (basis.cols() > basis.rows()) throw InvalidInput("Subspace: more columns than ambient dim");
    if (basis.cols() > 0) {
        const double err = orthonormality_error(basis);
        if (err >= tol.orthonorm_tol)
            throw InvalidInput("Subspace: basis not orthonormal (max |B^T B - I| = " +
                               std::to_string(err) + ")");
    }
    return Subspace(std::move(basis), 0);
}

Subspace Subspace::span_of(const Matrix& m, const ToleranceConfig& tol) {
    return Subspace(orthonormalize(m, tol), 0);
}

Matrix Subspace::projector() const { return matmul_nt(basis_, basis_); }

Vector project(std::span<const double> v, const Subspace& s) {
    if (v.size() != s.ambient_dim())
        throw InvalidInput("project: vector length " + std::to_string(v.size()) +
                           " vs ambient " + std::to_string(s.ambient_dim()));
    const Vector coeff = matvec_t(s.basis(), v);
    return matvec(s.basis(), coeff);
}

double cos_angle(std::span<const double> v, const Subspace& s) {
    if (v.size() != s.ambient_dim()) throw InvalidInput("angle: dimension mismatch");
    const double n = norm(v);
    if (n == 0.0) throw InvalidInput("angle: zero vector");
    if (s.empty()) return 0.0;
    // |B B^T v| = |B^T v| for orthonormal B.
    const Vector coeff = matvec_t(s.basis(), v);
    return std::clamp(norm(coeff) / n, 0.0, 1.0);
}

double angle(std::span<const double> v, const Subspace& s) {
    return std::acos(cos_angle(v, s));
}

Subspace extend(const Subspace& u, const Subspace& r, const ToleranceConfig& tol) {
    if (u.ambient_dim() != r.ambient_dim()) throw InvalidInput("extend: ambient mismatch");
    if (r.empty()) return u;
    if (u.empty()) return r;
    const std::size_t n = u.ambient_dim();
    const Matrix& bu = u.basis();
    Matrix residual = r.basis();
    for (int pass = 0; pass < 2; ++pass) {
        // residual -= B_U (B_U^T residual)
        residual -= matmul(bu, matmul_tn(bu, residual));
    }
    // R's columns are unit length, so rank_tol is relative to 1. Re-run
    // Gram-Schmidt among the residuals with an absolute cutoff.
    std::vector<Vector> kept;
    const double cutoff = std::max(tol.rank_tol, 1e-8);
    for (std::size_t c = 0; c < residual.cols(); ++c) {
        Vector v = residual.col(c);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : kept) {
                const double p = dot(q, v);
                for (std::size_t i = 0; i < n; ++i) v[i] -= p * q[i];
            }
            for (std::size_t j = 0; j < bu.cols(); ++j) {
                double p = 0.0;
                for (std::size_t i = 0; i < n; ++i) p += bu(i, j) * v[i];
                for (std::size_t i = 0; i < n; ++i) v[i] -= p * bu(i, j);
            }
        }
        const double nv = norm(v);
        if (nv <= cutoff) continue;
        for (double& x : v) x /= nv;
        kept.push_back(std::move(v));
    }
    if (kept.empty()) return u;
    return Subspace::from_orthonormal(bu.hcat(Matrix::from_columns(n, kept)), tol);
}

Subspace complement_within(const Subspace& u, const Subspace& v, const ToleranceConfig& tol) {
    if (u.ambient_dim() != v.ambient_dim())
        throw InvalidInput("complement_within: ambient mismatch");
    if (v.empty() || u.empty()) return u;
    const Matrix& bv = v.basis();
    Matrix residual = u.basis();
    for (int pass = 0; pass < 2; ++pass) residual -= matmul(bv, matmul_tn(bv, residual));
    // U's columns are unit vectors; a direction fully inside V leaves ~eps.
    ToleranceConfig local = tol;
    local.rank_tol = std::max(tol.rank_tol, 1e-8);
    std::vector<Vector> kept;
    const std::size_t n = u.ambient_dim();
    for (std::size_t c = 0; c < residual.cols(); ++c) {
        Vector w = residual.col(c);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : kept) {
                const double p = dot(q, w);
                for (std::size_t i = 0; i < n; ++i) w[i] -= p * q[i];
            }
            const Vector coeff = matvec_t(bv, w);
            const Vector back = matvec(bv, coeff);
            for (std::size_t i = 0; i < n; ++i) w[i] -= back[i];
        }
        const double nw = norm(w);
        if (nw <= local.rank_tol) continue;
        for (double& x : w) x /= nw;
        kept.push_back(std::move(w));
    }
    // dim(U \ V) = dim U - dim V when V is inside U; the cutoff above can
    // only keep extra near-dependent residuals if V leaks out of U.
    const std::size_t expected = u.dim() >= v.dim() ? u.dim() - v.dim() : 0;
    if (kept.size() > expected) kept.resize(expected);
    if (kept.empty()) return Subspace(n);
    return Subspace::from_orthonormal(Matrix::from_columns(n, kept), tol);
}

Subspace extract_representation_space(const Matrix& samples, double epsilon,
                                      const ToleranceConfig& tol) {
    if (samples.cols() == 0 || samples.max_abs() == 0.0)
        throw InvalidInput("extract_representation_space: all-zero samples");
    const SvdResult d = svd(samples);
    std::size_t k = energy_rank(d.singular, epsilon);
    std::size_t numerical_rank = 0;
    for (double s : d.singular)
        if (s > tol.rank_tol * d.singular.front()) ++numerical_rank;
    k = std::min(k, numerical_rank);
    // Re-orthonormalize to wash out SVD roundoff before the strict basis check.
    return Subspace::span_of(d.left.col_range(0, k), tol);
}

Vector oblique_combine(std::span<const double> v, const Subspace& u, double theta,
                       const ToleranceConfig& tol) {
    if (u.empty()) throw EmptySpaceError("oblique_combine: U is empty");
    if (v.size() != u.ambient_dim()) throw InvalidInput("oblique_combine: dimension mismatch");
    if (!(theta >= 0.0 && theta <= std::numbers::pi / 2 + tol.angle_tol))
        throw InvalidInput("oblique_combine: theta outside [0, pi/2]");
    if (std::abs(norm(v) - 1.0) > 1e-9) throw PreconditionError("oblique_combine: v not unit");
    if (cos_angle(v, u) > std::sin(tol.angle_tol) + 1e-12)
        throw PreconditionError("oblique_combine: v is not orthogonal to U");
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = c * u.basis()(i, 0) + s * v[i];
    return out;
}

void write_subspace(std::ostream& os, const Subspace& s) {
    io::write_u8(os, kSubspaceFormatVersion);
    io::write_u64(os, s.ambient_dim());
    io::write_u64(os, s.dim());
    io::write_doubles(os, s.basis().values());
}

Subspace read_subspace(std::istream& is) {
    const auto tag = io::read_u8(is);
    if (tag != kSubspaceFormatVersion)
        throw FormatError("subspace: unsupported version tag " + std::to_string(tag), 0);
    const auto ambient = io::read_u64(is);
    const auto dim = io::read_u64(is);
    if (dim > ambient) throw FormatError("subspace: dim exceeds ambient", 9);
    std::vector<double> data(ambient * dim);
    io::read_doubles(is, data);
    return Subspace::from_orthonormal(Matrix(ambient, dim, std::move(data)));
}

}  // namespace rogo
