#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>

#include "rogo/linalg.hpp"

namespace rogo {

/// A linear subspace of R^ambient held as an orthonormal basis (one column
/// per direction). Immutable once built; dim() may be zero.
class Subspace {
public:
    Subspace() = default;
    /// The zero-dimensional subspace of R^ambient.
    explicit Subspace(std::size_t ambient) : basis_(ambient, 0) {}

    /// Adopts `basis` as-is after checking orthonormality within tol.orthonorm_tol.
    static Subspace from_orthonormal(Matrix basis, const ToleranceConfig& tol = {});
    /// span of the columns of `m` (orthonormalized, rank-deficient columns dropped).
    static Subspace span_of(const Matrix& m, const ToleranceConfig& tol = {});

    std::size_t ambient_dim() const noexcept { return basis_.rows(); }
    std::size_t dim() const noexcept { return basis_.cols(); }
    bool empty() const noexcept { return basis_.cols() == 0; }
    const Matrix& basis() const noexcept { return basis_; }

    /// B B^T as a dense ambient x ambient matrix.
    Matrix projector() const;

private:
    explicit Subspace(Matrix basis, int) : basis_(std::move(basis)) {}
    Matrix basis_;
};

/// B B^T v.
Vector project(std::span<const double> v, const Subspace& s);

/// Minimum angle between v and any unit vector of s: arccos(|B B^T v| / |v|),
/// clamped to [0, pi/2]. The empty subspace is at pi/2 from everything.
double angle(std::span<const double> v, const Subspace& s);

/// Cosine of angle(v, s), computed without the arccos round trip.
double cos_angle(std::span<const double> v, const Subspace& s);

/// span(U u R). U's columns are kept verbatim and in order; R's columns are
/// orthogonalized against them and the surviving directions appended.
Subspace extend(const Subspace& u, const Subspace& r, const ToleranceConfig& tol = {});

/// U minus V: U's basis orthogonalized against V and re-orthonormalized.
/// Assumes V is (numerically) contained in U.
Subspace complement_within(const Subspace& u, const Subspace& v, const ToleranceConfig& tol = {});

/// Top-k left singular subspace of the sample matrix (columns are samples),
/// k = energy_rank(singular, epsilon), never above the numerical rank.
Subspace extract_representation_space(const Matrix& samples, double epsilon,
                                      const ToleranceConfig& tol = {});

/// Given unit v orthogonal to nonempty U, returns cos(theta) u0 + sin(theta) v
/// where u0 is U's first basis column, so that angle(result, U) = theta.
Vector oblique_combine(std::span<const double> v, const Subspace& u, double theta,
                       const ToleranceConfig& tol = {});

/// Binary dump: u8 version tag, u64 ambient, u64 dim, then the basis as
/// little-endian doubles in row-major order.
inline constexpr std::uint8_t kSubspaceFormatVersion = 1;
void write_subspace(std::ostream& os, const Subspace& s);
Subspace read_subspace(std::istream& is);

}  // namespace rogo
