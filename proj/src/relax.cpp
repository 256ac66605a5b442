#include "rogo/relax.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rogo/errors.hpp"

namespace rogo {

double RelaxConfig::zeta_for(std::size_t layer) const {
    if (zeta.empty()) throw InvalidInput("RelaxConfig: zeta list is empty");
    return zeta.size() == 1 ? zeta.front() : zeta.at(layer);
}

void RelaxConfig::validate() const {
    if (zeta.empty()) throw InvalidInput("RelaxConfig: zeta list is empty");
    for (double z : zeta)
        if (!(z > 0.0 && z <= 1.0)) throw InvalidInput("RelaxConfig: zeta must lie in (0, 1]");
    if (k_g < 1) throw InvalidInput("RelaxConfig: k_g must be >= 1");
    if (!(epsilon_g > 0.0 && epsilon_g <= 1.0))
        throw InvalidInput("RelaxConfig: epsilon_g must lie in (0, 1]");
    if (e_t < 1) throw InvalidInput("RelaxConfig: e_t must be >= 1");
    if (max_search_rounds < 1) throw InvalidInput("RelaxConfig: max_search_rounds must be >= 1");
    if (probe_batch < 1) throw InvalidInput("RelaxConfig: probe_batch must be >= 1");
}

namespace {

Subspace leading_right_space(const Matrix& stacked, std::size_t k_g, double epsilon_g,
                             const ToleranceConfig& tol) {
    const std::size_t ambient = stacked.cols();
    if (stacked.rows() == 0 || stacked.max_abs() == 0.0) return Subspace(ambient);
    const SvdResult d = svd(stacked);
    std::size_t numerical_rank = 0;
    for (double s : d.singular)
        if (s > tol.rank_tol * d.singular.front()) ++numerical_rank;
    const std::size_t k =
        std::min({k_g, energy_rank(d.singular, epsilon_g), numerical_rank});
    return Subspace::span_of(d.right.col_range(0, k), tol);
}

}  // namespace

Subspace gradient_rep_space(std::span<const Matrix> per_sample_grads, std::size_t k_g,
                            double epsilon_g, const ToleranceConfig& tol) {
    if (per_sample_grads.empty()) throw InvalidInput("gradient_rep_space: no gradients");
    const std::size_t in = per_sample_grads.front().cols();
    std::size_t total_rows = 0;
    for (const auto& g : per_sample_grads) {
        if (g.cols() != in) throw InvalidInput("gradient_rep_space: inconsistent shapes");
        if (!g.all_finite()) throw InvalidInput("gradient_rep_space: non-finite gradient");
        total_rows += g.rows();
    }
    Matrix stacked(total_rows, in);
    std::size_t offset = 0;
    for (const auto& g : per_sample_grads) {
        std::copy(g.values().begin(), g.values().end(), stacked.data() + offset * in);
        offset += g.rows();
    }
    return leading_right_space(stacked, k_g, epsilon_g, tol);
}

Subspace gradient_rep_space(const RankOneGrads& grads, std::size_t k_g, double epsilon_g,
                            const ToleranceConfig& tol) {
    const Matrix& deltas = grads.deltas;
    const Matrix& inputs = grads.inputs;
    if (deltas.cols() != inputs.cols())
        throw InvalidInput("gradient_rep_space: deltas and inputs disagree on sample count");
    if (deltas.cols() == 0) throw InvalidInput("gradient_rep_space: no gradients");
    const std::size_t n = deltas.cols();
    const std::size_t in = inputs.rows();
    Matrix compact(n, in);
    for (std::size_t j = 0; j < n; ++j) {
        double w = 0.0;
        for (std::size_t r = 0; r < deltas.rows(); ++r) w += deltas(r, j) * deltas(r, j);
        w = std::sqrt(w);
        for (std::size_t i = 0; i < in; ++i) compact(j, i) = w * inputs(i, j);
    }
    if (!compact.all_finite()) throw InvalidInput("gradient_rep_space: non-finite gradient");
    return leading_right_space(compact, k_g, epsilon_g, tol);
}

ClosestDirection closest_direction(const Subspace& complement, const Subspace& rg) {
    if (complement.empty()) throw EmptySpaceError("closest_direction: complement is empty");
    if (rg.empty()) throw EmptySpaceError("closest_direction: R_g is empty");
    if (complement.ambient_dim() != rg.ambient_dim())
        throw InvalidInput("closest_direction: ambient mismatch");
    const Matrix cross = matmul_tn(complement.basis(), rg.basis());
    const SvdResult d = svd(cross);
    Vector coeff = d.left.col(0);
    Vector dir = matvec(complement.basis(), coeff);
    const double nd = norm(dir);
    for (double& x : dir) x /= nd;
    return {std::move(dir), std::clamp(d.singular.front(), 0.0, 1.0)};
}

SearchResult search_relaxing_space(const Subspace& u, const Subspace& rg, double zeta,
                                   const Subspace& existing_v, const ToleranceConfig& tol) {
    if (!(zeta > 0.0 && zeta <= 1.0))
        throw InvalidInput("search_relaxing_space: zeta must lie in (0, 1]");
    if (u.ambient_dim() != rg.ambient_dim() || u.ambient_dim() != existing_v.ambient_dim())
        throw InvalidInput("search_relaxing_space: ambient mismatch");
    SearchResult out{existing_v, {}};
    if (u.empty() || rg.empty()) return out;

    const std::size_t n = u.ambient_dim();
    Matrix v_basis = existing_v.basis();
    for (;;) {
        const Subspace v = Subspace::from_orthonormal(v_basis, tol);
        const Subspace comp = complement_within(u, v, tol);
        if (comp.empty()) {
            out.report.complement_max_cosine = 0.0;
            break;
        }
        ClosestDirection cd = closest_direction(comp, rg);
        // Ties at exactly zeta are relaxable (non-strict threshold). zeta = 1
        // asks for directions lying exactly in R_g, which roundoff cannot
        // decide, so it disables relaxation instead.
        if (cd.cosine < zeta || zeta >= 1.0) {
            out.report.complement_max_cosine = cd.cosine;
            break;
        }
        // The direction lies in U \ V, hence is already orthogonal to V;
        // one more sweep keeps the appended basis orthonormal to roundoff.
        Vector d = std::move(cd.direction);
        for (std::size_t j = 0; j < v_basis.cols(); ++j) {
            double p = 0.0;
            for (std::size_t i = 0; i < n; ++i) p += v_basis(i, j) * d[i];
            for (std::size_t i = 0; i < n; ++i) d[i] -= p * v_basis(i, j);
        }
        const double nd = norm(d);
        for (double& x : d) x /= nd;
        v_basis = v_basis.hcat(Matrix::from_columns(n, std::span<const Vector>(&d, 1)));
        out.report.cosines.push_back(cd.cosine);
        ++out.report.added_dims;
        ++out.report.rounds_used;
    }
    out.relaxing = Subspace::from_orthonormal(std::move(v_basis), tol);
    return out;
}

Vector random_unit_in(const Subspace& s, Rng& rng) {
    if (s.empty()) throw EmptySpaceError("random_unit_in: empty subspace");
    const Vector c = random_unit(s.dim(), rng);
    return matvec(s.basis(), c);
}

TheoremChecklist verify_theorems(const Subspace& u, const Subspace& rg, double zeta,
                                 const Subspace& v, const SearchReport& report, Rng& rng,
                                 std::size_t samples, const ToleranceConfig& tol) {
    TheoremChecklist c;
    c.iterations = report.rounds_used;
    c.dim_bound = v.dim() <= rg.dim() && report.rounds_used <= rg.dim();

    const Subspace comp = complement_within(u, v, tol);
    double remaining = 0.0;
    if (!comp.empty() && !rg.empty()) remaining = closest_direction(comp, rg).cosine;
    c.maximal = remaining < zeta && report.complement_max_cosine < zeta;

    // Equal singular values may come back in either order at roundoff level.
    c.monotone = true;
    for (std::size_t i = 0; i < report.cosines.size(); ++i) {
        if (report.cosines[i] < zeta) c.monotone = false;
        if (i > 0 && report.cosines[i] > report.cosines[i - 1] + tol.angle_tol) c.monotone = false;
    }

    c.last_cosine_floor = true;
    if (!v.empty()) {
        const double floor = report.cosines.empty() ? zeta : report.cosines.back();
        for (std::size_t i = 0; i < samples; ++i) {
            const Vector x = random_unit_in(v, rng);
            const double cs = cos_angle(x, rg);
            c.min_sampled_cosine = std::min(c.min_sampled_cosine, cs);
            if (cs < floor - 1e-6) c.last_cosine_floor = false;
        }
    }
    return c;
}

}  // namespace rogo
