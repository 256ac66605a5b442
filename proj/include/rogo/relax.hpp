#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rogo/linalg.hpp"
#include "rogo/rng.hpp"
#include "rogo/subspace.hpp"

namespace rogo {

/// Settings for the relaxing-space search of one task.
struct RelaxConfig {
    /// Cosine threshold per layer (zeta = cos gamma). A single entry applies
    /// to every layer.
    std::vector<double> zeta{0.95};
    std::size_t k_g = 10;            // cap on dim(R_g)
    double epsilon_g = 0.95;         // energy threshold for R_g
    std::size_t e_t = 1;             // epochs between searches
    std::size_t max_search_rounds = 2;
    std::size_t probe_batch = 256;   // samples in each gradient probe

    double zeta_for(std::size_t layer) const;
    void validate() const;

    friend bool operator==(const RelaxConfig&, const RelaxConfig&) = default;
};

struct SearchReport {
    std::size_t added_dims = 0;
    std::vector<double> cosines;       // accepted cosines, in acceptance order
    std::size_t rounds_used = 0;       // greedy iterations that accepted a direction
    double complement_max_cosine = 0;  // best cosine left in U \ V at termination
};

/// Per-sample gradient of one layer in factored form: sample j contributes
/// deltas.col(j) * inputs.col(j)^T.
struct RankOneGrads {
    const Matrix& deltas;  // out x N
    const Matrix& inputs;  // in x N
};

/// Right singular subspace of the vertically stacked per-sample gradient
/// matrices, truncated to min(k_g, energy_rank(., epsilon_g)) directions.
/// All-zero gradients give the empty subspace.
Subspace gradient_rep_space(std::span<const Matrix> per_sample_grads, std::size_t k_g,
                            double epsilon_g, const ToleranceConfig& tol = {});

/// Same subspace for rank-one per-sample gradients without materializing
/// them: the stack has the same Gram matrix as the N x in matrix whose row
/// j is |delta_j| x_j^T.
Subspace gradient_rep_space(const RankOneGrads& grads, std::size_t k_g, double epsilon_g,
                            const ToleranceConfig& tol = {});

struct ClosestDirection {
    Vector direction;  // unit vector inside the complement
    double cosine;     // |Proj_Rg direction|
};

/// The unit vector of `complement` closest to `rg`, from the top singular
/// triple of B_complement^T B_rg.
ClosestDirection closest_direction(const Subspace& complement, const Subspace& rg);

struct SearchResult {
    Subspace relaxing;
    SearchReport report;
};

/// Greedy relaxing-space search: starting from existing_v, keep appending the
/// closest direction of U \ V to rg while its cosine is at least zeta.
/// zeta = 1 accepts nothing.
SearchResult search_relaxing_space(const Subspace& u, const Subspace& rg, double zeta,
                                   const Subspace& existing_v, const ToleranceConfig& tol = {});

struct TheoremChecklist {
    bool dim_bound = false;        // dim(V) <= dim(R_g)
    bool maximal = false;          // nothing relaxable left in U \ V
    bool monotone = false;         // accepted cosines non-increasing
    bool last_cosine_floor = false;  // sampled v in V reach at least the last accepted cosine
    double min_sampled_cosine = 1.0;
    std::size_t iterations = 0;

    bool all() const { return dim_bound && maximal && monotone && last_cosine_floor; }
};

/// Checks a fresh search result (existing_v empty) against the dimension
/// bound, the maximality witness and the last-accepted-cosine floor, the
/// latter by sampling `samples` random unit vectors of V.
TheoremChecklist verify_theorems(const Subspace& u, const Subspace& rg, double zeta,
                                 const Subspace& v, const SearchReport& report, Rng& rng,
                                 std::size_t samples = 10000, const ToleranceConfig& tol = {});

/// Uniformly random unit vector of a nonempty subspace.
Vector random_unit_in(const Subspace& s, Rng& rng);

}  // namespace rogo
