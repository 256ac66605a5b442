#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "rogo/linalg.hpp"

namespace rogo {

/// Outcome of one randomized campaign. `worst` is the campaign's headline
/// statistic (a margin or an error, see each campaign), `failure` a dump of
/// the first violating instance.
struct CampaignResult {
    std::string name;
    std::uint64_t seed = 0;
    std::size_t instances = 0;
    std::size_t failures = 0;
    double worst = 0.0;
    double seconds = 0.0;
    std::string failure;

    bool passed() const noexcept { return failures == 0; }
};

/// Random (U, Rg, zeta) in ambient dimension <= max_ambient. Checks
/// dim(V) <= dim(Rg), complement max cosine < zeta, rounds <= dim(Rg) and
/// non-increasing accepted cosines. `worst` is the smallest zeta minus
/// complement max cosine seen.
CampaignResult theorem_campaign(std::uint64_t seed, std::size_t instances = 1000,
                                std::size_t max_ambient = 20, const ToleranceConfig& tol = {});

/// Searches that accept at least one direction; `samples` random unit
/// vectors of each V must have cosine to Rg >= last accepted - 1e-6.
/// `worst` is the smallest (sampled cosine - last accepted) seen.
CampaignResult lemma_campaign(std::uint64_t seed, std::size_t searches = 200,
                              std::size_t samples = 10000, const ToleranceConfig& tol = {});

/// closest_direction against brute force on random 8-dim complements and
/// 2-dim Rg in R^12. The first principal angle is symmetric, so the
/// maximization samples unit vectors of Rg (cosine = |Proj_C r|); a second
/// sample set of unit vectors of C checks the exact upper bound. `worst` is
/// the largest |cosine - brute-force max|.
CampaignResult oracle_campaign(std::uint64_t seed, std::size_t instances = 50,
                               std::size_t samples = 1000000);

/// Finite differences of the network loss wrt W and of the Eq. 11 objective
/// wrt S on random networks and states. `worst` is the largest relative error.
CampaignResult gradient_campaign(std::uint64_t seed, std::size_t configs = 20);

/// One line: "<name> seed=<s> instances=<n> failures=<f> worst=<w> seconds=<t> PASS|FAIL",
/// followed by the failure dump when there is one.
void print_campaign(std::ostream& os, const CampaignResult& r);

}  // namespace rogo
