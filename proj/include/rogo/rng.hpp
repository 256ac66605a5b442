#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "rogo/linalg.hpp"

namespace rogo {

using Rng = std::mt19937_64;

/// Independent generator for the named purpose ("init", "batch-order",
/// "permutation", "probe", "campaign", ...) derived from one master seed.
Rng substream(std::uint64_t master_seed, std::string_view name);

Vector random_normal(std::size_t n, Rng& rng);
Matrix random_normal(std::size_t rows, std::size_t cols, Rng& rng);
/// Uniformly distributed on the unit sphere of R^n.
Vector random_unit(std::size_t n, Rng& rng);

}  // namespace rogo
