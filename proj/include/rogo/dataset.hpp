#pragma once

#include <cstddef>
#include <span>

#include "rogo/linalg.hpp"
#include "rogo/network.hpp"

namespace rogo {

/// Samples as columns of `inputs` with one integer label each.
struct Dataset {
    Matrix inputs;  // features x N
    Labels labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t feature_dim() const noexcept { return inputs.rows(); }

    /// Columns at the given indices, in that order.
    Dataset select(std::span<const std::size_t> indices) const;
    /// First `count` samples.
    Dataset head(std::size_t count) const;
};

}  // namespace rogo
