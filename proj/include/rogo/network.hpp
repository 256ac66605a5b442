#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "rogo/linalg.hpp"
#include "rogo/rng.hpp"

namespace rogo {

enum class HeadMode { single, multi };
enum class LossKind { cross_entropy, squared };

using Labels = std::vector<int>;

/// Fully-connected ReLU network. Layer l maps R^{dims[l]} to R^{dims[l+1]};
/// the last layer is linear. Batches are matrices with one sample per column.
class Mlp {
public:
    Mlp() = default;
    Mlp(std::vector<std::size_t> layer_dims, HeadMode head = HeadMode::single,
        std::size_t task_count = 1, bool use_bias = true, LossKind loss = LossKind::cross_entropy);

    /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
    void init(Rng& rng);

    std::size_t num_layers() const noexcept { return weights_.size(); }
    const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
    std::size_t input_dim() const noexcept { return dims_.front(); }
    std::size_t output_dim() const noexcept { return dims_.back(); }
    HeadMode head_mode() const noexcept { return head_; }
    std::size_t task_count() const noexcept { return task_count_; }
    bool use_bias() const noexcept { return use_bias_; }
    LossKind loss_kind() const noexcept { return loss_; }

    Matrix& weight(std::size_t l) { return weights_.at(l); }
    const Matrix& weight(std::size_t l) const { return weights_.at(l); }
    Vector& bias(std::size_t l) { return biases_.at(l); }
    const Vector& bias(std::size_t l) const { return biases_.at(l); }

    /// Output rows [first, second) that belong to `task`. Single-head nets
    /// use every row for every task.
    std::pair<std::size_t, std::size_t> class_range(std::size_t task) const;

    std::size_t parameter_count() const noexcept;
    bool all_finite() const noexcept;

    friend bool operator==(const Mlp&, const Mlp&) = default;

private:
    std::vector<std::size_t> dims_;
    std::vector<Matrix> weights_;  // out x in
    std::vector<Vector> biases_;
    HeadMode head_ = HeadMode::single;
    std::size_t task_count_ = 1;
    bool use_bias_ = true;
    LossKind loss_ = LossKind::cross_entropy;
};

struct ForwardResult {
    Matrix logits;                          // task's class rows only, classes x N
    std::vector<Matrix> inputs_per_layer;   // in_l x N, the input of every layer
    std::vector<Matrix> pre_activations;    // out_l x N
};

ForwardResult forward(const Mlp& net, const Matrix& batch, std::size_t task);

struct BatchTrace {
    std::vector<Matrix> inputs_per_layer;  // in_l x N
    /// Per-sample output error of every layer (out_l x N): sample j's
    /// gradient of its own loss is deltas[l].col(j) * inputs_per_layer[l].col(j)^T.
    std::vector<Matrix> deltas;
    std::vector<Matrix> mean_grad;         // out_l x in_l
    std::vector<Vector> bias_grad;
    double loss = 0.0;

    std::size_t batch_size() const noexcept {
        return inputs_per_layer.empty() ? 0 : inputs_per_layer.front().cols();
    }
    /// Dense gradient of sample j at layer l.
    Matrix per_sample_grad(std::size_t layer, std::size_t sample) const;
};

/// Exact gradients of the batch-mean loss.
BatchTrace backward(const Mlp& net, const Matrix& batch, const Labels& labels, std::size_t task);

/// Batch-mean loss only.
double batch_loss(const Mlp& net, const Matrix& batch, const Labels& labels, std::size_t task);

/// Fraction of samples whose arg-max over the task's classes equals the label.
double accuracy(const Mlp& net, const Matrix& inputs, const Labels& labels, std::size_t task,
                std::size_t chunk = 512);

/// Central differences on `coords` random weight coordinates against
/// backward()'s mean_grad. Coordinates whose +-step flips a ReLU are
/// resampled. Relative error uses max(|analytic|, |numeric|, 1e-5).
double finite_diff_check(const Mlp& net, const Matrix& batch, const Labels& labels,
                         std::size_t task, double step, Rng& rng, std::size_t coords = 100);

/// W <- W - lr * grad per layer; biases likewise. Throws InvalidInput on
/// shape mismatch or non-finite gradients, leaving the net untouched.
void sgd_step(Mlp& net, std::span<const Matrix> weight_grads, std::span<const Vector> bias_grads,
              double lr);

inline constexpr std::uint8_t kCheckpointVersion = 1;
void write_checkpoint(std::ostream& os, const Mlp& net);
Mlp read_checkpoint(std::istream& is);

}  // namespace rogo
