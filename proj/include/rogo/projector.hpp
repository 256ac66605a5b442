#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rogo/dataset.hpp"
#include "rogo/linalg.hpp"
#include "rogo/network.hpp"
#include "rogo/relax.hpp"
#include "rogo/subspace.hpp"

namespace rogo {

/// Continual-learning memory of one layer while training task t: the frozen
/// space U of earlier tasks, the relaxing space V inside it, the cached
/// complement U \ V and the dim(V) x dim(V) scale matrix S.
struct LayerTaskState {
    Subspace frozen;
    Subspace relaxing;
    Subspace complement;
    Matrix scale;
    double beta = 1.0;

    /// V empty, S 0 x 0, complement = frozen.
    static LayerTaskState fresh(Subspace frozen, double beta);

    /// Throws PreconditionError if V leaves U, the complement is not
    /// orthogonal to V, or S has the wrong shape.
    void check_invariants(const ToleranceConfig& tol = {}) const;
};

/// g - (g B_U) B_U^T: every row of g projected off U.
Matrix gpm_project(const Matrix& g, const Subspace& u);

/// g B_V S B_V^T.
Matrix scaled_project(const Matrix& g, const Subspace& v, const Matrix& s);

/// g - g B_U B_U^T + g B_V S B_V^T.
Matrix rogo_modify(const Matrix& g, const LayerTaskState& state);

/// dL/dS for the forward weights W + W B_V (S - I) B_V^T, where g is the
/// loss gradient with respect to those forward weights and w the live
/// weights, plus the regularizer term 2 beta (S - I).
Matrix scale_grad(const Matrix& g, const Matrix& w, const LayerTaskState& state);

/// One descent step on S for the Eq. 11 objective: explicit on the loss
/// term, exact (proximal) on beta |S - I|_F^2:
///     S <- I + (S - I - lr (W B)^T (G B)) / (1 + 2 lr beta)
/// Agrees with S - lr * scale_grad to first order in lr and stays stable
/// for any beta.
void scale_step(LayerTaskState& state, const Matrix& g, const Matrix& w, double lr);

/// sum_l beta_l |S_l - I|_F^2
double reg_loss(std::span<const LayerTaskState> states);

/// Replaces V by `grown` (whose leading columns must equal the current V)
/// and pads S block-diagonally with an identity of the added size.
void expand_scale(LayerTaskState& state, const Subspace& grown, const ToleranceConfig& tol = {});

/// W + (W B_V)(S - I) B_V^T. This is what training feeds forward.
Matrix effective_weight(const Matrix& w, const Subspace& v, const Matrix& s);

/// Folds every layer's S into its weights in place and discards V and S.
void consolidate(Mlp& net, std::vector<LayerTaskState>& states);

struct ExpEntry {
    Subspace relaxing;
    Matrix scale;
};

/// Per-task, per-layer relaxing bases and final scale matrices.
class ExpStore {
public:
    void put(std::size_t task, std::vector<ExpEntry> layers);
    bool contains(std::size_t task) const { return entries_.contains(task); }
    const std::vector<ExpEntry>& at(std::size_t task) const;
    /// Stored scalars: sum over tasks and layers of dim(V) * ambient + dim(V)^2.
    std::size_t extra_parameter_count() const;
    std::size_t task_count() const { return entries_.size(); }

private:
    std::map<std::size_t, std::vector<ExpEntry>> entries_;
};

/// W - W B_V B_V^T + W B_V S B_V^T for each layer, from the entries stored
/// for `task`. Leaves the network untouched.
std::vector<Matrix> exp_inference_weights(const Mlp& net, const ExpStore& store, std::size_t task);

/// Copy of `net` carrying exp_inference_weights for `task`, or `net` itself
/// when nothing was stored for that task.
Mlp exp_inference_net(const Mlp& net, const ExpStore& store, std::size_t task);

enum class Method { plain, gpm, rogo, rogo_exp };

std::string to_string(Method m);
Method parse_method(const std::string& s);

struct MethodConfig {
    Method method = Method::rogo;
    /// Energy threshold for representation spaces; one entry or one per layer.
    std::vector<double> epsilon{0.95};
    RelaxConfig relax;
    /// Regularization weight; one entry or one per layer.
    std::vector<double> beta{1.0};
    double lr = 0.05;
    /// Step size for the scale matrices; 0 means "same as lr".
    double lr_scale = 0.0;
    std::size_t epochs = 5;
    std::size_t batch_size = 32;
    /// Samples used to build each task's representation matrix.
    std::size_t rep_samples = 300;
    std::uint64_t seed = 1;

    double epsilon_for(std::size_t layer) const;
    double beta_for(std::size_t layer) const;
    void validate() const;

    friend bool operator==(const MethodConfig&, const MethodConfig&) = default;
};

struct RoundRecord {
    std::size_t round = 0;
    std::size_t epoch = 0;                 // epochs completed before the search
    std::vector<std::size_t> rg_dims;      // per layer
    std::vector<SearchReport> reports;     // per layer
};

struct TaskReport {
    std::size_t task = 0;
    std::vector<RoundRecord> rounds;
    std::vector<std::size_t> frozen_dims_before;
    std::vector<std::size_t> frozen_dims_after;
    std::vector<std::size_t> relaxing_dims;     // final dim(V) per layer
    std::vector<double> relaxing_ratio;         // dim(V) / dim(U), 0 when U is empty
    std::size_t extra_parameters = 0;           // ExpStore size after this task
    double final_train_loss = 0.0;
    double seconds = 0.0;
};

/// Observer for every modified weight gradient: (task, layer, g', state).
struct TrainHooks {
    std::function<void(std::size_t, std::size_t, const Matrix&, const LayerTaskState&)>
        on_projected;
};

/// One task of the restricted orthogonal projection loop. `states` carries
/// the frozen spaces of earlier tasks and receives this task's extension.
/// `store` is required for Method::rogo_exp.
TaskReport train_task(Mlp& net, const Dataset& train, std::size_t task,
                      std::vector<LayerTaskState>& states, const MethodConfig& cfg,
                      ExpStore* store = nullptr, const TrainHooks& hooks = {},
                      const ToleranceConfig& tol = {});

/// Empty frozen spaces for every layer of `net`.
std::vector<LayerTaskState> initial_states(const Mlp& net, const MethodConfig& cfg);

}  // namespace rogo
