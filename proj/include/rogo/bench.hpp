#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rogo/dataset.hpp"
#include "rogo/linalg.hpp"

namespace rogo {

/// IDX image/label pair (MNIST layout). Pixels are scaled to [0, 1] and
/// flattened row-major into one column per image.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Writes `data` as an IDX pair; pixels are stored as round(255 * x).
/// `rows * cols` must equal the feature dimension.
void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
               const Dataset& data, std::size_t rows, std::size_t cols);

enum class SequenceKind { permuted, split, synthetic };

struct TaskData {
    Dataset train;
    Dataset validation;
    Dataset test;
    std::pair<int, int> classes;  // [first, last)
};

struct TaskSequence {
    std::vector<TaskData> tasks;
    SequenceKind kind = SequenceKind::permuted;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return tasks.size(); }
};

struct PermutedSpec {
    std::size_t tasks = 5;
    std::size_t train_per_task = 2000;
    std::size_t validation_per_task = 0;
    std::size_t test_per_task = 500;
    std::size_t classes = 10;
};

/// Task 0 keeps the pixel order; every later task applies its own seeded
/// pixel permutation to the same base images (train, validation and test
/// alike). Validation samples come from the train pool after the train ones.
TaskSequence make_permuted_tasks(const Dataset& base_train, const Dataset& base_test,
                                 const PermutedSpec& spec, std::uint64_t seed);

/// The permutation used for `task` (identity for task 0).
std::vector<std::size_t> task_permutation(std::size_t dim, std::size_t task, std::uint64_t seed);

/// Classes split into `tasks` consecutive, disjoint groups (multi-head use).
TaskSequence make_split_tasks(const Dataset& base_train, const Dataset& base_test,
                              std::size_t tasks, std::size_t classes, std::uint64_t seed);

struct SyntheticSpec {
    std::size_t input_dim = 12;
    /// One basis per task; its columns span the task's input support.
    std::vector<Matrix> supports;
    std::size_t train_per_task = 200;
    std::size_t test_per_task = 100;
    std::size_t classes = 3;
    bool require_orthogonal = true;
};

/// Axis-aligned support: coordinates [first, first + count) of R^dim.
Matrix coordinate_block(std::size_t dim, std::size_t first, std::size_t count);

/// Gaussian inputs confined to each task's support, labelled by the arg-max
/// of one fixed random linear teacher shared by all tasks.
TaskSequence make_synthetic_tasks(const SyntheticSpec& spec, std::uint64_t seed);

/// A[i][j]: accuracy on task j after learning task i. Optional entries so a
/// partially filled matrix can be detected.
class AccuracyMatrix {
public:
    explicit AccuracyMatrix(std::size_t tasks = 0);

    std::size_t tasks() const noexcept { return n_; }
    void set(std::size_t after, std::size_t task, double acc);
    std::optional<double> get(std::size_t after, std::size_t task) const;
    double at(std::size_t after, std::size_t task) const;
    void set_baseline(std::size_t task, double acc);
    std::optional<double> baseline(std::size_t task) const;

    bool lower_complete() const;
    bool forward_complete() const;  // superdiagonal and baselines present

private:
    std::size_t n_;
    std::vector<std::optional<double>> a_;
    std::vector<std::optional<double>> b_;
};

struct Metrics {
    double acc = 0.0;
    std::optional<double> bwt;        // needs T >= 2
    std::optional<double> omega_new;  // simplified form, needs T >= 2
    std::optional<double> fwt;
    /// |Omega_new - (T/(T-1) ACC - BWT - A[1][1]/(T-1))|, 0 for T = 1.
    double identity_residual = 0.0;
};

/// ACC, BWT, Omega_new and (when requested and available) FWT. Throws
/// InvalidInput on an incomplete lower triangle, or when FWT is requested
/// without the superdiagonal and baselines. Throws Error if the Omega_new
/// identity is violated by more than 1e-12.
Metrics compute_metrics(const AccuracyMatrix& m, bool with_fwt = false);

}  // namespace rogo
