#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rogo/bench.hpp"
#include "rogo/config.hpp"
#include "rogo/network.hpp"
#include "rogo/projector.hpp"

namespace rogo {

/// Offset applied to the run seed for the random-init network behind the
/// FWT baselines b_i.
inline constexpr std::uint64_t kBaselineSeedOffset = 0x5eedb0a7ULL;

/// The task sequence a benchmark config describes. Permuted and split
/// sequences read the IDX files under data_dir.
TaskSequence build_sequence(const BenchmarkConfig& cfg, std::uint64_t seed);

/// Initialized network for the sequence: hidden layers from the config,
/// multi-head for split sequences when head = auto.
Mlp build_network(const BenchmarkConfig& cfg, const TaskSequence& seq, std::uint64_t seed);

struct SeedRun {
    std::uint64_t seed = 0;
    AccuracyMatrix accuracy;
    Metrics metrics;
    std::vector<TaskReport> reports;
    std::size_t parameter_count = 0;
    std::size_t extra_parameters = 0;
    double seconds = 0.0;
    Mlp final_net;
};

/// Trains every task of `seq` in order with cfg.method (its seed replaced by
/// `seed`) and fills A[i][j] for j <= i, plus the superdiagonal and the
/// baselines when cfg.fwt is set.
SeedRun run_sequence(const TaskSequence& seq, const RunConfig& cfg, std::uint64_t seed,
                     const TrainHooks& hooks = {});

/// build_sequence + build_network + run_sequence.
SeedRun run_seed(const RunConfig& cfg, std::uint64_t seed, const TrainHooks& hooks = {});

/// "run,task_i,task_j,accuracy" rows (1-based tasks), A[i][j] for j <= i.
void write_accuracy_csv(std::ostream& os, const std::vector<SeedRun>& runs, bool header = true);

/// Metrics, per-task reports, parameter counts and timings as JSON text.
std::string summary_json(const RunConfig& cfg, const std::vector<SeedRun>& runs);

/// Writes effective_config.ini, accuracy.csv, summary.json and (when
/// enabled) checkpoint_seed<N>.bin into `dir`, creating it if needed.
void write_run_artifacts(const std::filesystem::path& dir, const RunConfig& cfg,
                         const std::vector<SeedRun>& runs);

enum class SweepAxis { zeta, beta, epsilon };
SweepAxis parse_axis(const std::string& s);
std::string to_string(SweepAxis a);

struct SweepPoint {
    double value = 0.0;
    std::vector<SeedRun> runs;
};

/// Mean over tasks 2..T of each layer's relaxing ratio.
std::vector<double> mean_relaxing_ratio(const SeedRun& run);

/// One run per axis value per seed. Throws InvalidInput on an empty axis list.
std::vector<SweepPoint> run_sweep(const RunConfig& cfg, SweepAxis axis);

/// value,seed,acc,bwt,omega_new,relax_ratio_l1..: one row per run and one
/// "mean" row per value.
void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points);

}  // namespace rogo
