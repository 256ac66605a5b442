#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rogo/linalg.hpp"
#include "rogo/projector.hpp"

namespace rogo {

struct BenchmarkConfig {
    std::string kind = "permuted";  // permuted | split | synthetic
    std::string data_dir = "data/mnist5k";
    std::size_t tasks = 5;
    std::size_t train_per_task = 2000;
    std::size_t validation_per_task = 0;
    std::size_t test_per_task = 500;
    std::size_t classes = 10;
    std::vector<std::size_t> hidden{100, 100};
    bool bias = true;
    std::string loss = "cross_entropy";  // cross_entropy | squared
    std::string head = "auto";           // auto | single | multi
    // synthetic sequences: each task's support is its own coordinate block
    std::size_t input_dim = 12;
    std::size_t support_dim = 4;

    friend bool operator==(const BenchmarkConfig&, const BenchmarkConfig&) = default;
};

/// Everything needed to re-execute an experiment.
struct RunConfig {
    BenchmarkConfig bench;
    MethodConfig method;
    ToleranceConfig tol;
    std::vector<std::uint64_t> seeds{1};
    std::string out_dir = "results";
    bool checkpoint = false;
    bool fwt = true;
    std::vector<double> sweep_zeta;
    std::vector<double> sweep_beta;
    std::vector<double> sweep_epsilon;

    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses the sectioned key = value format:
///
///     # comment
///     [method]
///     name = rogo
///     lr = 0.05
///
/// Unknown sections or keys and malformed values raise ConfigError with the
/// offending line. Missing keys keep their defaults.
RunConfig parse_config(std::istream& in, const std::string& path = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Writes every field, defaults included, in a form parse_config reads back
/// to an equal RunConfig.
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace rogo
