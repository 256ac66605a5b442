// rogo: run, sweep and verify restricted orthogonal gradient projection.
//
//   rogo run    --config desk.ini [--out DIR] [--seed N]
//   rogo sweep  --config desk.ini --axis beta [--out DIR] [--seed N]
//   rogo verify --suite all [--seed N]
//
// Exit codes: 0 success, 2 usage or config error, 3 numerical failure,
// 4 verification failure, 5 data or I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "rogo/config.hpp"
#include "rogo/errors.hpp"
#include "rogo/experiment.hpp"
#include "rogo/kernels.hpp"
#include "rogo/verify.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kVerify = 4, kData = 5 };

rogo::RunConfig resolve(const std::string& path, const std::string& out,
                        const std::optional<std::uint64_t>& seed) {
    rogo::RunConfig cfg = rogo::load_config(path);
    if (!out.empty()) cfg.out_dir = out;
    if (seed) cfg.seeds = {*seed};
    return cfg;
}

void print_run(const rogo::SeedRun& r) {
    std::cout << "seed " << r.seed << std::fixed << std::setprecision(4)
              << ": ACC " << r.metrics.acc;
    if (r.metrics.bwt) std::cout << "  BWT " << *r.metrics.bwt;
    if (r.metrics.omega_new) std::cout << "  Omega_new " << *r.metrics.omega_new;
    if (r.metrics.fwt) std::cout << "  FWT " << *r.metrics.fwt;
    std::cout << std::setprecision(1) << "  (" << r.seconds << " s)\n" << std::defaultfloat;
}

int cmd_run(const rogo::RunConfig& cfg) {
    std::vector<rogo::SeedRun> runs;
    for (std::uint64_t seed : cfg.seeds) {
        runs.push_back(rogo::run_seed(cfg, seed));
        print_run(runs.back());
    }
    rogo::write_run_artifacts(cfg.out_dir, cfg, runs);
    std::cout << "wrote " << cfg.out_dir << "/{effective_config.ini,accuracy.csv,summary.json}\n";
    return kOk;
}

int cmd_sweep(const rogo::RunConfig& cfg, const std::string& axis_name) {
    const rogo::SweepAxis axis = rogo::parse_axis(axis_name);
    const auto points = rogo::run_sweep(cfg, axis);
    std::filesystem::create_directories(cfg.out_dir);
    const auto csv = std::filesystem::path(cfg.out_dir) / ("sweep_" + axis_name + ".csv");
    {
        std::ofstream f(csv);
        if (!f) throw rogo::IoError("cannot write " + csv.string());
        rogo::write_sweep_csv(f, points);
    }
    {
        std::ofstream f(std::filesystem::path(cfg.out_dir) / "effective_config.ini");
        rogo::write_config(f, cfg);
    }
    std::cout << std::fixed << std::setprecision(4);
    std::size_t worst = 0;
    std::vector<double> mean_bwt;
    for (std::size_t i = 0; i < points.size(); ++i) {
        double acc = 0, bwt = 0, omega = 0;
        for (const auto& r : points[i].runs) {
            acc += r.metrics.acc;
            bwt += r.metrics.bwt.value_or(0.0);
            omega += r.metrics.omega_new.value_or(0.0);
        }
        const double n = static_cast<double>(points[i].runs.size());
        mean_bwt.push_back(bwt / n);
        if (mean_bwt.back() < mean_bwt[worst]) worst = i;
        std::cout << axis_name << " = " << points[i].value << ": ACC " << acc / n << "  BWT "
                  << bwt / n << "  Omega_new " << omega / n << '\n';
    }
    bool monotone = true;
    for (std::size_t i = 1; i < mean_bwt.size(); ++i) monotone = monotone && mean_bwt[i] >= mean_bwt[i - 1];
    std::cout << "most negative BWT at " << axis_name << " = " << points[worst].value << '\n'
              << "BWT non-decreasing along the listed values: " << (monotone ? "yes" : "no") << '\n'
              << "wrote " << csv.string() << '\n';
    return kOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed) {
    if (suite != "theorems" && suite != "gradients" && suite != "oracles" && suite != "all")
        throw rogo::InvalidInput("unknown suite '" + suite +
                                 "' (theorems, gradients, oracles or all)");
    std::cout << "verify suite " << suite << ", seed " << seed << '\n';
    bool ok = true;
    auto report = [&](const rogo::CampaignResult& r) {
        rogo::print_campaign(std::cout, r);
        ok = ok && r.passed();
    };
    if (suite == "theorems" || suite == "all") {
        report(rogo::theorem_campaign(seed));
        report(rogo::lemma_campaign(seed));
    }
    if (suite == "gradients" || suite == "all") report(rogo::gradient_campaign(seed));
    if (suite == "oracles" || suite == "all") report(rogo::oracle_campaign(seed));
    return ok ? kOk : kVerify;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Restricted orthogonal gradient projection for continual learning"};
    app.require_subcommand(1);

    std::string config, out, axis, suite = "all";
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "train a task sequence for every configured seed");
    run->add_option("--config", config, "config file")->required();
    run->add_option("--out", out, "output directory (overrides [run] out)");
    run->add_option("--seed", seed, "run this seed only");

    auto* sweep = app.add_subcommand("sweep", "one run per value of an ablation axis");
    sweep->add_option("--config", config, "config file")->required();
    sweep->add_option("--axis", axis, "zeta, beta or epsilon")->required();
    sweep->add_option("--out", out, "output directory (overrides [run] out)");
    sweep->add_option("--seed", seed, "run this seed only");

    auto* verify = app.add_subcommand("verify", "randomized property campaigns");
    verify->add_option("--suite", suite, "theorems, gradients, oracles or all");
    verify->add_option("--seed", seed, "campaign master seed (default 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    std::cout << "threads: " << rogo::kernels::max_threads() << '\n';
    try {
        if (*run) return cmd_run(resolve(config, out, seed));
        if (*sweep) return cmd_sweep(resolve(config, out, seed), axis);
        return cmd_verify(suite, seed.value_or(1));
    } catch (const rogo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const rogo::InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    } catch (const rogo::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const rogo::FormatError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const rogo::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
}
