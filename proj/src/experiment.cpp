#include "rogo/experiment.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "rogo/errors.hpp"
#include "rogo/rng.hpp"

namespace rogo {

namespace {

using nlohmann::json;

std::string fixed(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json report_json(const TaskReport& r) {
    json rounds = json::array();
    for (const auto& rec : r.rounds) {
        json layers = json::array();
        for (std::size_t l = 0; l < rec.reports.size(); ++l) {
            const auto& sr = rec.reports[l];
            layers.push_back({{"rg_dim", rec.rg_dims[l]},
                              {"added_dims", sr.added_dims},
                              {"accepted_cosines", sr.cosines},
                              {"complement_max_cosine", sr.complement_max_cosine}});
        }
        rounds.push_back({{"round", rec.round}, {"after_epoch", rec.epoch}, {"layers", layers}});
    }
    return {{"task", r.task + 1},
            {"rounds_used", r.rounds.size()},
            {"rounds", rounds},
            {"frozen_dims_before", r.frozen_dims_before},
            {"frozen_dims_after", r.frozen_dims_after},
            {"relaxing_dims", r.relaxing_dims},
            {"relaxing_ratio", r.relaxing_ratio},
            {"extra_parameters", r.extra_parameters},
            {"final_train_loss", r.final_train_loss},
            {"seconds", r.seconds}};
}

}  // namespace

TaskSequence build_sequence(const BenchmarkConfig& cfg, std::uint64_t seed) {
    if (cfg.kind == "synthetic") {
        SyntheticSpec spec;
        spec.input_dim = cfg.input_dim;
        spec.train_per_task = cfg.train_per_task;
        spec.test_per_task = cfg.test_per_task;
        spec.classes = cfg.classes;
        for (std::size_t t = 0; t < cfg.tasks; ++t)
            spec.supports.push_back(
                coordinate_block(cfg.input_dim, t * cfg.support_dim, cfg.support_dim));
        return make_synthetic_tasks(spec, seed);
    }
    const std::filesystem::path dir(cfg.data_dir);
    const Dataset train = load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
    const Dataset test = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
    if (cfg.kind == "split") return make_split_tasks(train, test, cfg.tasks, cfg.classes, seed);
    if (cfg.kind != "permuted") throw InvalidInput("unknown benchmark kind '" + cfg.kind + "'");
    PermutedSpec spec;
    spec.tasks = cfg.tasks;
    spec.train_per_task = cfg.train_per_task;
    spec.validation_per_task = cfg.validation_per_task;
    spec.test_per_task = cfg.test_per_task;
    spec.classes = cfg.classes;
    return make_permuted_tasks(train, test, spec, seed);
}

Mlp build_network(const BenchmarkConfig& cfg, const TaskSequence& seq, std::uint64_t seed) {
    if (seq.size() == 0) throw InvalidInput("build_network: empty task sequence");
    const bool multi =
        cfg.head == "multi" || (cfg.head == "auto" && seq.kind == SequenceKind::split);
    std::vector<std::size_t> dims{seq.tasks.front().train.feature_dim()};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(cfg.classes);
    const LossKind loss = cfg.loss == "squared" ? LossKind::squared : LossKind::cross_entropy;
    Mlp net(dims, multi ? HeadMode::multi : HeadMode::single, multi ? seq.size() : 1, cfg.bias,
            loss);
    Rng rng = substream(seed, "init");
    net.init(rng);
    return net;
}

SeedRun run_sequence(const TaskSequence& seq, const RunConfig& cfg, std::uint64_t seed,
                     const TrainHooks& hooks) {
    const auto started = std::chrono::steady_clock::now();
    MethodConfig mc = cfg.method;
    mc.seed = seed;
    const std::size_t T = seq.size();

    SeedRun run;
    run.seed = seed;
    run.accuracy = AccuracyMatrix(T);
    Mlp net = build_network(cfg.bench, seq, seed);
    run.parameter_count = net.parameter_count();

    if (cfg.fwt) {
        const Mlp fresh = build_network(cfg.bench, seq, seed + kBaselineSeedOffset);
        for (std::size_t j = 0; j < T; ++j)
            run.accuracy.set_baseline(
                j, accuracy(fresh, seq.tasks[j].test.inputs, seq.tasks[j].test.labels, j));
    }

    auto states = initial_states(net, mc);
    ExpStore store;
    for (std::size_t i = 0; i < T; ++i) {
        run.reports.push_back(
            train_task(net, seq.tasks[i].train, i, states, mc, &store, hooks, cfg.tol));
        for (std::size_t j = 0; j <= i; ++j) {
            const auto& test = seq.tasks[j].test;
            const double a = mc.method == Method::rogo_exp
                                 ? accuracy(exp_inference_net(net, store, j), test.inputs,
                                            test.labels, j)
                                 : accuracy(net, test.inputs, test.labels, j);
            run.accuracy.set(i, j, a);
        }
        if (cfg.fwt && i + 1 < T) {
            const auto& next = seq.tasks[i + 1].test;
            run.accuracy.set(i, i + 1, accuracy(net, next.inputs, next.labels, i + 1));
        }
    }
    run.extra_parameters = store.extra_parameter_count();
    run.metrics = compute_metrics(run.accuracy, cfg.fwt && T >= 2);
    run.final_net = std::move(net);
    run.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return run;
}

SeedRun run_seed(const RunConfig& cfg, std::uint64_t seed, const TrainHooks& hooks) {
    return run_sequence(build_sequence(cfg.bench, seed), cfg, seed, hooks);
}

void write_accuracy_csv(std::ostream& os, const std::vector<SeedRun>& runs, bool header) {
    if (header) os << "run,task_i,task_j,accuracy\n";
    for (const auto& r : runs)
        for (std::size_t i = 0; i < r.accuracy.tasks(); ++i)
            for (std::size_t j = 0; j <= i; ++j)
                os << r.seed << ',' << i + 1 << ',' << j + 1 << ',' << fixed(r.accuracy.at(i, j))
                   << '\n';
}

std::string summary_json(const RunConfig& cfg, const std::vector<SeedRun>& runs) {
    std::ostringstream cfg_text;
    write_config(cfg_text, cfg);

    json out;
    out["method"] = to_string(cfg.method.method);
    out["benchmark"] = cfg.bench.kind;
    out["config"] = cfg_text.str();
    json jr = json::array();
    double acc = 0, bwt = 0, omega = 0;
    for (const auto& r : runs) {
        json reports = json::array();
        for (const auto& t : r.reports) reports.push_back(report_json(t));
        json matrix = json::array();
        for (std::size_t i = 0; i < r.accuracy.tasks(); ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < r.accuracy.tasks(); ++j)
                row.push_back(optional_json(r.accuracy.get(i, j)));
            matrix.push_back(row);
        }
        jr.push_back({{"seed", r.seed},
                      {"metrics",
                       {{"acc", r.metrics.acc},
                        {"bwt", optional_json(r.metrics.bwt)},
                        {"omega_new", optional_json(r.metrics.omega_new)},
                        {"fwt", optional_json(r.metrics.fwt)},
                        {"identity_residual", r.metrics.identity_residual}}},
                      {"accuracy_matrix", matrix},
                      {"mean_relaxing_ratio", mean_relaxing_ratio(r)},
                      {"parameter_count", r.parameter_count},
                      {"extra_parameters", r.extra_parameters},
                      {"seconds", r.seconds},
                      {"tasks", reports}});
        acc += r.metrics.acc;
        bwt += r.metrics.bwt.value_or(0.0);
        omega += r.metrics.omega_new.value_or(0.0);
    }
    out["runs"] = jr;
    if (!runs.empty()) {
        const double n = static_cast<double>(runs.size());
        out["mean"] = {{"acc", acc / n}, {"bwt", bwt / n}, {"omega_new", omega / n}};
    }
    return out.dump(2) + "\n";
}

void write_run_artifacts(const std::filesystem::path& dir, const RunConfig& cfg,
                         const std::vector<SeedRun>& runs) {
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name, std::ios::openmode mode = std::ios::out) {
        std::ofstream f(dir / name, mode);
        if (!f) throw IoError("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("effective_config.ini");
        write_config(f, cfg);
    }
    {
        auto f = open("accuracy.csv");
        write_accuracy_csv(f, runs);
    }
    {
        auto f = open("summary.json");
        f << summary_json(cfg, runs);
    }
    if (cfg.checkpoint)
        for (const auto& r : runs) {
            auto f = open("checkpoint_seed" + std::to_string(r.seed) + ".bin",
                          std::ios::out | std::ios::binary);
            write_checkpoint(f, r.final_net);
        }
}

SweepAxis parse_axis(const std::string& s) {
    if (s == "zeta") return SweepAxis::zeta;
    if (s == "beta") return SweepAxis::beta;
    if (s == "epsilon") return SweepAxis::epsilon;
    throw InvalidInput("unknown sweep axis '" + s + "' (zeta, beta or epsilon)");
}

std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::zeta: return "zeta";
        case SweepAxis::beta: return "beta";
        case SweepAxis::epsilon: return "epsilon";
    }
    return "?";
}

std::vector<double> mean_relaxing_ratio(const SeedRun& run) {
    if (run.reports.empty()) return {};
    std::vector<double> mean(run.reports.front().relaxing_ratio.size(), 0.0);
    if (run.reports.size() < 2) return mean;
    for (std::size_t t = 1; t < run.reports.size(); ++t)
        for (std::size_t l = 0; l < mean.size(); ++l) mean[l] += run.reports[t].relaxing_ratio[l];
    for (double& m : mean) m /= static_cast<double>(run.reports.size() - 1);
    return mean;
}

std::vector<SweepPoint> run_sweep(const RunConfig& cfg, SweepAxis axis) {
    const std::vector<double>& values = axis == SweepAxis::zeta   ? cfg.sweep_zeta
                                        : axis == SweepAxis::beta ? cfg.sweep_beta
                                                                  : cfg.sweep_epsilon;
    if (values.empty())
        throw InvalidInput("sweep: no values listed for axis " + to_string(axis));
    std::vector<SweepPoint> points;
    for (double v : values) {
        RunConfig c = cfg;
        switch (axis) {
            case SweepAxis::zeta: c.method.relax.zeta = {v}; break;
            case SweepAxis::beta: c.method.beta = {v}; break;
            case SweepAxis::epsilon: c.method.epsilon = {v}; break;
        }
        c.validate();
        SweepPoint p;
        p.value = v;
        for (std::uint64_t seed : c.seeds) p.runs.push_back(run_seed(c, seed));
        points.push_back(std::move(p));
    }
    return points;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points) {
    std::size_t layers = 0;
    for (const auto& p : points)
        for (const auto& r : p.runs) layers = std::max(layers, mean_relaxing_ratio(r).size());
    os << "value,seed,acc,bwt,omega_new";
    for (std::size_t l = 0; l < layers; ++l) os << ",relax_ratio_l" << l + 1;
    os << '\n';
    for (const auto& p : points) {
        std::vector<double> sum(3 + layers, 0.0);
        for (const auto& r : p.runs) {
            const auto ratio = mean_relaxing_ratio(r);
            const std::vector<double> row{r.metrics.acc, r.metrics.bwt.value_or(0.0),
                                          r.metrics.omega_new.value_or(0.0)};
            os << fixed(p.value) << ',' << r.seed;
            for (std::size_t k = 0; k < 3; ++k) {
                os << ',' << fixed(row[k]);
                sum[k] += row[k];
            }
            for (std::size_t l = 0; l < layers; ++l) {
                const double x = l < ratio.size() ? ratio[l] : 0.0;
                os << ',' << fixed(x);
                sum[3 + l] += x;
            }
            os << '\n';
        }
        if (p.runs.empty()) continue;
        os << fixed(p.value) << ",mean";
        for (double s : sum) os << ',' << fixed(s / static_cast<double>(p.runs.size()));
        os << '\n';
    }
}

}  // namespace rogo
