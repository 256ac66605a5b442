#include <doctest.h>

#include <sstream>

#include "rogo/config.hpp"
#include "rogo/errors.hpp"
#include "rogo/experiment.hpp"

using namespace rogo;

namespace {

RunConfig synthetic_config(Method m) {
    RunConfig c;
    c.bench.kind = "synthetic";
    c.bench.tasks = 3;
    c.bench.train_per_task = 60;
    c.bench.test_per_task = 30;
    c.bench.hidden = {16};
    c.bench.input_dim = 12;
    c.bench.support_dim = 4;
    c.bench.classes = 3;
    c.method.method = m;
    c.method.epochs = 2;
    c.method.batch_size = 10;
    c.method.rep_samples = 60;
    c.method.relax.zeta = {0.5};
    c.method.relax.probe_batch = 30;
    c.seeds = {4};
    return c;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("task 1 accuracy is identical across methods") {
    std::optional<double> first;
    for (Method m : {Method::plain, Method::gpm, Method::rogo, Method::rogo_exp}) {
        const SeedRun r = run_seed(synthetic_config(m), 4);
        if (!first) first = r.accuracy.at(0, 0);
        CHECK(r.accuracy.at(0, 0) == *first);
    }
}

TEST_CASE("plain method on one task is a vanilla supervised run") {
    RunConfig c = synthetic_config(Method::plain);
    c.bench.tasks = 1;
    c.bench.input_dim = 4;
    c.fwt = false;
    const SeedRun r = run_seed(c, 4);

    const TaskSequence seq = build_sequence(c.bench, 4);
    Mlp net = build_network(c.bench, seq, 4);
    MethodConfig m = c.method;
    m.seed = 4;
    auto states = initial_states(net, m);
    train_task(net, seq.tasks[0].train, 0, states, m);
    CHECK(net == r.final_net);
    CHECK(r.metrics.acc == accuracy(net, seq.tasks[0].test.inputs, seq.tasks[0].test.labels, 0));
}

TEST_CASE("zeta = 1 reduces ROGO to GPM exactly") {
    RunConfig rogo = synthetic_config(Method::rogo);
    rogo.method.relax.zeta = {1.0};
    const RunConfig gpm = synthetic_config(Method::gpm);
    const SeedRun a = run_seed(rogo, 4), b = run_seed(gpm, 4);
    CHECK(a.final_net == b.final_net);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j <= i; ++j) CHECK(a.accuracy.at(i, j) == b.accuracy.at(i, j));
    for (const auto& rep : a.reports)
        for (std::size_t d : rep.relaxing_dims) CHECK(d == 0);
}

TEST_CASE("artifacts are reproducible byte for byte") {
    const RunConfig c = synthetic_config(Method::rogo);
    std::ostringstream a, b;
    write_accuracy_csv(a, {run_seed(c, 4)});
    write_accuracy_csv(b, {run_seed(c, 4)});
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("run,task_i,task_j,accuracy\n", 0) == 0);
    std::size_t rows = 0;
    for (char ch : a.str()) rows += ch == '\n';
    CHECK(rows == 1 + 6);

    const std::string json = summary_json(c, {run_seed(c, 4)});
    CHECK(json.find("\"omega_new\"") != std::string::npos);
    CHECK(json.find("\"mean_relaxing_ratio\"") != std::string::npos);
}

TEST_CASE("fwt baselines and metrics are filled") {
    RunConfig c = synthetic_config(Method::gpm);
    c.fwt = true;
    const SeedRun r = run_seed(c, 4);
    CHECK(r.accuracy.forward_complete());
    CHECK(r.metrics.fwt.has_value());
    CHECK(r.metrics.identity_residual < 1e-12);
    c.fwt = false;
    CHECK_FALSE(run_seed(c, 4).metrics.fwt.has_value());
}

TEST_CASE("orthogonal synthetic supports: GPM keeps old tasks, plain SGD does not") {
    RunConfig gpm = synthetic_config(Method::gpm);
    gpm.bench.bias = false;
    gpm.method.epsilon = {1.0};
    gpm.method.epochs = 5;
    RunConfig plain = gpm;
    plain.method.method = Method::plain;
    const SeedRun g = run_seed(gpm, 2), p = run_seed(plain, 2);
    CHECK(*g.metrics.bwt == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(*p.metrics.bwt < *g.metrics.bwt);
}

TEST_CASE("rogo_exp reports stored parameters") {
    const SeedRun r = run_seed(synthetic_config(Method::rogo_exp), 4);
    CHECK(r.extra_parameters == r.reports.back().extra_parameters);
    std::size_t prev = 0;
    for (const auto& rep : r.reports) {
        CHECK(rep.extra_parameters >= prev);
        prev = rep.extra_parameters;
    }
    CHECK(run_seed(synthetic_config(Method::rogo), 4).extra_parameters == 0);
}

TEST_CASE("sweeps") {
    RunConfig c = synthetic_config(Method::rogo);
    CHECK_THROWS_AS(run_sweep(c, SweepAxis::beta), InvalidInput);
    c.sweep_zeta = {0.5, 1.0};
    const auto points = run_sweep(c, SweepAxis::zeta);
    REQUIRE(points.size() == 2);
    CHECK(points[0].value == 0.5);
    CHECK(points[1].runs.size() == 1);
    CHECK(mean_relaxing_ratio(points[1].runs[0]) == std::vector<double>(2, 0.0));
    std::ostringstream csv;
    write_sweep_csv(csv, points);
    CHECK(csv.str().find("mean") != std::string::npos);
    CHECK(parse_axis("epsilon") == SweepAxis::epsilon);
    CHECK(to_string(SweepAxis::beta) == "beta");
    CHECK_THROWS_AS(parse_axis("lr"), InvalidInput);
}

TEST_CASE("build_network follows the head mode") {
    RunConfig c = synthetic_config(Method::gpm);
    const TaskSequence seq = build_sequence(c.bench, 1);
    CHECK(build_network(c.bench, seq, 1).layer_dims() == std::vector<std::size_t>{12, 16, 3});
    c.bench.kind = "split";
    c.bench.data_dir = "/nonexistent";
    CHECK_THROWS_AS(build_sequence(c.bench, 1), IoError);
}

}  // TEST_SUITE
