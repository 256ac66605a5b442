#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <unistd.h>

#include "rogo/bench.hpp"
#include "rogo/errors.hpp"
#include "rogo/linalg.hpp"
#include "rogo/rng.hpp"

using namespace rogo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("rogo_test_" + tag + "_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Dataset tiny_images(std::size_t n, std::size_t dim, Rng& rng) {
    Dataset d;
    d.inputs = Matrix(dim, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t p = 0; p < dim; ++p)
            d.inputs(p, j) = std::uniform_int_distribution<int>(0, 255)(rng) / 255.0;
        d.labels.push_back(static_cast<int>(j % 10));
    }
    return d;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream(p, std::ios::binary) << bytes;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Long-double reference for ACC, BWT and Omega_new.
struct RefMetrics {
    long double acc = 0, bwt = 0, omega = 0;
};

RefMetrics ref_metrics(const std::vector<std::vector<double>>& a) {
    const std::size_t t = a.size();
    RefMetrics r;
    for (std::size_t i = 0; i < t; ++i) r.acc += a[t - 1][i];
    r.acc /= t;
    for (std::size_t i = 0; i + 1 < t; ++i) r.bwt += a[t - 1][i] - a[i][i];
    for (std::size_t i = 1; i < t; ++i) r.omega += a[i][i];
    r.bwt /= (t - 1);
    r.omega /= (t - 1);
    return r;
}

AccuracyMatrix to_matrix(const std::vector<std::vector<double>>& a) {
    AccuracyMatrix m(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j) m.set(i, j, a[i][j]);
    return m;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("IDX round trip") {
    TempDir dir("idx");
    Rng rng = substream(61, "bench/idx");
    const Dataset d = tiny_images(7, 12, rng);
    write_idx(dir.path / "img", dir.path / "lab", d, 3, 4);
    const Dataset back = load_idx(dir.path / "img", dir.path / "lab");
    CHECK(back.labels == d.labels);
    CHECK(back.inputs == d.inputs);
    CHECK_THROWS_AS(write_idx(dir.path / "img", dir.path / "lab", d, 3, 5), InvalidInput);
}

TEST_CASE("IDX format errors carry byte offsets") {
    TempDir dir("idx-bad");
    Rng rng = substream(62, "bench/idx-bad");
    const Dataset d = tiny_images(4, 6, rng);
    const fs::path img = dir.path / "img", lab = dir.path / "lab";
    write_idx(img, lab, d, 2, 3);
    const std::string good_img = read_bytes(img), good_lab = read_bytes(lab);

    SUBCASE("bad image magic") {
        std::string b = good_img;
        b[3] = 0x02;
        write_bytes(img, b);
        try {
            load_idx(img, lab);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.offset() == 0);
        }
    }
    SUBCASE("bad label magic") {
        std::string b = good_lab;
        b[3] = 0x03;
        write_bytes(lab, b);
        CHECK_THROWS_AS(load_idx(img, lab), FormatError);
    }
    SUBCASE("label count mismatch") {
        std::string b = good_lab;
        b[7] = 5;
        write_bytes(lab, b);
        try {
            load_idx(img, lab);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.offset() == 4);
        }
    }
    SUBCASE("truncated pixels") {
        write_bytes(img, good_img.substr(0, good_img.size() - 1));
        try {
            load_idx(img, lab);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.offset() == good_img.size() - 1);
        }
    }
    SUBCASE("truncated labels") {
        write_bytes(lab, good_lab.substr(0, good_lab.size() - 2));
        CHECK_THROWS_AS(load_idx(img, lab), FormatError);
    }
    SUBCASE("empty file") {
        write_bytes(img, "");
        CHECK_THROWS_AS(load_idx(img, lab), FormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_idx(dir.path / "nope", lab), IoError);
    }
}

TEST_CASE("IDX edge cases") {
    TempDir dir("idx-edge");
    const fs::path img = dir.path / "img", lab = dir.path / "lab";
    write_idx(img, lab, Dataset{Matrix(784, 0), {}}, 28, 28);
    const Dataset empty = load_idx(img, lab);
    CHECK(empty.size() == 0);
    CHECK(empty.feature_dim() == 784);

    // 3 samples: write, load, write again, compare bytes
    Rng rng = substream(66, "bench/idx-3");
    write_idx(img, lab, tiny_images(3, 4, rng), 2, 2);
    const std::string first_img = read_bytes(img), first_lab = read_bytes(lab);
    CHECK(first_img.size() == 16 + 12);
    const fs::path img2 = dir.path / "img2", lab2 = dir.path / "lab2";
    write_idx(img2, lab2, load_idx(img, lab), 2, 2);
    CHECK(read_bytes(img2) == first_img);
    CHECK(read_bytes(lab2) == first_lab);
}

TEST_CASE("permuted tasks") {
    Rng rng = substream(63, "bench/permuted");
    const Dataset train = tiny_images(30, 16, rng), test = tiny_images(10, 16, rng);
    PermutedSpec spec;
    spec.tasks = 4;
    spec.train_per_task = 20;
    spec.validation_per_task = 5;
    spec.test_per_task = 8;
    const TaskSequence seq = make_permuted_tasks(train, test, spec, 3);
    REQUIRE(seq.size() == 4);
    CHECK(seq.tasks[0].train.inputs == train.head(20).inputs);
    CHECK(seq.tasks[0].test.size() == 8);
    CHECK(seq.tasks[0].validation.size() == 5);
    CHECK(seq.tasks[0].validation.labels[0] == train.labels[20]);

    for (std::size_t t = 1; t < 4; ++t) {
        const auto perm = task_permutation(16, t, 3);
        CHECK(perm != task_permutation(16, 0, 3));
        CHECK(perm == task_permutation(16, t, 3));
        CHECK(seq.tasks[t].train.labels == seq.tasks[0].train.labels);
        for (std::size_t j = 0; j < 20; ++j) {
            std::vector<double> a(16), b(16);
            for (std::size_t p = 0; p < 16; ++p) {
                CHECK(seq.tasks[t].train.inputs(p, j) == train.inputs(perm[p], j));
                a[p] = seq.tasks[t].train.inputs(p, j);
                b[p] = train.inputs(p, j);
            }
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            CHECK(a == b);
        }
        for (std::size_t p = 0; p < 16; ++p)
            CHECK(seq.tasks[t].test.inputs(p, 0) == test.inputs(perm[p], 0));
    }
    CHECK(task_permutation(16, 2, 3) != task_permutation(16, 2, 4));
    spec.tasks = 0;
    CHECK_THROWS_AS(make_permuted_tasks(train, test, spec, 3), InvalidInput);
}

TEST_CASE("one permuted task is the base data") {
    Rng rng = substream(67, "bench/permuted-one");
    const Dataset train = tiny_images(12, 9, rng), test = tiny_images(6, 9, rng);
    PermutedSpec spec;
    spec.tasks = 1;
    spec.train_per_task = 12;
    spec.test_per_task = 6;
    const TaskSequence seq = make_permuted_tasks(train, test, spec, 8);
    REQUIRE(seq.size() == 1);
    CHECK(seq.tasks[0].train.inputs == train.inputs);
    CHECK(seq.tasks[0].test.inputs == test.inputs);
    CHECK(seq.tasks[0].classes == std::pair<int, int>{0, 10});
}

TEST_CASE("split tasks") {
    Rng rng = substream(64, "bench/split");
    const Dataset train = tiny_images(40, 4, rng), test = tiny_images(20, 4, rng);
    const TaskSequence seq = make_split_tasks(train, test, 5, 10, 1);
    REQUIRE(seq.size() == 5);
    for (std::size_t t = 0; t < 5; ++t) {
        CHECK(seq.tasks[t].classes == std::pair<int, int>{2 * int(t), 2 * int(t) + 2});
        CHECK(seq.tasks[t].train.size() == 8);
        for (int y : seq.tasks[t].train.labels) CHECK((y >= 2 * int(t) && y < 2 * int(t) + 2));
    }
    CHECK_THROWS_AS(make_split_tasks(train, test, 3, 10, 1), InvalidInput);
}

TEST_CASE("synthetic tasks live on their supports") {
    SyntheticSpec spec;
    spec.input_dim = 9;
    spec.train_per_task = 50;
    spec.test_per_task = 20;
    for (std::size_t t = 0; t < 3; ++t) spec.supports.push_back(coordinate_block(9, 3 * t, 3));
    const TaskSequence seq = make_synthetic_tasks(spec, 5);
    REQUIRE(seq.size() == 3);
    for (std::size_t t = 0; t < 3; ++t) {
        const Matrix& x = seq.tasks[t].train.inputs;
        for (std::size_t p = 0; p < 9; ++p)
            for (std::size_t j = 0; j < x.cols(); ++j)
                if (p / 3 != t) CHECK(x(p, j) == 0.0);
        for (int y : seq.tasks[t].train.labels) CHECK((y >= 0 && y < 3));
    }
    const TaskSequence again = make_synthetic_tasks(spec, 5);
    CHECK(again.tasks[2].test.inputs == seq.tasks[2].test.inputs);

    spec.supports[1] = coordinate_block(9, 2, 3);
    CHECK_THROWS_AS(make_synthetic_tasks(spec, 5), InvalidInput);
    spec.require_orthogonal = false;
    CHECK_NOTHROW(make_synthetic_tasks(spec, 5));
    CHECK_THROWS_AS(coordinate_block(4, 3, 2), InvalidInput);
}

TEST_CASE("synthetic: one task, and task-1 spectrum on its support") {
    SyntheticSpec spec;
    spec.input_dim = 10;
    spec.train_per_task = 80;
    spec.supports = {coordinate_block(10, 2, 3)};
    const TaskSequence seq = make_synthetic_tasks(spec, 6);
    REQUIRE(seq.size() == 1);
    const SvdResult s = svd(seq.tasks[0].train.inputs);
    CHECK(s.singular[2] > 1.0);
    CHECK(s.singular[3] < 1e-12 * s.singular[0]);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t p = 0; p < 10; ++p)
            if (p < 2 || p >= 5) CHECK(std::abs(s.left(p, k)) < 1e-12);
}

TEST_CASE("metrics: two-task closed form and constant matrices") {
    const double a = 0.81, b = 0.64, c = 0.92;
    const Metrics r = compute_metrics(to_matrix({{a}, {b, c}}));
    CHECK(r.acc == doctest::Approx((b + c) / 2));
    CHECK(*r.bwt == doctest::Approx(b - a));
    CHECK(*r.omega_new == doctest::Approx(c));
    for (std::size_t t : {2, 5, 10}) {
        std::vector<std::vector<double>> m(t);
        for (std::size_t i = 0; i < t; ++i) m[i].assign(i + 1, 0.37);
        const Metrics k = compute_metrics(to_matrix(m));
        CHECK(k.acc == doctest::Approx(0.37));
        CHECK(*k.bwt == doctest::Approx(0.0));
        CHECK(*k.omega_new == doctest::Approx(0.37));
    }
}

TEST_CASE("metrics property: relabeling task indices") {
    // Relabel tasks by pi in a fully measured run; the metrics of the
    // relabeled lower triangle match the closed forms read through pi.
    Rng rng = substream(68, "bench/relabel");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t t = 2 + trial % 6;
        std::vector<std::vector<double>> full(t, std::vector<double>(t));
        std::vector<double> base(t);
        for (auto& row : full)
            for (double& v : row) v = u(rng);
        for (double& v : base) v = u(rng);
        std::vector<std::size_t> pi(t);
        std::iota(pi.begin(), pi.end(), 0);
        std::shuffle(pi.begin(), pi.end(), rng);

        AccuracyMatrix m(t);
        for (std::size_t i = 0; i < t; ++i) {
            for (std::size_t j = 0; j <= i; ++j) m.set(i, j, full[pi[i]][pi[j]]);
            if (i + 1 < t) m.set(i, i + 1, full[pi[i]][pi[i + 1]]);
            m.set_baseline(i, base[pi[i]]);
        }
        const Metrics r = compute_metrics(m, true);
        long double acc = 0, bwt = 0, omega = 0, fwt = 0;
        for (std::size_t i = 0; i < t; ++i) acc += full[pi[t - 1]][pi[i]];
        for (std::size_t i = 0; i + 1 < t; ++i)
            bwt += full[pi[t - 1]][pi[i]] - full[pi[i]][pi[i]];
        for (std::size_t i = 1; i < t; ++i) {
            omega += full[pi[i]][pi[i]];
            fwt += full[pi[i - 1]][pi[i]] - base[pi[i]];
        }
        CHECK(std::abs(r.acc - static_cast<double>(acc / t)) < 1e-14);
        CHECK(std::abs(*r.bwt - static_cast<double>(bwt / (t - 1))) < 1e-14);
        CHECK(std::abs(*r.omega_new - static_cast<double>(omega / (t - 1))) < 1e-14);
        CHECK(std::abs(*r.fwt - static_cast<double>(fwt / (t - 1))) < 1e-14);
        CHECK(r.identity_residual < 1e-12);
    }
}

TEST_CASE("metrics: hand-computed 3-task example") {
    AccuracyMatrix m = to_matrix({{0.9}, {0.8, 0.95}, {0.7, 0.85, 0.9}});
    const Metrics r = compute_metrics(m);
    CHECK(r.acc == doctest::Approx((0.7 + 0.85 + 0.9) / 3));
    CHECK(*r.bwt == doctest::Approx(-0.15));
    CHECK(*r.omega_new == doctest::Approx(0.925));
    CHECK(r.identity_residual < 1e-12);
    CHECK_FALSE(r.fwt);

    CHECK_THROWS_AS(compute_metrics(m, true), InvalidInput);
    m.set(0, 1, 0.3);
    m.set(1, 2, 0.4);
    m.set_baseline(1, 0.1);
    m.set_baseline(2, 0.2);
    CHECK(*compute_metrics(m, true).fwt == doctest::Approx(0.2));
}

TEST_CASE("metrics: single task and incomplete matrices") {
    AccuracyMatrix one(1);
    one.set(0, 0, 0.6);
    const Metrics r = compute_metrics(one);
    CHECK(r.acc == 0.6);
    CHECK_FALSE(r.bwt);
    CHECK_FALSE(r.omega_new);
    CHECK_THROWS_AS(compute_metrics(one, true), InvalidInput);

    AccuracyMatrix holes(3);
    holes.set(0, 0, 0.5);
    holes.set(2, 0, 0.5);
    CHECK_THROWS_AS(compute_metrics(holes), InvalidInput);
    CHECK_THROWS_AS(holes.at(1, 1), InvalidInput);
    CHECK_THROWS_AS(holes.set(0, 0, 1.5), InvalidInput);
    CHECK_THROWS_AS(holes.set(3, 0, 0.5), InvalidInput);
    CHECK_THROWS_AS(compute_metrics(AccuracyMatrix(0)), InvalidInput);
}

TEST_CASE("metrics property: long-double oracle, identity and shift equivariance") {
    Rng rng = substream(65, "bench/metrics");
    std::uniform_real_distribution<double> u(0.0, 0.9);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t t = 2 + trial % 9;
        std::vector<std::vector<double>> a(t);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j <= i; ++j) a[i].push_back(u(rng));
        const Metrics r = compute_metrics(to_matrix(a));
        const RefMetrics ref = ref_metrics(a);
        CHECK(std::abs(r.acc - static_cast<double>(ref.acc)) < 1e-14);
        CHECK(std::abs(*r.bwt - static_cast<double>(ref.bwt)) < 1e-14);
        CHECK(std::abs(*r.omega_new - static_cast<double>(ref.omega)) < 1e-14);
        CHECK(r.identity_residual < 1e-12);

        const double c = 0.05;
        auto shifted = a;
        for (auto& row : shifted)
            for (double& v : row) v += c;
        const Metrics s = compute_metrics(to_matrix(shifted));
        CHECK(s.acc == doctest::Approx(r.acc + c).epsilon(1e-12));
        CHECK(*s.bwt == doctest::Approx(*r.bwt).epsilon(1e-12));
        CHECK(*s.omega_new == doctest::Approx(*r.omega_new + c).epsilon(1e-12));
    }
}

}  // TEST_SUITE
