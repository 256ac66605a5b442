#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "rogo/config.hpp"
#include "rogo/errors.hpp"

using namespace rogo;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "test.ini");
}

std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return 0;
}

const char* kSynthetic = R"(
[run]
method = rogo
seeds = 1
fwt = false
[benchmark]
kind = synthetic
tasks = 2
train_per_task = 30
test_per_task = 10
hidden = 8
input_dim = 8
support_dim = 4
classes = 3
[method]
epochs = 1
batch_size = 10
rep_samples = 30
[relax]
probe_batch = 10
)";

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ROGO_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() / ("rogo_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name) << text;
        return dir / name;
    }
};

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults and overrides") {
    const RunConfig d = parse("");
    CHECK(d == RunConfig{});
    const RunConfig c = parse(R"(
# comment
[run]
seeds = 1, 2, 3   # trailing comment
[method]
name = gpm
epsilon = 0.95, 0.99, 0.99
lr = 0.01
[relax]
zeta = 0.8
k_g = 4
[benchmark]
hidden = 50, 20
bias = false
[sweep]
beta = 0, 0.5, 1
)");
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(c.method.method == Method::gpm);
    CHECK(c.method.epsilon == std::vector<double>{0.95, 0.99, 0.99});
    CHECK(c.method.lr == 0.01);
    CHECK(c.method.relax.zeta == std::vector<double>{0.8});
    CHECK(c.method.relax.k_g == 4);
    CHECK(c.bench.hidden == std::vector<std::size_t>{50, 20});
    CHECK_FALSE(c.bench.bias);
    CHECK(c.sweep_beta == std::vector<double>{0, 0.5, 1});
}

TEST_CASE("errors name the offending line") {
    CHECK(error_line("[run]\nseeds = 1\n[nope]\n") == 3);
    CHECK(error_line("[method]\nlr = fast\n") == 2);
    CHECK(error_line("[method]\n\nbogus = 1\n") == 3);
    CHECK(error_line("lr = 0.1\n") == 1);
    CHECK(error_line("[method\n") == 1);
    CHECK(error_line("[method]\nlr\n") == 2);
    CHECK(error_line("[relax]\nk_g = -1\n") == 2);
    CHECK(error_line("[method]\nname = ewc\n") == 2);
    // semantic validation runs after the last line
    CHECK(error_line("[method]\nepsilon = 1.5\n\n") == 3);
    CHECK_THROWS_AS(parse("[relax]\nzeta = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("[run]\nseeds =\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/x.ini"), ConfigError);
}

TEST_CASE("effective config round trip") {
    RunConfig c = parse(kSynthetic);
    c.method.beta = {0.1, 1e-7};
    c.method.lr = 0.1 + 0.2;  // not representable in few digits
    c.sweep_zeta = {0.2, 0.9};
    c.tol.angle_tol = 3e-10;
    std::ostringstream out;
    write_config(out, c);
    CHECK(parse(out.str()) == c);

    std::ostringstream again;
    write_config(again, parse(out.str()));
    CHECK(again.str() == out.str());
}

TEST_CASE("cli exit codes") {
    Scratch s;
    const fs::path good = s.write("good.ini", kSynthetic);
    const std::string out = "--out " + (s.dir / "out").string();

    CHECK(run_cli("run --config " + good.string() + " " + out) == 0);
    CHECK(fs::exists(s.dir / "out" / "summary.json"));
    CHECK(fs::exists(s.dir / "out" / "accuracy.csv"));
    CHECK(fs::exists(s.dir / "out" / "effective_config.ini"));
    CHECK(load_config(s.dir / "out" / "effective_config.ini").bench.kind == "synthetic");

    CHECK(run_cli("") == 2);
    CHECK(run_cli("run") == 2);
    CHECK(run_cli("run --config " + (s.dir / "missing.ini").string()) == 2);
    CHECK(run_cli("run --config " + s.write("bad.ini", "[method]\nlr = x\n").string()) == 2);
    CHECK(run_cli("verify --suite nonsense") == 2);
    CHECK(run_cli("sweep --config " + good.string() + " --axis gamma " + out) == 2);
    // empty sweep list for the requested axis
    CHECK(run_cli("sweep --config " + good.string() + " --axis beta " + out) == 2);

    const std::string diverge = std::string(kSynthetic) + "[method]\nlr = 1e300\n";
    CHECK(run_cli("run --config " + s.write("nan.ini", diverge).string() + " " + out) == 3);

    const std::string no_data = "[benchmark]\nkind = permuted\ndata_dir = " +
                                (s.dir / "no_such_dir").string() + "\n";
    CHECK(run_cli("run --config " + s.write("nodata.ini", no_data).string() + " " + out) == 5);
}

}  // TEST_SUITE
