#include "rogo/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "rogo/errors.hpp"

namespace rogo {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct Cursor {
    const std::string& path;
    std::size_t line;
    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path, line, what); }
};

double to_double(const std::string& v, const Cursor& at) {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || ptr != end) at.fail("expected a number, got '" + v + "'");
    return x;
}

std::uint64_t to_uint(const std::string& v, const Cursor& at) {
    std::uint64_t x = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || ptr != end) at.fail("expected a non-negative integer, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& v, const Cursor& at) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    at.fail("expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& v, const Cursor& at) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(to_double(s, at));
    return out;
}

template <class T>
std::vector<T> to_uints(const std::string& v, const Cursor& at) {
    std::vector<T> out;
    for (const auto& s : split_list(v)) out.push_back(static_cast<T>(to_uint(s, at)));
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const Cursor&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        // [run]
        {"run.method", [](RunConfig& c, const std::string& v, const Cursor& at) {
             try {
                 c.method.method = parse_method(v);
             } catch (const InvalidInput& e) {
                 at.fail(e.what());
             }
         }},
        {"run.seeds", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.seeds = to_uints<std::uint64_t>(v, at);
         }},
        {"run.out", [](RunConfig& c, const std::string& v, const Cursor&) { c.out_dir = v; }},
        {"run.checkpoint", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.checkpoint = to_bool(v, at);
         }},
        {"run.fwt", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.fwt = to_bool(v, at);
         }},
        // [benchmark]
        {"benchmark.kind", [](RunConfig& c, const std::string& v, const Cursor& at) {
             if (v != "permuted" && v != "split" && v != "synthetic")
                 at.fail("benchmark kind must be permuted, split or synthetic");
             c.bench.kind = v;
         }},
        {"benchmark.data_dir", [](RunConfig& c, const std::string& v, const Cursor&) {
             c.bench.data_dir = v;
         }},
        {"benchmark.tasks", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.bench.tasks = to_uint(v, at);
         }},
        {"benchmark.train_per_task", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.bench.train_per_task = to_uint(v, at);
         }},
        {"benchmark.validation_per_task", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.bench.validation_per_task = to_uint(v, at);
         }},
        {"benchmark.test_per_task", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.bench.test_per_task = to_uint(v, at);
         }},
        {"benchmark.classes", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.bench.classes = to_uint(v, at);
         }},
        {"benchmark.hidden", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.bench.hidden = to_uints<std::size_t>(v, at);
         }},
        {"benchmark.bias", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.bench.bias = to_bool(v, at);
         }},
        {"benchmark.loss", [](RunConfig& c, const std::string& v, const Cursor& at) {
             if (v != "cross_entropy" && v != "squared")
                 at.fail("loss must be cross_entropy or squared");
             c.bench.loss = v;
         }},
        {"benchmark.head", [](RunConfig& c, const std::string& v, const Cursor& at) {
             if (v != "auto" && v != "single" && v != "multi")
                 at.fail("head must be auto, single or multi");
             c.bench.head = v;
         }},
        {"benchmark.input_dim", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.bench.input_dim = to_uint(v, at);
         }},
        {"benchmark.support_dim", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.bench.support_dim = to_uint(v, at);
         }},
        // [method]
        {"method.epsilon", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.method.epsilon = to_doubles(v, at);
         }},
        {"method.beta", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.method.beta = to_doubles(v, at);
         }},
        {"method.lr", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.method.lr = to_double(v, at);
         }},
        {"method.lr_scale", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.method.lr_scale = to_double(v, at);
         }},
        {"method.epochs", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.method.epochs = to_uint(v, at);
         }},
        {"method.batch_size", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.method.batch_size = to_uint(v, at);
         }},
        {"method.rep_samples", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.method.rep_samples = to_uint(v, at);
         }},
        // [relax]
        {"relax.zeta", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.method.relax.zeta = to_doubles(v, at);
         }},
        {"relax.k_g", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.method.relax.k_g = to_uint(v, at);
         }},
        {"relax.epsilon_g", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.method.relax.epsilon_g = to_double(v, at);
         }},
        {"relax.e_t", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.method.relax.e_t = to_uint(v, at);
         }},
        {"relax.max_search_rounds", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.method.relax.max_search_rounds = to_uint(v, at);
         }},
        {"relax.probe_batch", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.method.relax.probe_batch = to_uint(v, at);
         }},
        // [tolerance]
        {"tolerance.rank_tol", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.tol.rank_tol = to_double(v, at);
         }},
        {"tolerance.orthonorm_tol", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.tol.orthonorm_tol = to_double(v, at);
         }},
        {"tolerance.angle_tol", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.tol.angle_tol = to_double(v, at);
         }},
        // [sweep]
        {"sweep.zeta", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.sweep_zeta = to_doubles(v, at);
         }},
        {"sweep.beta", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.sweep_beta = to_doubles(v, at);
         }},
        {"sweep.epsilon", [](RunConfig& c, const std::string& v, const Cursor& at) {
             c.sweep_epsilon = to_doubles(v, at);
         }},
    };
    return table;
}

std::string join(const std::vector<double>& v) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    return os.str();
}

template <class T>
std::string join_uints(const std::vector<T>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    return os.str();
}

std::string num(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

}  // namespace

void RunConfig::validate() const {
    if (seeds.empty()) throw InvalidInput("run.seeds must list at least one seed");
    if (bench.tasks < 1) throw InvalidInput("benchmark.tasks must be >= 1");
    if (bench.train_per_task < 1) throw InvalidInput("benchmark.train_per_task must be >= 1");
    if (bench.kind == "synthetic" && bench.support_dim * bench.tasks > bench.input_dim)
        throw InvalidInput("benchmark: synthetic supports do not fit in input_dim");
    for (std::size_t h : bench.hidden)
        if (h == 0) throw InvalidInput("benchmark.hidden: zero-width layer");
    method.validate();
    tol.validate();
}

RunConfig parse_config(std::istream& in, const std::string& path) {
    RunConfig cfg;
    std::string section;
    std::string raw;
    std::size_t line_no = 0;
    static const std::vector<std::string> sections = {"run",    "benchmark", "method",
                                                      "relax",  "tolerance", "sweep"};
    while (std::getline(in, raw)) {
        ++line_no;
        const Cursor at{path, line_no};
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') at.fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (std::find(sections.begin(), sections.end(), section) == sections.end())
                at.fail("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) at.fail("expected key = value");
        if (section.empty()) at.fail("key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        // [method] name is an alias for [run] method
        const std::string full = (section == "method" && key == "name") ? "run.method"
                                                                        : section + "." + key;
        const auto it = setters().find(full);
        if (it == setters().end()) at.fail("unknown key '" + key + "' in [" + section + "]");
        it->second(cfg, value, at);
    }
    try {
        cfg.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(path, line_no, e.what());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
    return parse_config(in, path.string());
}

void write_config(std::ostream& out, const RunConfig& c) {
    out << "# effective configuration (all defaults resolved)\n";
    out << "[run]\n"
        << "method = " << to_string(c.method.method) << "\n"
        << "seeds = " << join_uints(c.seeds) << "\n"
        << "out = " << c.out_dir << "\n"
        << "checkpoint = " << (c.checkpoint ? "true" : "false") << "\n"
        << "fwt = " << (c.fwt ? "true" : "false") << "\n\n";
    out << "[benchmark]\n"
        << "kind = " << c.bench.kind << "\n"
        << "data_dir = " << c.bench.data_dir << "\n"
        << "tasks = " << c.bench.tasks << "\n"
        << "train_per_task = " << c.bench.train_per_task << "\n"
        << "validation_per_task = " << c.bench.validation_per_task << "\n"
        << "test_per_task = " << c.bench.test_per_task << "\n"
        << "classes = " << c.bench.classes << "\n"
        << "hidden = " << join_uints(c.bench.hidden) << "\n"
        << "bias = " << (c.bench.bias ? "true" : "false") << "\n"
        << "loss = " << c.bench.loss << "\n"
        << "head = " << c.bench.head << "\n"
        << "input_dim = " << c.bench.input_dim << "\n"
        << "support_dim = " << c.bench.support_dim << "\n\n";
    out << "[method]\n"
        << "epsilon = " << join(c.method.epsilon) << "\n"
        << "beta = " << join(c.method.beta) << "\n"
        << "lr = " << num(c.method.lr) << "\n"
        << "lr_scale = " << num(c.method.lr_scale) << "\n"
        << "epochs = " << c.method.epochs << "\n"
        << "batch_size = " << c.method.batch_size << "\n"
        << "rep_samples = " << c.method.rep_samples << "\n\n";
    out << "[relax]\n"
        << "zeta = " << join(c.method.relax.zeta) << "\n"
        << "k_g = " << c.method.relax.k_g << "\n"
        << "epsilon_g = " << num(c.method.relax.epsilon_g) << "\n"
        << "e_t = " << c.method.relax.e_t << "\n"
        << "max_search_rounds = " << c.method.relax.max_search_rounds << "\n"
        << "probe_batch = " << c.method.relax.probe_batch << "\n\n";
    out << "[tolerance]\n"
        << "rank_tol = " << num(c.tol.rank_tol) << "\n"
        << "orthonorm_tol = " << num(c.tol.orthonorm_tol) << "\n"
        << "angle_tol = " << num(c.tol.angle_tol) << "\n\n";
    out << "[sweep]\n"
        << "zeta = " << join(c.sweep_zeta) << "\n"
        << "beta = " << join(c.sweep_beta) << "\n"
        << "epsilon = " << join(c.sweep_epsilon) << "\n";
}

}  // namespace rogo
