#include "rogo/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "rogo/errors.hpp"
#include "rogo/rng.hpp"

namespace rogo {

Dataset Dataset::select(std::span<const std::size_t> indices) const {
    Dataset out;
    out.inputs = Matrix(inputs.rows(), indices.size());
    out.labels.reserve(indices.size());
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
        const auto src = inputs.row(r);
        auto dst = out.inputs.row(r);
        for (std::size_t j = 0; j < indices.size(); ++j) dst[j] = src[indices[j]];
    }
    for (std::size_t i : indices) out.labels.push_back(labels.at(i));
    return out;
}

Dataset Dataset::head(std::size_t count) const {
    count = std::min(count, size());
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), 0);
    return select(idx);
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off, const std::string& what) {
    if (off + 4 > b.size()) throw FormatError(what + ": truncated header", b.size());
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
           (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                           static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(bytes, 4);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    const auto img = read_file(images);
    const auto lab = read_file(labels);
    const std::string iname = images.string();
    const std::string lname = labels.string();

    const std::uint32_t im = be32(img, 0, iname);
    if (im != kImageMagic) throw FormatError(iname + ": bad image magic " + std::to_string(im), 0);
    const std::uint32_t lm = be32(lab, 0, lname);
    if (lm != kLabelMagic) throw FormatError(lname + ": bad label magic " + std::to_string(lm), 0);

    const std::size_t n = be32(img, 4, iname);
    const std::size_t rows = be32(img, 8, iname);
    const std::size_t cols = be32(img, 12, iname);
    const std::size_t nl = be32(lab, 4, lname);
    if (nl != n)
        throw FormatError(lname + ": " + std::to_string(nl) + " labels for " + std::to_string(n) +
                              " images",
                          4);
    const std::size_t dim = rows * cols;
    if (img.size() < 16 + n * dim) throw FormatError(iname + ": truncated pixel data", img.size());
    if (lab.size() < 8 + n) throw FormatError(lname + ": truncated label data", lab.size());

    Dataset d;
    d.inputs = Matrix(dim, n);
    d.labels.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const unsigned char* px = img.data() + 16 + j * dim;
        for (std::size_t p = 0; p < dim; ++p) d.inputs(p, j) = px[p] / 255.0;
        d.labels[j] = lab[8 + j];
    }
    return d;
}

void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
               const Dataset& data, std::size_t rows, std::size_t cols) {
    if (rows * cols != data.feature_dim())
        throw InvalidInput("write_idx: rows * cols must equal the feature dimension");
    std::ofstream img(images, std::ios::binary);
    std::ofstream lab(labels, std::ios::binary);
    if (!img || !lab) throw IoError("write_idx: cannot open output files");
    const auto n = static_cast<std::uint32_t>(data.size());
    put_be32(img, kImageMagic);
    put_be32(img, n);
    put_be32(img, static_cast<std::uint32_t>(rows));
    put_be32(img, static_cast<std::uint32_t>(cols));
    for (std::size_t j = 0; j < data.size(); ++j)
        for (std::size_t p = 0; p < data.feature_dim(); ++p) {
            const double x = std::clamp(data.inputs(p, j), 0.0, 1.0);
            img.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * x))));
        }
    put_be32(lab, kLabelMagic);
    put_be32(lab, n);
    for (int y : data.labels) lab.put(static_cast<char>(static_cast<unsigned char>(y)));
}

std::vector<std::size_t> task_permutation(std::size_t dim, std::size_t task, std::uint64_t seed) {
    std::vector<std::size_t> perm(dim);
    std::iota(perm.begin(), perm.end(), 0);
    if (task == 0) return perm;
    Rng rng = substream(seed, "permutation/" + std::to_string(task));
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

namespace {

Dataset permute_pixels(const Dataset& d, const std::vector<std::size_t>& perm) {
    Dataset out;
    out.labels = d.labels;
    out.inputs = Matrix(d.inputs.rows(), d.inputs.cols());
    for (std::size_t p = 0; p < perm.size(); ++p) {
        const auto src = d.inputs.row(perm[p]);
        std::copy(src.begin(), src.end(), out.inputs.row(p).begin());
    }
    return out;
}

Dataset slice(const Dataset& d, std::size_t first, std::size_t count) {
    count = std::min(count, d.size() > first ? d.size() - first : 0);
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), first);
    return d.select(idx);
}

}  // namespace

TaskSequence make_permuted_tasks(const Dataset& base_train, const Dataset& base_test,
                                 const PermutedSpec& spec, std::uint64_t seed) {
    if (spec.tasks < 1) throw InvalidInput("make_permuted_tasks: need at least one task");
    if (base_train.feature_dim() != base_test.feature_dim())
        throw InvalidInput("make_permuted_tasks: train and test feature dims differ");
    const Dataset train = slice(base_train, 0, spec.train_per_task);
    const Dataset val = slice(base_train, spec.train_per_task, spec.validation_per_task);
    const Dataset test = slice(base_test, 0, spec.test_per_task);
    TaskSequence seq;
    seq.kind = SequenceKind::permuted;
    seq.seed = seed;
    for (std::size_t t = 0; t < spec.tasks; ++t) {
        const auto perm = task_permutation(train.feature_dim(), t, seed);
        seq.tasks.push_back({permute_pixels(train, perm), permute_pixels(val, perm),
                             permute_pixels(test, perm),
                             {0, static_cast<int>(spec.classes)}});
    }
    return seq;
}

TaskSequence make_split_tasks(const Dataset& base_train, const Dataset& base_test,
                              std::size_t tasks, std::size_t classes, std::uint64_t seed) {
    if (tasks < 1 || classes % tasks != 0)
        throw InvalidInput("make_split_tasks: classes must divide evenly into tasks");
    const std::size_t per = classes / tasks;
    TaskSequence seq;
    seq.kind = SequenceKind::split;
    seq.seed = seed;
    auto pick = [&](const Dataset& d, int lo, int hi) {
        std::vector<std::size_t> idx;
        for (std::size_t j = 0; j < d.size(); ++j)
            if (d.labels[j] >= lo && d.labels[j] < hi) idx.push_back(j);
        return d.select(idx);
    };
    for (std::size_t t = 0; t < tasks; ++t) {
        const int lo = static_cast<int>(t * per);
        const int hi = static_cast<int>((t + 1) * per);
        seq.tasks.push_back({pick(base_train, lo, hi), Dataset{Matrix(base_train.feature_dim(), 0), {}},
                             pick(base_test, lo, hi), {lo, hi}});
    }
    return seq;
}

Matrix coordinate_block(std::size_t dim, std::size_t first, std::size_t count) {
    if (first + count > dim) throw InvalidInput("coordinate_block: block exceeds dimension");
    Matrix b(dim, count);
    for (std::size_t i = 0; i < count; ++i) b(first + i, i) = 1.0;
    return b;
}

TaskSequence make_synthetic_tasks(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.supports.empty()) throw InvalidInput("make_synthetic_tasks: no task supports");
    if (spec.classes < 2) throw InvalidInput("make_synthetic_tasks: need at least two classes");
    std::vector<Matrix> bases;
    for (const auto& s : spec.supports) {
        if (s.rows() != spec.input_dim)
            throw InvalidInput("make_synthetic_tasks: support dimension mismatch");
        bases.push_back(orthonormalize(s));
    }
    if (spec.require_orthogonal)
        for (std::size_t i = 0; i < bases.size(); ++i)
            for (std::size_t j = i + 1; j < bases.size(); ++j)
                if (matmul_tn(bases[i], bases[j]).max_abs() > 1e-10)
                    throw InvalidInput("make_synthetic_tasks: supports of tasks " +
                                       std::to_string(i) + " and " + std::to_string(j) +
                                       " overlap");

    Rng teacher_rng = substream(seed, "teacher");
    const Matrix teacher = random_normal(spec.classes, spec.input_dim, teacher_rng);
    auto draw = [&](const Matrix& basis, std::size_t n, Rng& rng) {
        Dataset d;
        d.inputs = matmul(basis, random_normal(basis.cols(), n, rng));
        const Matrix scores = matmul(teacher, d.inputs);
        d.labels.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < spec.classes; ++c)
                if (scores(c, j) > scores(best, j)) best = c;
            d.labels[j] = static_cast<int>(best);
        }
        return d;
    };
    TaskSequence seq;
    seq.kind = SequenceKind::synthetic;
    seq.seed = seed;
    for (std::size_t t = 0; t < bases.size(); ++t) {
        Rng rng = substream(seed, "synthetic/" + std::to_string(t));
        Dataset train = draw(bases[t], spec.train_per_task, rng);
        Dataset test = draw(bases[t], spec.test_per_task, rng);
        seq.tasks.push_back({std::move(train), Dataset{Matrix(spec.input_dim, 0), {}},
                             std::move(test), {0, static_cast<int>(spec.classes)}});
    }
    return seq;
}

AccuracyMatrix::AccuracyMatrix(std::size_t tasks) : n_(tasks), a_(tasks * tasks), b_(tasks) {}

void AccuracyMatrix::set(std::size_t after, std::size_t task, double acc) {
    if (after >= n_ || task >= n_) throw InvalidInput("AccuracyMatrix: index out of range");
    if (!(acc >= 0.0 && acc <= 1.0)) throw InvalidInput("AccuracyMatrix: accuracy outside [0, 1]");
    a_[after * n_ + task] = acc;
}

std::optional<double> AccuracyMatrix::get(std::size_t after, std::size_t task) const {
    if (after >= n_ || task >= n_) return std::nullopt;
    return a_[after * n_ + task];
}

double AccuracyMatrix::at(std::size_t after, std::size_t task) const {
    const auto v = get(after, task);
    if (!v) throw InvalidInput("AccuracyMatrix: entry (" + std::to_string(after) + ", " +
                               std::to_string(task) + ") missing");
    return *v;
}

void AccuracyMatrix::set_baseline(std::size_t task, double acc) {
    if (task >= n_) throw InvalidInput("AccuracyMatrix: baseline index out of range");
    if (!(acc >= 0.0 && acc <= 1.0)) throw InvalidInput("AccuracyMatrix: accuracy outside [0, 1]");
    b_[task] = acc;
}

std::optional<double> AccuracyMatrix::baseline(std::size_t task) const {
    return task < n_ ? b_[task] : std::nullopt;
}

bool AccuracyMatrix::lower_complete() const {
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            if (!a_[i * n_ + j]) return false;
    return true;
}

bool AccuracyMatrix::forward_complete() const {
    for (std::size_t i = 1; i < n_; ++i)
        if (!a_[(i - 1) * n_ + i] || !b_[i]) return false;
    return true;
}

Metrics compute_metrics(const AccuracyMatrix& m, bool with_fwt) {
    const std::size_t t = m.tasks();
    if (t == 0) throw InvalidInput("compute_metrics: empty accuracy matrix");
    if (!m.lower_complete()) throw InvalidInput("compute_metrics: lower triangle incomplete");
    Metrics out;
    double acc = 0.0;
    for (std::size_t i = 0; i < t; ++i) acc += m.at(t - 1, i);
    out.acc = acc / static_cast<double>(t);
    if (t >= 2) {
        const double denom = static_cast<double>(t - 1);
        double bwt = 0.0;
        double omega = 0.0;
        for (std::size_t i = 0; i + 1 < t; ++i) bwt += m.at(t - 1, i) - m.at(i, i);
        for (std::size_t i = 1; i < t; ++i) omega += m.at(i, i);
        out.bwt = bwt / denom;
        out.omega_new = omega / denom;
        const double rhs = static_cast<double>(t) / denom * out.acc - *out.bwt - m.at(0, 0) / denom;
        out.identity_residual = std::abs(*out.omega_new - rhs);
        if (out.identity_residual > 1e-12)
            throw Error("compute_metrics: Omega_new identity violated by " +
                        std::to_string(out.identity_residual));
    }
    if (with_fwt) {
        if (t < 2) throw InvalidInput("compute_metrics: FWT needs at least two tasks");
        if (!m.forward_complete())
            throw InvalidInput("compute_metrics: FWT needs the superdiagonal and baselines");
        double fwt = 0.0;
        for (std::size_t i = 1; i < t; ++i) fwt += *m.get(i - 1, i) - *m.baseline(i);
        out.fwt = fwt / static_cast<double>(t - 1);
    }
    return out;
}

}  // namespace rogo
