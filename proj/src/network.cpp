#include "rogo/network.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "rogo/errors.hpp"
#include "rogo/serialize.hpp"

namespace rogo {

Mlp::Mlp(std::vector<std::size_t> layer_dims, HeadMode head, std::size_t task_count,
         bool use_bias, LossKind loss)
    : dims_(std::move(layer_dims)),
      head_(head),
      task_count_(task_count),
      use_bias_(use_bias),
      loss_(loss) {
    if (dims_.size() < 2) throw InvalidInput("Mlp: need at least input and output dims");
    for (std::size_t d : dims_)
        if (d == 0) throw InvalidInput("Mlp: zero-width layer");
    if (task_count_ == 0) throw InvalidInput("Mlp: task_count must be >= 1");
    if (head_ == HeadMode::multi && dims_.back() % task_count_ != 0)
        throw InvalidInput("Mlp: output dim not divisible by task count in multi-head mode");
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        weights_.emplace_back(dims_[l + 1], dims_[l]);
        biases_.emplace_back(dims_[l + 1], 0.0);
    }
}

void Mlp::init(Rng& rng) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(dims_[l] + dims_[l + 1]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Matrix& w = weights_[l];
        for (std::size_t r = 0; r < w.rows(); ++r)
            for (double& x : w.row(r)) x = dist(rng);
        std::fill(biases_[l].begin(), biases_[l].end(), 0.0);
    }
}

std::pair<std::size_t, std::size_t> Mlp::class_range(std::size_t task) const {
    if (head_ == HeadMode::single) return {0, dims_.back()};
    if (task >= task_count_)
        throw InvalidInput("Mlp: task " + std::to_string(task) + " outside multi-head range");
    const std::size_t per = dims_.back() / task_count_;
    return {task * per, (task + 1) * per};
}

std::size_t Mlp::parameter_count() const noexcept {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
        n += weights_[l].size() + (use_bias_ ? biases_[l].size() : 0);
    return n;
}

bool Mlp::all_finite() const noexcept {
    for (std::size_t l = 0; l < weights_.size(); ++l)
        if (!weights_[l].all_finite() || !rogo::all_finite(biases_[l])) return false;
    return true;
}

ForwardResult forward(const Mlp& net, const Matrix& batch, std::size_t task) {
    if (batch.rows() != net.input_dim())
        throw InvalidInput("forward: batch has " + std::to_string(batch.rows()) +
                           " rows, network expects " + std::to_string(net.input_dim()));
    const auto [lo, hi] = net.class_range(task);
    ForwardResult out;
    out.inputs_per_layer.reserve(net.num_layers());
    out.pre_activations.reserve(net.num_layers());
    Matrix h = batch;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        Matrix z = matmul(net.weight(l), h);
        if (net.use_bias()) {
            const Vector& b = net.bias(l);
            for (std::size_t r = 0; r < z.rows(); ++r)
                for (double& x : z.row(r)) x += b[r];
        }
        out.inputs_per_layer.push_back(std::move(h));
        const bool last = l + 1 == net.num_layers();
        if (!last) {
            h = z;
            for (std::size_t r = 0; r < h.rows(); ++r)
                for (double& x : h.row(r)) x = x > 0.0 ? x : 0.0;
        }
        out.pre_activations.push_back(std::move(z));
    }
    const Matrix& z = out.pre_activations.back();
    out.logits = Matrix(hi - lo, z.cols());
    for (std::size_t r = lo; r < hi; ++r)
        std::copy(z.row(r).begin(), z.row(r).end(), out.logits.row(r - lo).begin());
    return out;
}

namespace {

void check_labels(const Mlp& net, const Matrix& batch, const Labels& labels, std::size_t task) {
    if (labels.size() != batch.cols())
        throw InvalidInput("labels: " + std::to_string(labels.size()) + " labels for " +
                           std::to_string(batch.cols()) + " samples");
    const auto [lo, hi] = net.class_range(task);
    for (int y : labels)
        if (y < static_cast<int>(lo) || y >= static_cast<int>(hi))
            throw InvalidInput("labels: label " + std::to_string(y) + " outside task range [" +
                               std::to_string(lo) + ", " + std::to_string(hi) + ")");
}

// Per-sample losses and the output error (classes x N) of the task slice.
double output_error(const Mlp& net, const Matrix& logits, const Labels& labels, std::size_t lo,
                    Matrix* error) {
    const std::size_t classes = logits.rows();
    const std::size_t n = logits.cols();
    if (error) *error = Matrix(classes, n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const auto y = static_cast<std::size_t>(labels[j]) - lo;
        if (net.loss_kind() == LossKind::cross_entropy) {
            double m = logits(0, j);
            for (std::size_t c = 1; c < classes; ++c) m = std::max(m, logits(c, j));
            double s = 0.0;
            for (std::size_t c = 0; c < classes; ++c) s += std::exp(logits(c, j) - m);
            const double log_z = m + std::log(s);
            total += log_z - logits(y, j);
            if (error)
                for (std::size_t c = 0; c < classes; ++c)
                    (*error)(c, j) = std::exp(logits(c, j) - log_z) - (c == y ? 1.0 : 0.0);
        } else {
            for (std::size_t c = 0; c < classes; ++c) {
                const double r = logits(c, j) - (c == y ? 1.0 : 0.0);
                total += 0.5 * r * r;
                if (error) (*error)(c, j) = r;
            }
        }
    }
    return total / static_cast<double>(n);
}

}  // namespace

Matrix BatchTrace::per_sample_grad(std::size_t layer, std::size_t sample) const {
    const Matrix& d = deltas.at(layer);
    const Matrix& h = inputs_per_layer.at(layer);
    Matrix g(d.rows(), h.rows());
    for (std::size_t r = 0; r < d.rows(); ++r) {
        const double dr = d(r, sample);
        for (std::size_t c = 0; c < h.rows(); ++c) g(r, c) = dr * h(c, sample);
    }
    return g;
}

BatchTrace backward(const Mlp& net, const Matrix& batch, const Labels& labels, std::size_t task) {
    check_labels(net, batch, labels, task);
    if (batch.cols() == 0) throw InvalidInput("backward: empty batch");
    ForwardResult fw = forward(net, batch, task);
    const auto [lo, hi] = net.class_range(task);
    const std::size_t n = batch.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    BatchTrace t;
    Matrix slice_error;
    t.loss = output_error(net, fw.logits, labels, lo, &slice_error);

    const std::size_t layers = net.num_layers();
    t.deltas.resize(layers);
    t.mean_grad.resize(layers);
    t.bias_grad.resize(layers);
    Matrix delta(net.output_dim(), n);
    for (std::size_t r = lo; r < hi; ++r)
        std::copy(slice_error.row(r - lo).begin(), slice_error.row(r - lo).end(),
                  delta.row(r).begin());

    for (std::size_t l = layers; l-- > 0;) {
        const Matrix& h = fw.inputs_per_layer[l];
        Matrix g = matmul_nt(delta, h);
        g *= inv_n;
        t.mean_grad[l] = std::move(g);
        Vector bg(delta.rows(), 0.0);
        if (net.use_bias())
            for (std::size_t r = 0; r < delta.rows(); ++r) {
                double s = 0.0;
                for (double x : delta.row(r)) s += x;
                bg[r] = s * inv_n;
            }
        t.bias_grad[l] = std::move(bg);
        if (l > 0) {
            Matrix prev = matmul_tn(net.weight(l), delta);
            const Matrix& z = fw.pre_activations[l - 1];
            for (std::size_t i = 0; i < prev.size(); ++i)
                if (!(z.data()[i] > 0.0)) prev.data()[i] = 0.0;
            t.deltas[l] = std::move(delta);
            delta = std::move(prev);
        } else {
            t.deltas[l] = std::move(delta);
        }
    }
    t.inputs_per_layer = std::move(fw.inputs_per_layer);
    return t;
}

double batch_loss(const Mlp& net, const Matrix& batch, const Labels& labels, std::size_t task) {
    check_labels(net, batch, labels, task);
    if (batch.cols() == 0) throw InvalidInput("batch_loss: empty batch");
    const ForwardResult fw = forward(net, batch, task);
    return output_error(net, fw.logits, labels, net.class_range(task).first, nullptr);
}

double accuracy(const Mlp& net, const Matrix& inputs, const Labels& labels, std::size_t task,
                std::size_t chunk) {
    check_labels(net, inputs, labels, task);
    const std::size_t n = inputs.cols();
    if (n == 0) return 0.0;
    const auto lo = net.class_range(task).first;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t count = std::min(chunk, n - start);
        Matrix part(inputs.rows(), count);
        for (std::size_t r = 0; r < inputs.rows(); ++r)
            std::copy_n(inputs.row(r).begin() + static_cast<std::ptrdiff_t>(start), count,
                        part.row(r).begin());
        const Matrix logits = forward(net, part, task).logits;
        for (std::size_t j = 0; j < count; ++j) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < logits.rows(); ++c)
                if (logits(c, j) > logits(best, j)) best = c;
            if (static_cast<int>(best + lo) == labels[start + j]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

namespace {

bool same_pattern(const ForwardResult& a, const ForwardResult& b) {
    for (std::size_t l = 0; l + 1 < a.pre_activations.size(); ++l) {
        const auto& za = a.pre_activations[l].values();
        const auto& zb = b.pre_activations[l].values();
        for (std::size_t i = 0; i < za.size(); ++i)
            if ((za[i] > 0.0) != (zb[i] > 0.0)) return false;
    }
    return true;
}

}  // namespace

double finite_diff_check(const Mlp& net, const Matrix& batch, const Labels& labels,
                         std::size_t task, double step, Rng& rng, std::size_t coords) {
    if (!(step > 0.0)) throw InvalidInput("finite_diff_check: step must be positive");
    const BatchTrace trace = backward(net, batch, labels, task);
    const ForwardResult base = forward(net, batch, task);
    std::size_t total = 0;
    for (std::size_t l = 0; l < net.num_layers(); ++l) total += net.weight(l).size();
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);

    Mlp probe = net;
    double worst = 0.0;
    std::size_t checked = 0;
    std::size_t attempts = 0;
    while (checked < coords && attempts < 100 * coords) {
        ++attempts;
        std::size_t idx = pick(rng);
        std::size_t l = 0;
        while (idx >= net.weight(l).size()) {
            idx -= net.weight(l).size();
            ++l;
        }
        double& w = probe.weight(l).data()[idx];
        const double saved = w;
        w = saved + step;
        const ForwardResult up = forward(probe, batch, task);
        const double f_up = batch_loss(probe, batch, labels, task);
        w = saved - step;
        const ForwardResult down = forward(probe, batch, task);
        const double f_down = batch_loss(probe, batch, labels, task);
        w = saved;
        if (!same_pattern(base, up) || !same_pattern(base, down)) continue;
        const double numeric = (f_up - f_down) / (2.0 * step);
        const double analytic = trace.mean_grad[l].data()[idx];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
        ++checked;
    }
    return worst;
}

void sgd_step(Mlp& net, std::span<const Matrix> weight_grads, std::span<const Vector> bias_grads,
              double lr) {
    if (weight_grads.size() != net.num_layers())
        throw InvalidInput("sgd_step: expected one gradient per layer");
    if (!bias_grads.empty() && bias_grads.size() != net.num_layers())
        throw InvalidInput("sgd_step: expected one bias gradient per layer");
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const Matrix& g = weight_grads[l];
        if (g.rows() != net.weight(l).rows() || g.cols() != net.weight(l).cols())
            throw InvalidInput("sgd_step: gradient shape mismatch at layer " + std::to_string(l));
        if (!g.all_finite())
            throw InvalidInput("sgd_step: non-finite gradient at layer " + std::to_string(l));
        if (!bias_grads.empty()) {
            if (bias_grads[l].size() != net.bias(l).size())
                throw InvalidInput("sgd_step: bias gradient shape mismatch");
            if (!all_finite(bias_grads[l]))
                throw InvalidInput("sgd_step: non-finite bias gradient at layer " +
                                   std::to_string(l));
        }
    }
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        double* w = net.weight(l).data();
        const double* g = weight_grads[l].data();
        for (std::size_t i = 0; i < weight_grads[l].size(); ++i) w[i] -= lr * g[i];
        if (!bias_grads.empty() && net.use_bias()) {
            Vector& b = net.bias(l);
            for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * bias_grads[l][i];
        }
    }
}

void write_checkpoint(std::ostream& os, const Mlp& net) {
    io::write_u8(os, kCheckpointVersion);
    io::write_u8(os, net.head_mode() == HeadMode::multi ? 1 : 0);
    io::write_u8(os, net.use_bias() ? 1 : 0);
    io::write_u8(os, net.loss_kind() == LossKind::squared ? 1 : 0);
    io::write_u64(os, net.task_count());
    io::write_u64(os, net.layer_dims().size());
    for (std::size_t d : net.layer_dims()) io::write_u64(os, d);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        io::write_doubles(os, net.weight(l).values());
        io::write_doubles(os, net.bias(l));
    }
}

Mlp read_checkpoint(std::istream& is) {
    const auto version = io::read_u8(is);
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version), 0);
    const auto head = io::read_u8(is) ? HeadMode::multi : HeadMode::single;
    const bool bias = io::read_u8(is) != 0;
    const auto loss = io::read_u8(is) ? LossKind::squared : LossKind::cross_entropy;
    const auto tasks = io::read_u64(is);
    const auto count = io::read_u64(is);
    if (count < 2 || count > 64) throw FormatError("checkpoint: implausible layer count", 12);
    std::vector<std::size_t> dims(count);
    for (auto& d : dims) d = io::read_u64(is);
    Mlp net(dims, head, tasks, bias, loss);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        io::read_doubles(is, std::span<double>(net.weight(l).data(), net.weight(l).size()));
        io::read_doubles(is, net.bias(l));
    }
    if (!net.all_finite()) throw FormatError("checkpoint: non-finite parameters", 0);
    return net;
}

}  // namespace rogo
