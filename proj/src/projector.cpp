#include "rogo/projector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "rogo/errors.hpp"

namespace rogo {

namespace {

void require_ambient(const Matrix& g, const Subspace& s, const char* who) {
    if (g.cols() != s.ambient_dim())
        throw InvalidInput(std::string(who) + ": gradient has " + std::to_string(g.cols()) +
                           " columns, subspace ambient is " + std::to_string(s.ambient_dim()));
}

Matrix minus_identity(Matrix s) {
    for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) -= 1.0;
    return s;
}

}  // namespace

LayerTaskState LayerTaskState::fresh(Subspace frozen, double beta) {
    LayerTaskState st;
    st.relaxing = Subspace(frozen.ambient_dim());
    st.complement = frozen;
    st.frozen = std::move(frozen);
    st.scale = Matrix(0, 0);
    st.beta = beta;
    return st;
}

void LayerTaskState::check_invariants(const ToleranceConfig& tol) const {
    if (scale.rows() != relaxing.dim() || scale.cols() != relaxing.dim())
        throw PreconditionError("LayerTaskState: scale is not dim(V) x dim(V)");
    if (relaxing.empty()) return;
    const double max_angle_cos = std::cos(tol.angle_tol);
    for (std::size_t j = 0; j < relaxing.dim(); ++j) {
        const Vector v = relaxing.basis().col(j);
        if (cos_angle(v, frozen) < max_angle_cos - 1e-9)
            throw PreconditionError("LayerTaskState: relaxing basis column " + std::to_string(j) +
                                    " leaves the frozen space");
    }
    if (!complement.empty()) {
        const double leak = matmul_tn(complement.basis(), relaxing.basis()).max_abs();
        if (leak >= 1e-8)
            throw PreconditionError("LayerTaskState: complement not orthogonal to relaxing space");
    }
}

Matrix gpm_project(const Matrix& g, const Subspace& u) {
    require_ambient(g, u, "gpm_project");
    if (u.empty()) return g;
    const Matrix& b = u.basis();
    return g - matmul_nt(matmul(g, b), b);
}

Matrix scaled_project(const Matrix& g, const Subspace& v, const Matrix& s) {
    require_ambient(g, v, "scaled_project");
    if (s.rows() != v.dim() || s.cols() != v.dim())
        throw InvalidInput("scaled_project: scale matrix must be dim(V) x dim(V)");
    if (v.empty()) return Matrix(g.rows(), g.cols());
    const Matrix& b = v.basis();
    return matmul_nt(matmul(matmul(g, b), s), b);
}

Matrix rogo_modify(const Matrix& g, const LayerTaskState& state) {
    Matrix out = gpm_project(g, state.frozen);
    if (!state.relaxing.empty()) out += scaled_project(g, state.relaxing, state.scale);
    return out;
}

Matrix scale_grad(const Matrix& g, const Matrix& w, const LayerTaskState& state) {
    if (state.relaxing.empty()) throw PreconditionError("scale_grad: relaxing space is empty");
    require_ambient(g, state.relaxing, "scale_grad");
    if (w.rows() != g.rows() || w.cols() != g.cols())
        throw InvalidInput("scale_grad: weight and gradient shapes differ");
    const Matrix& b = state.relaxing.basis();
    // d/dS <G, W B (S - I) B^T> = (W B)^T (G B)
    Matrix out = matmul_tn(matmul(w, b), matmul(g, b));
    Matrix reg = minus_identity(state.scale);
    reg *= 2.0 * state.beta;
    out += reg;
    return out;
}

void scale_step(LayerTaskState& state, const Matrix& g, const Matrix& w, double lr) {
    if (state.relaxing.empty()) throw PreconditionError("scale_step: relaxing space is empty");
    require_ambient(g, state.relaxing, "scale_step");
    if (w.rows() != g.rows() || w.cols() != g.cols())
        throw InvalidInput("scale_step: weight and gradient shapes differ");
    const Matrix& b = state.relaxing.basis();
    Matrix step = matmul_tn(matmul(w, b), matmul(g, b));
    step *= lr;
    Matrix d = minus_identity(state.scale);
    d -= step;
    d *= 1.0 / (1.0 + 2.0 * lr * state.beta);
    if (!d.all_finite()) throw NumericalFailure("scale_step: scale matrix became non-finite", 0);
    state.scale = d + Matrix::identity(d.rows());
}

double reg_loss(std::span<const LayerTaskState> states) {
    double total = 0.0;
    for (const auto& st : states) {
        const Matrix d = minus_identity(st.scale);
        double f = 0.0;
        for (double x : d.values()) f += x * x;
        total += st.beta * f;
    }
    return total;
}

void expand_scale(LayerTaskState& state, const Subspace& grown, const ToleranceConfig& tol) {
    const std::size_t old_dim = state.relaxing.dim();
    if (grown.ambient_dim() != state.relaxing.ambient_dim())
        throw InvalidInput("expand_scale: ambient mismatch");
    if (grown.dim() < old_dim) throw InvalidInput("expand_scale: relaxing space cannot shrink");
    for (std::size_t r = 0; r < grown.ambient_dim(); ++r)
        for (std::size_t c = 0; c < old_dim; ++c)
            if (grown.basis()(r, c) != state.relaxing.basis()(r, c))
                throw InvalidInput("expand_scale: existing relaxing basis must be a prefix");
    const std::size_t added = grown.dim() - old_dim;
    if (added == 0) return;
    Matrix s = Matrix::identity(grown.dim());
    for (std::size_t i = 0; i < old_dim; ++i)
        for (std::size_t j = 0; j < old_dim; ++j) s(i, j) = state.scale(i, j);
    state.scale = std::move(s);
    state.relaxing = grown;
    state.complement = complement_within(state.frozen, state.relaxing, tol);
}

Matrix effective_weight(const Matrix& w, const Subspace& v, const Matrix& s) {
    if (v.empty()) return w;
    const Matrix& b = v.basis();
    return w + matmul_nt(matmul(matmul(w, b), minus_identity(s)), b);
}

void consolidate(Mlp& net, std::vector<LayerTaskState>& states) {
    if (states.size() != net.num_layers())
        throw InvalidInput("consolidate: one state per layer expected");
    for (std::size_t l = 0; l < states.size(); ++l) {
        auto& st = states[l];
        if (!st.relaxing.empty())
            net.weight(l) = effective_weight(net.weight(l), st.relaxing, st.scale);
        st.relaxing = Subspace(st.frozen.ambient_dim());
        st.scale = Matrix(0, 0);
        st.complement = st.frozen;
    }
}

void ExpStore::put(std::size_t task, std::vector<ExpEntry> layers) {
    for (const auto& e : layers)
        if (e.scale.rows() != e.relaxing.dim() || e.scale.cols() != e.relaxing.dim())
            throw InvalidInput("ExpStore: scale side must equal dim(V)");
    entries_[task] = std::move(layers);
}

const std::vector<ExpEntry>& ExpStore::at(std::size_t task) const {
    const auto it = entries_.find(task);
    if (it == entries_.end())
        throw LookupError("ExpStore: no entry for task " + std::to_string(task));
    return it->second;
}

std::size_t ExpStore::extra_parameter_count() const {
    std::size_t n = 0;
    for (const auto& [task, layers] : entries_)
        for (const auto& e : layers) {
            const std::size_t k = e.relaxing.dim();
            n += k * e.relaxing.ambient_dim() + k * k;
        }
    return n;
}

std::vector<Matrix> exp_inference_weights(const Mlp& net, const ExpStore& store, std::size_t task) {
    const auto& layers = store.at(task);
    if (layers.size() != net.num_layers())
        throw InvalidInput("exp_inference_weights: stored layer count differs from network");
    std::vector<Matrix> out;
    out.reserve(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Matrix& w = net.weight(l);
        const auto& e = layers[l];
        if (e.relaxing.empty()) {
            out.push_back(w);
            continue;
        }
        const Matrix& b = e.relaxing.basis();
        const Matrix wb = matmul(w, b);
        out.push_back(w - matmul_nt(wb, b) + matmul_nt(matmul(wb, e.scale), b));
    }
    return out;
}

Mlp exp_inference_net(const Mlp& net, const ExpStore& store, std::size_t task) {
    if (!store.contains(task)) return net;
    auto weights = exp_inference_weights(net, store, task);
    Mlp out = net;
    for (std::size_t l = 0; l < weights.size(); ++l) out.weight(l) = std::move(weights[l]);
    return out;
}

std::string to_string(Method m) {
    switch (m) {
        case Method::plain: return "plain";
        case Method::gpm: return "gpm";
        case Method::rogo: return "rogo";
        case Method::rogo_exp: return "rogo_exp";
    }
    return "?";
}

Method parse_method(const std::string& s) {
    if (s == "plain") return Method::plain;
    if (s == "gpm") return Method::gpm;
    if (s == "rogo") return Method::rogo;
    if (s == "rogo_exp") return Method::rogo_exp;
    throw InvalidInput("unknown method '" + s + "' (expected plain, gpm, rogo or rogo_exp)");
}

double MethodConfig::epsilon_for(std::size_t layer) const {
    return epsilon.size() == 1 ? epsilon.front() : epsilon.at(layer);
}

double MethodConfig::beta_for(std::size_t layer) const {
    return beta.size() == 1 ? beta.front() : beta.at(layer);
}

void MethodConfig::validate() const {
    if (epsilon.empty() || beta.empty())
        throw InvalidInput("MethodConfig: epsilon and beta need at least one entry");
    for (double e : epsilon)
        if (!(e > 0.0 && e <= 1.0)) throw InvalidInput("MethodConfig: epsilon must lie in (0, 1]");
    for (double b : beta)
        if (!(b >= 0.0) || !std::isfinite(b))
            throw InvalidInput("MethodConfig: beta must be finite and non-negative");
    if (epochs < 1) throw InvalidInput("MethodConfig: epochs must be >= 1");
    if (batch_size < 1) throw InvalidInput("MethodConfig: batch_size must be >= 1");
    if (rep_samples < 1) throw InvalidInput("MethodConfig: rep_samples must be >= 1");
    if (!(lr >= 0.0) || !(lr_scale >= 0.0)) throw InvalidInput("MethodConfig: negative step size");
    relax.validate();
}

std::vector<LayerTaskState> initial_states(const Mlp& net, const MethodConfig& cfg) {
    std::vector<LayerTaskState> states;
    for (std::size_t l = 0; l < net.num_layers(); ++l)
        states.push_back(LayerTaskState::fresh(Subspace(net.layer_dims()[l]), cfg.beta_for(l)));
    return states;
}

namespace {

bool any_relaxing(const std::vector<LayerTaskState>& states) {
    return std::any_of(states.begin(), states.end(),
                       [](const LayerTaskState& s) { return !s.relaxing.empty(); });
}

Mlp forward_net(const Mlp& net, const std::vector<LayerTaskState>& states) {
    Mlp eff = net;
    for (std::size_t l = 0; l < states.size(); ++l)
        if (!states[l].relaxing.empty())
            eff.weight(l) = effective_weight(net.weight(l), states[l].relaxing, states[l].scale);
    return eff;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

}  // namespace

TaskReport train_task(Mlp& net, const Dataset& train, std::size_t task,
                      std::vector<LayerTaskState>& states, const MethodConfig& cfg,
                      ExpStore* store, const TrainHooks& hooks, const ToleranceConfig& tol) {
    cfg.validate();
    if (states.size() != net.num_layers())
        throw InvalidInput("train_task: one layer state per network layer expected");
    if (train.size() == 0) throw InvalidInput("train_task: empty training set");
    if (cfg.method == Method::rogo_exp && store == nullptr)
        throw InvalidInput("train_task: rogo_exp needs an ExpStore");

    const auto started = std::chrono::steady_clock::now();
    const std::size_t layers = net.num_layers();
    TaskReport report;
    report.task = task;
    for (auto& st : states) {
        report.frozen_dims_before.push_back(st.frozen.dim());
        st.relaxing = Subspace(st.frozen.ambient_dim());
        st.scale = Matrix(0, 0);
        st.complement = st.frozen;
    }

    const bool projecting =
        cfg.method != Method::plain &&
        std::any_of(states.begin(), states.end(),
                    [](const LayerTaskState& s) { return !s.frozen.empty(); });
    const bool relaxing_method = cfg.method == Method::rogo || cfg.method == Method::rogo_exp;
    bool searching = projecting && relaxing_method;
    std::size_t rounds = 0;
    const double lr_scale = cfg.lr_scale > 0.0 ? cfg.lr_scale : cfg.lr;

    const std::string tag = std::to_string(task);
    Rng order_rng = substream(cfg.seed, "batch-order/" + tag);
    Rng probe_rng = substream(cfg.seed, "probe/" + tag);

    std::vector<Matrix> grads(layers);
    std::vector<Vector> bias_grads(layers);
    double last_loss = 0.0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = shuffled_indices(train.size(), order_rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - start);
            const Dataset mb =
                train.select(std::span<const std::size_t>(order.data() + start, count));
            const bool scaled = any_relaxing(states);
            const BatchTrace trace = scaled ? backward(forward_net(net, states), mb.inputs,
                                                       mb.labels, task)
                                            : backward(net, mb.inputs, mb.labels, task);
            loss_sum += trace.loss;
            ++batches;
            for (std::size_t l = 0; l < layers; ++l) {
                const Matrix& g = trace.mean_grad[l];
                auto& st = states[l];
                if (!projecting) {
                    grads[l] = g;
                } else if (st.relaxing.empty()) {
                    grads[l] = gpm_project(g, st.frozen);
                } else {
                    grads[l] = rogo_modify(g, st);
                    scale_step(st, g, net.weight(l), lr_scale);
                }
                if (projecting && hooks.on_projected) hooks.on_projected(task, l, grads[l], st);
                bias_grads[l] = trace.bias_grad[l];
            }
            for (std::size_t l = 0; l < layers; ++l)
                if (!grads[l].all_finite() || !all_finite(bias_grads[l]))
                    throw NumericalFailure("train_task: non-finite gradient at layer " +
                                               std::to_string(l) + " in task " + tag,
                                           batches);
            sgd_step(net, grads, bias_grads, cfg.lr);
            if (!net.all_finite())
                throw NumericalFailure("train_task: parameters became non-finite in task " + tag,
                                       batches);
        }
        last_loss = loss_sum / static_cast<double>(batches);

        const bool search_due = searching && (epoch + 1) % cfg.relax.e_t == 0 &&
                                rounds < cfg.relax.max_search_rounds && epoch + 1 < cfg.epochs;
        if (!search_due) continue;

        const std::size_t probe_n = std::min(cfg.relax.probe_batch, train.size());
        auto probe_idx = shuffled_indices(train.size(), probe_rng);
        probe_idx.resize(probe_n);
        std::sort(probe_idx.begin(), probe_idx.end());
        const Dataset probe = train.select(probe_idx);
        const BatchTrace trace = backward(forward_net(net, states), probe.inputs, probe.labels, task);

        RoundRecord rec;
        rec.round = rounds;
        rec.epoch = epoch + 1;
        std::size_t added = 0;
        for (std::size_t l = 0; l < layers; ++l) {
            auto& st = states[l];
            const Subspace rg = gradient_rep_space(
                RankOneGrads{trace.deltas[l], trace.inputs_per_layer[l]}, cfg.relax.k_g,
                cfg.relax.epsilon_g, tol);
            SearchResult res =
                search_relaxing_space(st.frozen, rg, cfg.relax.zeta_for(l), st.relaxing, tol);
            expand_scale(st, res.relaxing, tol);
            added += res.report.added_dims;
            rec.rg_dims.push_back(rg.dim());
            rec.reports.push_back(std::move(res.report));
        }
        report.rounds.push_back(std::move(rec));
        ++rounds;
        if (added == 0) searching = false;
    }
    report.final_train_loss = last_loss;

    for (std::size_t l = 0; l < layers; ++l) {
        const auto& st = states[l];
        report.relaxing_dims.push_back(st.relaxing.dim());
        report.relaxing_ratio.push_back(
            st.frozen.empty() ? 0.0
                              : static_cast<double>(st.relaxing.dim()) /
                                    static_cast<double>(st.frozen.dim()));
    }

    // The network this task is evaluated with.
    Mlp task_net;
    if (cfg.method == Method::rogo_exp) {
        std::vector<ExpEntry> entries;
        for (const auto& st : states) entries.push_back({st.relaxing, st.scale});
        store->put(task, std::move(entries));
        task_net = exp_inference_net(net, *store, task);
        for (auto& st : states) {
            st.relaxing = Subspace(st.frozen.ambient_dim());
            st.scale = Matrix(0, 0);
            st.complement = st.frozen;
        }
    } else {
        consolidate(net, states);
    }
    const Mlp& rep_net = cfg.method == Method::rogo_exp ? task_net : net;
    if (store) report.extra_parameters = store->extra_parameter_count();

    if (cfg.method != Method::plain) {
        Rng rep_rng = substream(cfg.seed, "representation/" + tag);
        auto idx = shuffled_indices(train.size(), rep_rng);
        idx.resize(std::min(cfg.rep_samples, train.size()));
        std::sort(idx.begin(), idx.end());
        const Dataset sample = train.select(idx);
        const ForwardResult fw = forward(rep_net, sample.inputs, task);
        for (std::size_t l = 0; l < layers; ++l) {
            const Matrix& h = fw.inputs_per_layer[l];
            if (h.max_abs() == 0.0) continue;  // dead layer: nothing to protect
            const Subspace r = extract_representation_space(h, cfg.epsilon_for(l), tol);
            states[l].frozen = extend(states[l].frozen, r, tol);
            states[l].complement = states[l].frozen;
        }
    }
    for (const auto& st : states) report.frozen_dims_after.push_back(st.frozen.dim());
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace rogo
