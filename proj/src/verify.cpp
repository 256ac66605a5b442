#include "rogo/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "rogo/network.hpp"
#include "rogo/projector.hpp"
#include "rogo/relax.hpp"
#include "rogo/rng.hpp"
#include "rogo/subspace.hpp"

namespace rogo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void dump_matrix(std::ostream& os, const char* name, const Matrix& m) {
    os << "  " << name << " (" << m.rows() << "x" << m.cols() << ") =";
    os << std::setprecision(17);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        os << "\n    ";
        for (std::size_t c = 0; c < m.cols(); ++c) os << m(r, c) << ' ';
    }
    os << '\n';
}

/// Rg leaning into U by a random amount, so that searches accept a mix of
/// zero, some and all of Rg's directions.
Subspace leaning_rg(const Subspace& u, std::size_t dim, Rng& rng, double lean) {
    const std::size_t n = u.ambient_dim();
    Matrix inside = matmul(u.basis(), random_normal(u.dim(), dim, rng));
    Matrix noise = random_normal(n, dim, rng);
    for (std::size_t c = 0; c < dim; ++c) {
        Vector a = inside.col(c);
        Vector b = noise.col(c);
        const double na = norm(a), nb = norm(b);
        for (std::size_t r = 0; r < n; ++r) a[r] = lean * a[r] / na + (1.0 - lean) * b[r] / nb;
        inside.set_col(c, a);
    }
    return Subspace::span_of(inside);
}

struct SearchInstance {
    Subspace u;
    Subspace rg;
    double zeta = 0.0;
};

SearchInstance random_instance(Rng& rng, std::size_t max_ambient, double zeta_lo,
                               double lean_lo) {
    SearchInstance in;
    const std::size_t n = uniform(rng, std::size_t{2}, max_ambient);
    in.u = Subspace::span_of(random_normal(n, uniform(rng, std::size_t{1}, n), rng));
    in.rg = leaning_rg(in.u, uniform(rng, std::size_t{1}, std::min<std::size_t>(n, 6)), rng,
                       uniform(rng, lean_lo, 1.0));
    in.zeta = uniform(rng, zeta_lo, 0.99);
    return in;
}

std::string dump_instance(const SearchInstance& in, const SearchReport& rep, std::size_t index) {
    std::ostringstream os;
    os << "instance " << index << ": zeta = " << std::setprecision(17) << in.zeta
       << ", added = " << rep.added_dims << ", complement_max_cosine = "
       << rep.complement_max_cosine << "\n  accepted cosines:";
    for (double c : rep.cosines) os << ' ' << c;
    os << '\n';
    dump_matrix(os, "B_U", in.u.basis());
    dump_matrix(os, "B_Rg", in.rg.basis());
    return os.str();
}

}  // namespace

CampaignResult theorem_campaign(std::uint64_t seed, std::size_t instances,
                                std::size_t max_ambient, const ToleranceConfig& tol) {
    const auto start = Clock::now();
    CampaignResult res{"theorems", seed, instances};
    res.worst = 1.0;
    Rng rng = substream(seed, "campaign/theorems");
    for (std::size_t i = 0; i < instances; ++i) {
        const SearchInstance in = random_instance(rng, max_ambient, 0.2, 0.0);
        const SearchResult sr =
            search_relaxing_space(in.u, in.rg, in.zeta, Subspace(in.u.ambient_dim()), tol);
        const TheoremChecklist c =
            verify_theorems(in.u, in.rg, in.zeta, sr.relaxing, sr.report, rng, 0, tol);
        res.worst = std::min(res.worst, in.zeta - sr.report.complement_max_cosine);
        const bool ok = c.dim_bound && c.maximal && c.monotone &&
                        sr.report.rounds_used <= in.rg.dim() &&
                        sr.report.complement_max_cosine < in.zeta;
        if (!ok) {
            if (res.failures++ == 0) res.failure = dump_instance(in, sr.report, i);
        }
    }
    res.seconds = seconds_since(start);
    return res;
}

CampaignResult lemma_campaign(std::uint64_t seed, std::size_t searches, std::size_t samples,
                              const ToleranceConfig& tol) {
    const auto start = Clock::now();
    CampaignResult res{"lemma", seed, 0};
    res.worst = 1.0;
    Rng rng = substream(seed, "campaign/lemma");
    std::size_t attempts = 0;
    while (res.instances < searches && attempts < 100 * searches) {
        ++attempts;
        const SearchInstance in = random_instance(rng, 20, 0.3, 0.5);
        const SearchResult sr =
            search_relaxing_space(in.u, in.rg, in.zeta, Subspace(in.u.ambient_dim()), tol);
        if (sr.relaxing.empty()) continue;
        const std::size_t index = res.instances++;
        const TheoremChecklist c =
            verify_theorems(in.u, in.rg, in.zeta, sr.relaxing, sr.report, rng, samples, tol);
        res.worst = std::min(res.worst, c.min_sampled_cosine - sr.report.cosines.back());
        if (!c.last_cosine_floor) {
            if (res.failures++ == 0) {
                std::ostringstream os;
                os << dump_instance(in, sr.report, index) << "  min sampled cosine in V = "
                   << std::setprecision(17) << c.min_sampled_cosine << '\n';
                res.failure = os.str();
            }
        }
    }
    if (res.instances < searches) {
        ++res.failures;
        res.failure += "only " + std::to_string(res.instances) +
                       " searches with a nonempty relaxing space were generated\n";
    }
    res.seconds = seconds_since(start);
    return res;
}

CampaignResult oracle_campaign(std::uint64_t seed, std::size_t instances, std::size_t samples) {
    const auto start = Clock::now();
    CampaignResult res{"oracles", seed, instances};
    Rng rng = substream(seed, "campaign/oracles");
    constexpr std::size_t kAmbient = 12, kComp = 8, kRg = 2;
    for (std::size_t i = 0; i < instances; ++i) {
        const Subspace comp = Subspace::span_of(random_normal(kAmbient, kComp, rng));
        const Subspace rg = Subspace::span_of(random_normal(kAmbient, kRg, rng));
        const ClosestDirection cd = closest_direction(comp, rg);

        // Brute-force maximum of |Proj_C r| over unit r in Rg.
        double brute = 0.0;
        for (std::size_t k = 0; k < samples; ++k) {
            const Vector b = random_unit(kRg, rng);
            const Vector r = matvec(rg.basis(), b);
            brute = std::max(brute, norm(matvec_t(comp.basis(), r)) / norm(r));
        }
        // Every unit u in C must stay at or below the reported cosine.
        double highest = 0.0;
        for (std::size_t k = 0; k < samples; ++k) {
            const Vector a = random_unit(kComp, rng);
            const Vector u = matvec(comp.basis(), a);
            highest = std::max(highest, norm(matvec_t(rg.basis(), u)) / norm(u));
        }
        const double err = std::abs(cd.cosine - brute);
        const double in_comp = norm(project(cd.direction, comp)) / norm(cd.direction);
        res.worst = std::max(res.worst, err);
        const bool ok = err < 1e-3 && highest <= cd.cosine && std::abs(in_comp - 1.0) < 1e-10 &&
                        std::abs(cos_angle(cd.direction, rg) - cd.cosine) < 1e-10;
        if (!ok && res.failures++ == 0) {
            std::ostringstream os;
            os << "instance " << i << ": closest_direction cosine = " << std::setprecision(17)
               << cd.cosine << ", brute-force max = " << brute
               << ", highest complement sample = " << highest << '\n';
            dump_matrix(os, "B_C", comp.basis());
            dump_matrix(os, "B_Rg", rg.basis());
            res.failure = os.str();
        }
    }
    res.seconds = seconds_since(start);
    return res;
}

CampaignResult gradient_campaign(std::uint64_t seed, std::size_t configs) {
    const auto start = Clock::now();
    CampaignResult res{"gradients", seed, configs};
    Rng rng = substream(seed, "campaign/gradients");
    for (std::size_t i = 0; i < configs; ++i) {
        std::vector<std::size_t> dims{uniform(rng, std::size_t{3}, std::size_t{8})};
        const std::size_t hidden = uniform(rng, std::size_t{0}, std::size_t{2});
        for (std::size_t h = 0; h < hidden; ++h) dims.push_back(uniform(rng, std::size_t{3}, std::size_t{8}));
        const std::size_t classes = uniform(rng, std::size_t{2}, std::size_t{5});
        dims.push_back(classes);
        const bool bias = uniform(rng, std::size_t{0}, std::size_t{1}) == 1;
        const LossKind loss = uniform(rng, std::size_t{0}, std::size_t{1}) == 1
                                  ? LossKind::squared
                                  : LossKind::cross_entropy;
        Mlp net(dims, HeadMode::single, 1, bias, loss);
        net.init(rng);
        if (bias)
            for (std::size_t l = 0; l < net.num_layers(); ++l)
                for (double& b : net.bias(l)) b = uniform(rng, -0.1, 0.1);
        const std::size_t n = uniform(rng, std::size_t{4}, std::size_t{10});
        const Matrix batch = random_normal(dims.front(), n, rng);
        Labels labels(n);
        for (int& y : labels) y = static_cast<int>(uniform(rng, std::size_t{0}, classes - 1));

        const double w_err = finite_diff_check(net, batch, labels, 0, 1e-5, rng, 100);

        // dL/dS through the effective weights of one layer, plus the regularizer.
        const std::size_t l = uniform(rng, std::size_t{0}, net.num_layers() - 1);
        const std::size_t in = net.weight(l).cols();
        const Subspace u = Subspace::span_of(random_normal(in, uniform(rng, std::size_t{1}, in), rng));
        const Subspace v = Subspace::span_of(
            matmul(u.basis(), random_normal(u.dim(), uniform(rng, std::size_t{1}, u.dim()), rng)));
        LayerTaskState st = LayerTaskState::fresh(u, uniform(rng, 0.0, 2.0));
        expand_scale(st, v);
        for (std::size_t r = 0; r < st.scale.rows(); ++r)
            for (std::size_t c = 0; c < st.scale.cols(); ++c) st.scale(r, c) += uniform(rng, -0.2, 0.2);

        auto objective = [&](const Matrix& s) {
            Mlp eff = net;
            eff.weight(l) = effective_weight(net.weight(l), st.relaxing, s);
            LayerTaskState probe = st;
            probe.scale = s;
            return batch_loss(eff, batch, labels, 0) + reg_loss(std::span(&probe, 1));
        };
        Mlp eff = net;
        eff.weight(l) = effective_weight(net.weight(l), st.relaxing, st.scale);
        const Matrix g = backward(eff, batch, labels, 0).mean_grad[l];
        const Matrix analytic = scale_grad(g, net.weight(l), st);

        double s_err = 0.0;
        for (std::size_t r = 0; r < st.scale.rows(); ++r)
            for (std::size_t c = 0; c < st.scale.cols(); ++c) {
                auto central = [&](double h) {
                    Matrix p = st.scale, m = st.scale;
                    p(r, c) += h;
                    m(r, c) -= h;
                    return (objective(p) - objective(m)) / (2 * h);
                };
                const double fd = central(1e-5);
                // A ReLU switching inside the stencil shows up as step dependence.
                if (std::abs(fd - central(5e-6)) > 1e-6 * std::max(1.0, std::abs(fd))) continue;
                const double a = analytic(r, c);
                s_err = std::max(s_err, std::abs(a - fd) /
                                            std::max({std::abs(a), std::abs(fd), 1e-5}));
            }

        const double err = std::max(w_err, s_err);
        res.worst = std::max(res.worst, err);
        if (!(err < 1e-4) && res.failures++ == 0) {
            std::ostringstream os;
            os << "config " << i << ": dims";
            for (auto d : dims) os << ' ' << d;
            os << ", bias " << bias << ", loss "
               << (loss == LossKind::squared ? "squared" : "cross_entropy") << ", layer " << l
               << ", W rel err " << w_err << ", S rel err " << s_err << '\n';
            dump_matrix(os, "S", st.scale);
            dump_matrix(os, "B_V", st.relaxing.basis());
            res.failure = os.str();
        }
    }
    res.seconds = seconds_since(start);
    return res;
}

void print_campaign(std::ostream& os, const CampaignResult& r) {
    os << r.name << " seed=" << r.seed << " instances=" << r.instances
       << " failures=" << r.failures << " worst=" << std::setprecision(6) << r.worst
       << " seconds=" << std::setprecision(3) << r.seconds << ' '
       << (r.passed() ? "PASS" : "FAIL") << '\n';
    if (!r.passed()) os << r.failure;
}

}  // namespace rogo
