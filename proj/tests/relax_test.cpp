#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rogo/errors.hpp"
#include "rogo/relax.hpp"
#include "rogo/rng.hpp"
#include "rogo/subspace.hpp"
#include "rogo/verify.hpp"

using namespace rogo;

namespace {

Subspace random_subspace(std::size_t n, std::size_t k, Rng& rng) {
    return Subspace::span_of(random_normal(n, k, rng));
}

Matrix outer(const Vector& a, const Vector& b) {
    Matrix m(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
    return m;
}

}  // namespace

TEST_SUITE("relax") {

TEST_CASE("config validation") {
    RelaxConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.zeta_for(5) == 0.95);
    c.zeta = {0.9, 0.8};
    CHECK(c.zeta_for(1) == 0.8);
    c.zeta = {1.5};
    CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("gradient_rep_space: single rank-one gradient") {
    const Vector delta{0.5, -2.0};
    const Vector x{3.0, 0.0, 4.0};
    const std::vector<Matrix> grads{outer(delta, x)};
    const Subspace s = gradient_rep_space(grads, 10, 0.95);
    REQUIRE(s.dim() == 1);
    CHECK(std::abs(s.basis()(0, 0)) == doctest::Approx(0.6));
    CHECK(std::abs(s.basis()(2, 0)) == doctest::Approx(0.8));
}

TEST_CASE("gradient_rep_space: zero gradients give the empty subspace") {
    const std::vector<Matrix> grads{Matrix(2, 4), Matrix(2, 4)};
    CHECK(gradient_rep_space(grads, 5, 0.9).empty());
    CHECK(gradient_rep_space(grads, 5, 0.9).ambient_dim() == 4);
}

TEST_CASE("gradient_rep_space: dimension matches an eigen oracle of the stacked Gram matrix") {
    Rng rng = substream(31, "relax/rg-oracle");
    std::vector<Matrix> grads;
    for (int j = 0; j < 10; ++j) grads.push_back(random_normal(3, 6, rng));
    Matrix stacked = grads[0];
    for (int j = 1; j < 10; ++j) stacked = stacked.vcat(grads[j]);
    const auto ev = oracle::jacobi_eigenvalues(oracle::naive_matmul(stacked.transpose(), stacked));
    double total = 0;
    for (double e : ev) total += e;
    std::size_t want = 0;
    for (double part = 0; part < 0.9 * total; ++want) part += ev[want];
    CHECK(gradient_rep_space(grads, 10, 0.9).dim() == want);
    CHECK(gradient_rep_space(grads, 2, 0.9).dim() == std::min<std::size_t>(2, want));
}

TEST_CASE("gradient_rep_space: factored rank-one form equals the dense stack") {
    Rng rng = substream(32, "relax/rank-one");
    const Matrix deltas = random_normal(4, 12, rng);
    const Matrix inputs = random_normal(7, 12, rng);
    std::vector<Matrix> dense;
    for (std::size_t j = 0; j < 12; ++j) dense.push_back(outer(deltas.col(j), inputs.col(j)));
    const Subspace a = gradient_rep_space(dense, 5, 0.95);
    const Subspace b = gradient_rep_space(RankOneGrads{deltas, inputs}, 5, 0.95);
    REQUIRE(a.dim() == b.dim());
    CHECK(oracle::max_abs_diff(a.projector(), b.projector()) < 1e-10);
}

TEST_CASE("closest_direction examples") {
    const Subspace comp = Subspace::from_orthonormal(Matrix{{1, 0}, {0, 1}, {0, 0}});
    const double h = 1 / std::sqrt(2.0);
    const Subspace rg = Subspace::from_orthonormal(Matrix{{h}, {0}, {h}});
    const ClosestDirection cd = closest_direction(comp, rg);
    CHECK(cd.cosine == doctest::Approx(h));
    CHECK(std::abs(cd.direction[0]) == doctest::Approx(1.0));
    CHECK_THROWS_AS(closest_direction(Subspace(3), rg), EmptySpaceError);
    CHECK_THROWS_AS(closest_direction(comp, Subspace(3)), EmptySpaceError);
}

TEST_CASE("closest_direction: sampling oracle on a random 8-dim complement") {
    const CampaignResult r = oracle_campaign(7, 2, 1000000);
    INFO(r.failure);
    CHECK(r.passed());
    CHECK(r.worst < 1e-3);
}

TEST_CASE("search: empty inputs leave V unchanged") {
    Rng rng = substream(33, "relax/empty");
    const Subspace u = random_subspace(6, 3, rng);
    const SearchResult a = search_relaxing_space(u, Subspace(6), 0.5, Subspace(6));
    CHECK(a.relaxing.empty());
    const SearchResult b = search_relaxing_space(Subspace(6), random_subspace(6, 2, rng), 0.5,
                                                 Subspace(6));
    CHECK(b.relaxing.empty());
    CHECK_THROWS_AS(search_relaxing_space(u, u, 0.0, Subspace(6)), InvalidInput);
}

TEST_CASE("search: R_g inside U is relaxed completely, orthogonal R_g not at all") {
    const Subspace u = Subspace::from_orthonormal(Matrix{{1, 0}, {0, 1}, {0, 0}, {0, 0}});
    const Subspace inside = Subspace::from_orthonormal(Matrix{{0}, {1}, {0}, {0}});
    const SearchResult a = search_relaxing_space(u, inside, 0.9, Subspace(4));
    CHECK(a.relaxing.dim() == 1);
    CHECK(a.report.cosines.front() == doctest::Approx(1.0));
    const Subspace outside = Subspace::from_orthonormal(Matrix{{0}, {0}, {1}, {0}});
    CHECK(search_relaxing_space(u, outside, 0.1, Subspace(4)).relaxing.empty());
    // zeta = 1 never relaxes
    CHECK(search_relaxing_space(u, inside, 1.0, Subspace(4)).relaxing.empty());
}

TEST_CASE("search: ties at zeta are accepted") {
    const double c = 0.6, s = 0.8;
    const Subspace u = Subspace::from_orthonormal(Matrix{{1}, {0}});
    const Subspace rg = Subspace::from_orthonormal(Matrix{{c}, {s}});
    const double cos_exact = closest_direction(u, rg).cosine;
    CHECK(search_relaxing_space(u, rg, cos_exact, Subspace(2)).relaxing.dim() == 1);
    CHECK(search_relaxing_space(u, rg, std::nextafter(cos_exact, 2.0), Subspace(2))
              .relaxing.empty());
}

TEST_CASE("search: existing V is kept as a prefix") {
    Rng rng = substream(34, "relax/prefix");
    const Subspace u = random_subspace(10, 6, rng);
    const Subspace rg1 = Subspace::span_of(matmul(u.basis(), random_normal(6, 1, rng)));
    const SearchResult first = search_relaxing_space(u, rg1, 0.9, Subspace(10));
    REQUIRE(first.relaxing.dim() == 1);
    const Subspace rg2 = Subspace::span_of(matmul(u.basis(), random_normal(6, 2, rng)));
    const SearchResult second = search_relaxing_space(u, rg2, 0.9, first.relaxing);
    CHECK(second.relaxing.dim() >= 1);
    CHECK(second.relaxing.basis().col_range(0, 1) == first.relaxing.basis());
}

TEST_CASE("search: sampling oracle over V and the final complement (Lemma 1, Theorem 1)") {
    Rng rng = substream(35, "relax/sampling");
    int checked = 0;
    for (int t = 0; t < 20 && checked < 5; ++t) {
        const Subspace u = random_subspace(12, 8, rng);
        // R_g half inside U so that some directions pass zeta = 0.5
        Matrix g = matmul(u.basis(), random_normal(8, 2, rng));
        const Matrix noise = random_normal(12, 2, rng);
        for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += 0.5 * noise.data()[i];
        const Subspace rg = Subspace::span_of(g);
        const SearchResult sr = search_relaxing_space(u, rg, 0.5, Subspace(12));
        if (sr.relaxing.empty()) continue;
        ++checked;
        const Subspace comp = complement_within(u, sr.relaxing);
        double comp_max = 0.0;
        for (int i = 0; i < 100000; ++i)
            comp_max = std::max(comp_max, cos_angle(random_unit_in(comp, rng), rg));
        CHECK(comp_max < 0.5 + 1e-6);
        double v_min = 1.0;
        for (int i = 0; i < 100000; ++i)
            v_min = std::min(v_min, cos_angle(random_unit_in(sr.relaxing, rng), rg));
        const double last = sr.report.cosines.back();
        CHECK(v_min >= last - 1e-6);
        // sampled minimum approaches the last accepted cosine from above
        if (sr.relaxing.dim() == 1) CHECK(std::abs(v_min - last) < 1e-6);
    }
    CHECK(checked == 5);
}

TEST_CASE("verify_theorems flags a non-maximal V") {
    const Subspace u = Subspace::from_orthonormal(Matrix{{1, 0}, {0, 1}, {0, 0}});
    const Subspace rg = Subspace::from_orthonormal(Matrix{{1, 0}, {0, 1}, {0, 0}});
    Rng rng = substream(36, "relax/theorem-neg");
    const SearchReport empty_report;
    const TheoremChecklist c = verify_theorems(u, rg, 0.9, Subspace(3), empty_report, rng, 100);
    CHECK_FALSE(c.maximal);
    const SearchResult sr = search_relaxing_space(u, rg, 0.9, Subspace(3));
    CHECK(verify_theorems(u, rg, 0.9, sr.relaxing, sr.report, rng, 100).all());
}

TEST_CASE("theorem and lemma campaigns (reduced size)") {
    const CampaignResult t = theorem_campaign(3, 200, 20);
    INFO(t.failure);
    CHECK(t.passed());
    const CampaignResult l = lemma_campaign(3, 20, 1000);
    INFO(l.failure);
    CHECK(l.passed());
}

}  // TEST_SUITE
