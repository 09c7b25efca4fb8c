#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <numeric>
#include <vector>

#include "dendsom/error.hpp"
#include "dendsom/pmi.hpp"
#include "support.hpp"

using namespace dendsom;

namespace {

HitMatrix matrix(std::size_t labels, std::size_t units, std::vector<std::uint64_t> counts) {
    return HitMatrix(labels, units, std::move(counts));
}

// Model with `soms` single-pixel SOMs of `units` units each and the given hit matrices.
DendSomModel model_with(std::vector<HitMatrix> hits, std::size_t units) {
    ModelSpec s;
    s.tiling = TilingSpec{1, hits.size(), 1, 1, 1, 1};
    s.unit_rows = 1;
    s.unit_cols = units;
    s.n_labels = hits.front().n_labels();
    auto m = DendSomModel::create(s, 0);
    m.set_hits(std::move(hits));
    return m;
}

std::vector<UnitIndex> bmus_of(std::initializer_list<std::size_t> units, std::size_t cols) {
    std::vector<UnitIndex> out;
    for (auto u : units) out.push_back(UnitIndex::from_linear(u, cols));
    return out;
}

// Exact-arithmetic oracle: with eps = 1 / 10^9 every smoothed probability is a
// ratio of integers, so PMI = ln(a*b / (c*d)) with a, b, c, d exact.
using i128 = __int128;

long double oracle_pmi(const HitMatrix& h, std::size_t u, std::size_t l) {
    const i128 scale = 1'000'000'000;
    const i128 L = static_cast<i128>(h.n_labels());
    i128 col = 0, row = 0, total = 0;
    for (std::size_t i = 0; i < h.n_labels(); ++i) col += h.count(i, u);
    for (std::size_t v = 0; v < h.units(); ++v) row += h.count(l, v);
    for (std::size_t i = 0; i < h.n_labels(); ++i)
        for (std::size_t v = 0; v < h.units(); ++v) total += h.count(i, v);
    const i128 num = (static_cast<i128>(h.count(l, u)) * scale + 1) * (total * scale + L);
    const i128 den = (col * scale + L) * (row * scale + 1);
    return std::log(static_cast<long double>(num)) - std::log(static_cast<long double>(den));
}

}  // namespace

TEST_SUITE("pmi") {

TEST_CASE("posterior examples") {
    const auto h = matrix(2, 2, {3, 0, 1, 0});
    CHECK(std::abs(posterior(h, 0, 0) - 0.75) < 1e-9);
    const auto z = HitMatrix(10, 3);
    for (std::size_t l = 0; l < 10; ++l) CHECK(posterior(z, 1, l) == doctest::Approx(0.1).epsilon(1e-12));
    const auto single = matrix(3, 1, {0, 7, 0});
    CHECK(std::abs(posterior(single, 0, 1) - 1.0) < 1e-8);
    CHECK_THROWS_AS(posterior(h, 2, 0), InvalidArgument);
}

TEST_CASE("prior examples") {
    CHECK(prior(matrix(2, 2, {2, 2, 3, 1}), 0) == doctest::Approx(0.5));
    CHECK(prior(matrix(2, 2, {5, 1, 0, 2}), 0) == doctest::Approx(0.75));
    CHECK(prior(matrix(2, 2, {5, 1, 0, 2}), 1) == doctest::Approx(0.25));
    CHECK(prior(HitMatrix(4, 2), 3) == doctest::Approx(0.25));
}

TEST_CASE("prior on a balanced stream approaches uniform") {
    dendsom::Rng rng(1);
    HitMatrix h(10, 16);
    for (int i = 0; i < 20000; ++i) h.increment(static_cast<std::size_t>(i % 10), rng.below(16));
    for (std::size_t l = 0; l < 10; ++l) CHECK(prior(h, l) == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("pmi examples") {
    // rows = labels A, B; columns = units u1, u2
    const auto h = matrix(2, 2, {3, 1, 1, 3});
    CHECK(pmi(h, 0, 0) == doctest::Approx(0.405465).epsilon(1e-6));
    CHECK(pmi(h, 0, 1) == doctest::Approx(-0.693147).epsilon(1e-6));
    const auto indep = matrix(3, 3, {2, 2, 2, 5, 5, 5, 1, 1, 1});
    for (std::size_t u = 0; u < 3; ++u)
        for (std::size_t l = 0; l < 3; ++l) CHECK(std::abs(pmi(indep, u, l)) < 1e-9);
}

TEST_CASE("normalization and the PMI identity") {
    dendsom::Rng rng(77);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t L = 2 + rng.below(9), U = 1 + rng.below(30);
        std::vector<std::uint64_t> c(L * U);
        for (auto& v : c) v = rng.below(4) == 0 ? 0 : rng.below(1000);
        c[rng.below(c.size())] += 1;
        const HitMatrix h(L, U, c);
        double prior_sum = 0;
        for (std::size_t l = 0; l < L; ++l) prior_sum += prior(h, l);
        CHECK(std::abs(prior_sum - 1) < 1e-9);
        for (std::size_t u = 0; u < U; ++u) {
            const auto d = label_distribution(h, u);
            CHECK(std::abs(std::accumulate(d.posterior.begin(), d.posterior.end(), 0.0) - 1) < 1e-9);
            double identity = 0;
            for (std::size_t l = 0; l < L; ++l) identity += prior(h, l) * std::exp(pmi(h, u, l));
            CHECK(std::abs(identity - 1) < 1e-6);
        }
    }
}

TEST_CASE("pmi is zero under manufactured independence") {
    dendsom::Rng rng(8);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t L = 2 + rng.below(5), U = 2 + rng.below(6);
        std::vector<std::uint64_t> rows(L), cols(U), c(L * U);
        for (auto& r : rows) r = 1 + rng.below(9);
        for (auto& v : cols) v = 1 + rng.below(9);
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t u = 0; u < U; ++u) c[l * U + u] = rows[l] * cols[u];
        const HitMatrix h(L, U, c);
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t u = 0; u < U; ++u) CHECK(std::abs(pmi(h, u, l)) < 1e-9);
    }
}

TEST_CASE("predict examples") {
    const auto m = model_with({matrix(2, 2, {3, 1, 1, 3})}, 2);
    const auto p = predict_from_bmus(m, bmus_of({0}, 2), all_labels(2));
    CHECK(p.label == 0);
    CHECK(p.scores[0] == doctest::Approx(0.405465).epsilon(1e-6));
    CHECK(p.scores[1] == doctest::Approx(-0.693147).epsilon(1e-6));
    const auto q = predict_from_bmus(m, bmus_of({1}, 2), all_labels(2));
    CHECK(q.label == 1);

    const std::vector<int> only_b{1};
    const auto r = predict_from_bmus(m, bmus_of({0}, 2), only_b);
    CHECK(r.label == 1);
    CHECK(r.scores[0] == p.scores[0]);
    CHECK(r.scores[1] == p.scores[1]);
}

TEST_CASE("a model trained on one label predicts it") {
    const auto data = testing::synthetic_digits(4, 5);
    std::vector<std::size_t> sevens;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.label(i) == 7) sevens.push_back(i);
    ModelSpec s;
    s.tiling = TilingSpec::square(12, 4, 4);
    s.unit_rows = s.unit_cols = 3;
    auto m = DendSomModel::create(s, 3);
    fit(m, SampleView(data, sevens));
    PredictOptions seen_only;
    seen_only.exclude_unseen = true;
    const std::vector<int> pair{6, 7};
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(predict(m, data.image(i), all_labels(10), seen_only).label == 7);
        CHECK(predict(m, data.image(i), pair, seen_only).label == 7);
        // smoothed scores: a never-seen label scores ln(T / c) per SOM, never below a seen one
        const auto p = predict(m, data.image(i), all_labels(10));
        CHECK(p.scores[0] >= p.scores[7]);
        CHECK(p.label == 0);
    }
}

TEST_CASE("predict rejects bad calls") {
    const auto m = model_with({matrix(2, 2, {3, 1, 1, 3})}, 2);
    const std::vector<int> none;
    CHECK_THROWS_AS(predict_from_bmus(m, bmus_of({0}, 2), none), InvalidArgument);
    const std::vector<int> out_of_range{0, 2};
    CHECK_THROWS_AS(predict_from_bmus(m, bmus_of({0}, 2), out_of_range), InvalidArgument);
    const auto empty = model_with({HitMatrix(2, 2)}, 2);
    CHECK_THROWS_AS(predict_from_bmus(empty, bmus_of({0}, 2), all_labels(2)), UntrainedModel);
    PredictOptions allow;
    allow.allow_untrained = true;
    CHECK(predict_from_bmus(empty, bmus_of({1}, 2), all_labels(2), allow).label == 0);
}

TEST_CASE("scaling every count leaves predictions unchanged") {
    dendsom::Rng rng(4);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t L = 2 + rng.below(4), U = 2 + rng.below(5), S = 1 + rng.below(5);
        std::vector<HitMatrix> hits, scaled;
        // every SOM sees the same label counts
        std::vector<std::uint64_t> per_label(L);
        for (auto& v : per_label) v = rng.below(20);
        per_label[0] += 1;
        for (std::size_t j = 0; j < S; ++j) {
            HitMatrix h(L, U);
            for (std::size_t l = 0; l < L; ++l)
                for (std::uint64_t k = 0; k < per_label[l]; ++k) h.increment(l, rng.below(U));
            hits.push_back(h);
        }
        const std::uint64_t factor = 1 + rng.below(1000);
        for (const auto& h : hits) scaled.push_back(h.scaled(factor));
        const auto a = model_with(hits, U);
        const auto b = model_with(scaled, U);
        std::vector<UnitIndex> bmus;
        for (std::size_t j = 0; j < S; ++j) bmus.push_back(UnitIndex::from_linear(rng.below(U), U));
        const auto pa = predict_from_bmus(a, bmus, all_labels(L));
        const auto pb = predict_from_bmus(b, bmus, all_labels(L));
        for (std::size_t l = 0; l < L; ++l)
            if (std::abs(pa.scores[l]) < 10) CHECK(std::abs(pa.scores[l] - pb.scores[l]) < 1e-6 * S);
        CHECK(pa.label == pb.label);
    }
}

TEST_CASE("oracle equivalence with exact arithmetic") {
    dendsom::Rng rng(31337);
    for (int rep = 0; rep < 2000; ++rep) {
        const std::size_t S = 1 + rng.below(4), L = 1 + rng.below(3), U = 1 + rng.below(4);
        const std::size_t n = 1 + rng.below(12);
        std::vector<HitMatrix> hits(S, HitMatrix(L, U));
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t label = rng.below(L);
            for (auto& h : hits) h.increment(label, rng.below(U));
        }
        const auto m = model_with(hits, U);
        std::vector<UnitIndex> bmus;
        for (std::size_t j = 0; j < S; ++j) bmus.push_back(UnitIndex::from_linear(rng.below(U), U));
        const auto p = predict_from_bmus(m, bmus, all_labels(L));

        std::vector<long double> score(L, 0.0L);
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t j = 0; j < S; ++j) score[l] += oracle_pmi(hits[j], bmus[j].linear, l);
        for (std::size_t l = 0; l < L; ++l)
            CHECK(std::abs(static_cast<long double>(p.scores[l]) - score[l]) < 1e-9L);
        const long double best = *std::max_element(score.begin(), score.end());
        int expected = -1;
        for (std::size_t l = 0; l < L; ++l)
            if (best - score[l] < 1e-12L) {
                expected = static_cast<int>(l);
                break;
            }
        // labels within float noise of the optimum count as ties
        CHECK(best - score[static_cast<std::size_t>(p.label)] < 1e-9L);
        if (std::count_if(score.begin(), score.end(), [&](long double s) { return best - s < 1e-9L; }) == 1)
            CHECK(p.label == expected);
    }
}

TEST_CASE("candidate normalization renormalizes over the candidate rows") {
    const auto h = matrix(3, 2, {3, 1, 1, 3, 50, 0});
    const auto m = model_with({h}, 2);
    PredictOptions o;
    o.normalization = ScoreNormalization::candidates;
    const std::vector<int> pair{0, 1};
    const auto p = predict_from_bmus(m, bmus_of({0}, 2), pair, o);
    // restricted to rows A, B this is the 2x2 example
    CHECK(p.scores[0] == doctest::Approx(0.405465).epsilon(1e-6));
    CHECK(p.scores[1] == doctest::Approx(-0.693147).epsilon(1e-6));
    CHECK(std::isinf(p.scores[2]));
}

TEST_CASE("unseen labels outrank seen ones under smoothing unless excluded") {
    // label 2 never occurs
    const auto m = model_with({matrix(3, 2, {5, 1, 1, 5, 0, 0})}, 2);
    CHECK(predict_from_bmus(m, bmus_of({0}, 2), all_labels(3)).label == 2);
    PredictOptions o;
    o.exclude_unseen = true;
    CHECK(predict_from_bmus(m, bmus_of({0}, 2), all_labels(3), o).label == 0);
    const std::vector<int> unseen_only{2};
    CHECK(predict_from_bmus(m, bmus_of({0}, 2), unseen_only, o).label == 2);
}

TEST_CASE("predict is pure") {
    const auto data = testing::synthetic_digits(3, 1);
    ModelSpec s;
    s.tiling = TilingSpec::square(12, 6, 3);
    s.unit_rows = s.unit_cols = 3;
    auto m = DendSomModel::create(s, 3);
    fit(m, SampleView(data));
    const auto before = m;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto a = predict(m, data.image(i), all_labels(10));
        const auto b = predict(m, data.image(i), all_labels(10));
        CHECK(a.label == b.label);
        CHECK(a.scores == b.scores);
    }
    CHECK(m == before);
}

TEST_CASE("prediction records") {
    Prediction p;
    p.label = 3;
    p.scores = {0.5, -1.0, 0.0, 2.25};
    const std::vector<int> cands{1, 3};
    const auto r = make_record(17, 1, p, cands);
    CHECK(r.scores == std::vector<double>{-1.0, 2.25});
    CHECK(csv_header(r) == "sample_id,true_label,predicted_label,score_1,score_3");
    CHECK(to_csv_row(r) == "17,1,3,-1,2.25");
    const auto j = nlohmann::json::parse(to_json(r));
    CHECK(j["sample_id"] == 17);
    CHECK(j["predicted_label"] == 3);
    CHECK(j["scores"]["3"] == 2.25);
}

}
