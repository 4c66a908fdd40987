#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "coodkit/metrics.hpp"
#include "coodkit/rng.hpp"
#include "coodkit/scoring.hpp"

using namespace cood;

namespace {

// O(n^2) pairwise oracle: P(id > ood) with ties counting one half
double auroc_oracle(const std::vector<double>& id_scores,
                    const std::vector<double>& ood_scores) {
    double wins = 0.0;
    for (double i : id_scores)
        for (double o : ood_scores) wins += i > o ? 1.0 : (i == o ? 0.5 : 0.0);
    return wins / (static_cast<double>(id_scores.size()) *
                   static_cast<double>(ood_scores.size()));
}

// brute-force FPR95: sweep candidate thresholds for the retention rule
double fpr95_oracle(std::vector<double> id_scores, const std::vector<double>& ood_scores) {
    std::sort(id_scores.begin(), id_scores.end());
    const double n = static_cast<double>(id_scores.size());
    double best = id_scores.front();
    for (double candidate : id_scores) {
        long kept = 0;
        for (double s : id_scores)
            if (s >= candidate) ++kept;
        if (static_cast<double>(kept) / n >= 0.95) best = std::max(best, candidate);
    }
    long fp = 0;
    for (double s : ood_scores)
        if (s >= best) ++fp;
    return static_cast<double>(fp) / static_cast<double>(ood_scores.size());
}

std::vector<double> random_scores(SeededRng& rng, std::size_t n, bool with_ties) {
    std::vector<double> v(n);
    for (auto& s : v) s = rng.uniform(0, 1);
    if (with_ties)
        for (auto& s : v) s = std::round(s * 20) / 20.0;
    return v;
}

} // namespace

TEST_CASE("auroc worked examples") {
    CHECK(metrics::auroc({0.9, 0.8}, {0.7, 0.1}) == doctest::Approx(1.0));
    CHECK(metrics::auroc({0.5}, {0.5}) == doctest::Approx(0.5));
    CHECK(metrics::auroc({0.9, 0.6}, {0.7, 0.1}) == doctest::Approx(0.75));
    CHECK_THROWS_AS(metrics::auroc({}, {0.5}), metrics::EmptySet);
    CHECK_THROWS_AS(metrics::auroc({0.5}, {}), metrics::EmptySet);
}

TEST_CASE("rank-based auroc equals the pairwise oracle on 200 random sets") {
    SeededRng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n_id = 1 + rng.next_below(500);
        const std::size_t n_ood = 1 + rng.next_below(500);
        const bool ties = trial % 2 == 0;
        auto id_scores = random_scores(rng, n_id, ties);
        auto ood_scores = random_scores(rng, n_ood, ties);
        CHECK(metrics::auroc(id_scores, ood_scores) ==
              doctest::Approx(auroc_oracle(id_scores, ood_scores)).epsilon(1e-12));
    }
}

TEST_CASE("auroc invariances") {
    SeededRng rng(78);
    auto id_scores = random_scores(rng, 60, true);
    auto ood_scores = random_scores(rng, 40, true);

    SUBCASE("strictly increasing transforms leave auroc unchanged") {
        auto f = [](double x) { return std::exp(3.0 * x) - 1.0; };
        auto idt = id_scores;
        auto oodt = ood_scores;
        for (auto& s : idt) s = f(s);
        for (auto& s : oodt) s = f(s);
        CHECK(metrics::auroc(idt, oodt) ==
              doctest::Approx(metrics::auroc(id_scores, ood_scores)).epsilon(1e-12));
    }
    SUBCASE("complement symmetry") {
        CHECK(metrics::auroc(id_scores, ood_scores) + metrics::auroc(ood_scores, id_scores) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("fpr_at_95_tpr") {
    std::vector<double> id_scores;
    for (int k = 1; k <= 100; ++k) id_scores.push_back(k / 100.0);

    SUBCASE("all OOD below the minimum") {
        CHECK(metrics::fpr_at_95_tpr(id_scores, {0.001, 0.002}) == doctest::Approx(0.0));
    }
    SUBCASE("all OOD above the maximum") {
        CHECK(metrics::fpr_at_95_tpr(id_scores, {2.0, 3.0}) == doctest::Approx(1.0));
    }
    SUBCASE("threshold sweep example: 2 of 3") {
        CHECK(metrics::fpr_at_95_tpr(id_scores, {0.05, 0.07, 0.5}) ==
              doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("matches the brute-force sweep on random sets") {
        SeededRng rng(79);
        for (int trial = 0; trial < 200; ++trial) {
            auto ids = random_scores(rng, 20 + rng.next_below(300), trial % 2 == 0);
            auto oods = random_scores(rng, 1 + rng.next_below(300), trial % 2 == 0);
            CHECK(metrics::fpr_at_95_tpr(ids, oods) ==
                  doctest::Approx(fpr95_oracle(ids, oods)).epsilon(1e-12));
        }
    }
    SUBCASE("non-increasing when an OOD score decreases") {
        SeededRng rng(80);
        auto oods = random_scores(rng, 50, false);
        const double before = metrics::fpr_at_95_tpr(id_scores, oods);
        oods[7] -= 0.5;
        CHECK(metrics::fpr_at_95_tpr(id_scores, oods) <= before);
    }
}

TEST_CASE("mrr") {
    using Pool = std::vector<std::pair<std::string, std::vector<double>>>;

    SUBCASE("gold ranked first everywhere") {
        Pool pool = {{"a", {1, 0}}, {"b", {0, 1}}};
        const double v = metrics::mrr({{1, 0}, {0, 1}}, {"a", "b"}, pool);
        CHECK(v == doctest::Approx(1.0));
    }
    SUBCASE("single query with gold ranked 4th") {
        Pool pool = {{"g", {1, 0, 0}}, {"d1", {0.9, 0.1, 0}}, {"d2", {0.9, 0, 0.1}},
                     {"d3", {0.8, 0.1, 0.1}}};
        // query equals d-vectors more than gold
        const double v = metrics::mrr({{0.5, 0.5, 0.5}}, {"g"}, pool);
        CHECK(v == doctest::Approx(0.25));
    }
    SUBCASE("mean of ranks 1 and 2 is 0.75") {
        Pool pool = {{"a", {1, 0}}, {"b", {0.9, 0.1}}};
        // second query sits closer to the distractor than to its gold code
        const double v = metrics::mrr({{1, 0}, {1, 0.05}}, {"a", "b"}, pool);
        CHECK(v == doctest::Approx(0.75));
    }
    SUBCASE("gold loses ties") {
        Pool pool = {{"g", {1, 0}}, {"twin", {1, 0}}};
        CHECK(metrics::mrr({{1, 0}}, {"g"}, pool) == doctest::Approx(0.5));
    }
    SUBCASE("gold missing") {
        Pool pool = {{"a", {1, 0}}};
        CHECK_THROWS_AS(metrics::mrr({{1, 0}}, {"zzz"}, pool), metrics::GoldMissing);
    }
    SUBCASE("invariant under distractor permutation for distinct scores") {
        SeededRng rng(81);
        Pool pool;
        for (int i = 0; i < 12; ++i) {
            std::vector<double> v(4);
            for (auto& x : v) x = rng.uniform(-1, 1);
            pool.emplace_back("p" + std::to_string(i), v);
        }
        std::vector<std::vector<double>> queries = {{0.3, -0.2, 0.9, 0.1}};
        const double before = metrics::mrr(queries, {"p5"}, pool);
        auto shuffled = pool;
        std::reverse(shuffled.begin(), shuffled.end());
        CHECK(metrics::mrr(queries, {"p5"}, shuffled) == doctest::Approx(before));
    }
}

TEST_CASE("seed_average") {
    auto row = [](const std::string& scenario, double auroc, double fpr) {
        metrics::MetricsRow r;
        r.scenario = scenario;
        r.auroc = auroc;
        r.fpr95 = fpr;
        return r;
    };
    SUBCASE("identical rows have zero std") {
        auto a = metrics::seed_average({row("x", 0.9, 0.2), row("x", 0.9, 0.2)});
        CHECK(a.auroc_mean == doctest::Approx(0.9));
        CHECK(a.auroc_std == doctest::Approx(0.0));
    }
    SUBCASE("mean 0.9, std ~0.141421 for {0.8, 1.0}") {
        auto a = metrics::seed_average({row("x", 0.8, 0.1), row("x", 1.0, 0.3)});
        CHECK(a.auroc_mean == doctest::Approx(0.9));
        CHECK(a.auroc_std == doctest::Approx(0.141421).epsilon(1e-5));
        CHECK(a.fpr95_mean == doctest::Approx(0.2));
    }
    SUBCASE("a single row is rejected") {
        CHECK_THROWS(metrics::seed_average({row("x", 0.9, 0.2)}));
    }
    SUBCASE("mismatched scenarios are rejected") {
        CHECK_THROWS_AS(metrics::seed_average({row("x", 0.9, 0.2), row("y", 0.9, 0.2)}),
                        metrics::MismatchedScenario);
    }
}

TEST_CASE("csv row shapes") {
    metrics::MetricsRow r;
    r.scenario = "misaligned";
    r.seed = 3;
    r.auroc = 0.875;
    r.fpr95 = 0.25;
    r.n_id = 400;
    r.n_ood = 100;
    CHECK(metrics::metrics_csv_row(r) == "misaligned,3,0.875,0.25,400,100");
    metrics::SearchEvalRow s;
    s.dataset = "corrupted";
    s.mrr = 0.5;
    s.n_queries = 500;
    CHECK(metrics::search_csv_row(s) == "corrupted,0.5,500");
}
