#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "coodkit/rng.hpp"
#include "coodkit/scoring.hpp"

using namespace cood;

namespace {

// brute-force threshold sweep: the largest candidate retaining >= retention
double threshold_oracle(std::vector<double> scores, double retention) {
    std::sort(scores.begin(), scores.end());
    const double n = static_cast<double>(scores.size());
    double best = scores.front();
    for (double candidate : scores) {
        long kept = 0;
        for (double s : scores)
            if (s >= candidate) ++kept;
        if (static_cast<double>(kept) / n >= retention) best = std::max(best, candidate);
    }
    return best;
}

} // namespace

TEST_CASE("score_cl") {
    CHECK(scoring::score_cl({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
    CHECK(scoring::score_cl({1, 0}, {0, 1}) == doctest::Approx(0.0));
    CHECK(scoring::score_cl({1, 1}, {1, 0}) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(scoring::score_cl({1, 1}, {1, 0}) == doctest::Approx(0.707107).epsilon(1e-6));

    SUBCASE("invariant to positive rescaling") {
        SeededRng rng(13);
        for (int i = 0; i < 30; ++i) {
            std::vector<double> a(5), b(5);
            for (auto& x : a) x = rng.uniform(-1, 1);
            for (auto& x : b) x = rng.uniform(-1, 1);
            auto scaled = a;
            const double c = rng.uniform(0.1, 10.0);
            for (auto& x : scaled) x *= c;
            CHECK(scoring::score_cl(scaled, b) ==
                  doctest::Approx(scoring::score_cl(a, b)).epsilon(1e-7));
        }
    }
}

TEST_CASE("score_combined") {
    CHECK(scoring::score_combined(0.0, 1.0) == doctest::Approx(0.5));
    CHECK(scoring::score_combined(0.9, 0.0) == doctest::Approx(0.0));
    CHECK(scoring::score_combined(1.0, 0.5) == doctest::Approx(0.365529).epsilon(1e-6));
    CHECK_THROWS(scoring::score_combined(0.5, 1.5));

    SUBCASE("non-decreasing in each argument") {
        SeededRng rng(14);
        for (int i = 0; i < 30; ++i) {
            const double sim = rng.uniform(-1, 1), p = rng.uniform(0, 1);
            CHECK(scoring::score_combined(sim + 0.05, p) >= scoring::score_combined(sim, p));
            CHECK(scoring::score_combined(sim, std::min(1.0, p + 0.05)) >=
                  scoring::score_combined(sim, p));
        }
    }
}

TEST_CASE("score_msp") {
    CHECK(scoring::score_msp({0.3, 0.3, 0.3, 0.3}) == doctest::Approx(0.25));
    CHECK(scoring::score_msp({10, 0}) == doctest::Approx(0.9999546).epsilon(1e-6));
    CHECK(scoring::score_msp({-3.7}) == doctest::Approx(1.0));
    CHECK_THROWS(scoring::score_msp({}));
}

TEST_CASE("calibrate_threshold") {
    SUBCASE("k/100 scores at 95% retain exactly 95") {
        std::vector<double> scores;
        for (int k = 1; k <= 100; ++k) scores.push_back(k / 100.0);
        const double t = scoring::calibrate_threshold(scores, 0.95);
        CHECK(t == doctest::Approx(0.06));
        long kept = 0;
        for (double s : scores)
            if (s >= t) ++kept;
        CHECK(kept == 95);
        CHECK(t == doctest::Approx(threshold_oracle(scores, 0.95)));
    }
    SUBCASE("all-equal scores retain 100%") {
        std::vector<double> scores(30, 0.42);
        CHECK(scoring::calibrate_threshold(scores, 0.95) == doctest::Approx(0.42));
    }
    SUBCASE("retention just under 1 gives the minimum") {
        std::vector<double> scores;
        for (int k = 0; k < 25; ++k) scores.push_back(k * 0.01 + 0.1);
        CHECK(scoring::calibrate_threshold(scores, 1.0 - 1e-9) == doctest::Approx(0.1));
    }
    SUBCASE("too few scores") {
        CHECK_THROWS_AS(scoring::calibrate_threshold(std::vector<double>(19, 0.5), 0.95),
                        scoring::TooFewScores);
    }
    SUBCASE("matches the sweep oracle on random sets") {
        SeededRng rng(15);
        for (int trial = 0; trial < 40; ++trial) {
            const int n = 20 + static_cast<int>(rng.next_below(200));
            std::vector<double> scores(static_cast<std::size_t>(n));
            for (auto& s : scores) s = rng.uniform(0, 1);
            if (trial % 3 == 0)
                for (auto& s : scores) s = std::round(s * 10) / 10.0;  // force ties
            const double retention = 0.5 + 0.49 * rng.next_double();
            CHECK(scoring::calibrate_threshold(scores, retention) ==
                  doctest::Approx(threshold_oracle(scores, retention)));
        }
    }
    SUBCASE("retention guarantee and maximality") {
        SeededRng rng(16);
        for (int trial = 0; trial < 40; ++trial) {
            const int n = 20 + static_cast<int>(rng.next_below(100));
            std::vector<double> scores(static_cast<std::size_t>(n));
            for (auto& s : scores) s = rng.uniform(0, 1);
            const double t = scoring::calibrate_threshold(scores, 0.95);
            long kept = 0;
            for (double s : scores)
                if (s >= t) ++kept;
            CHECK(static_cast<double>(kept) / n >= 0.95);
            // any strictly higher candidate from the set violates retention
            double next = 2.0;
            for (double s : scores)
                if (s > t) next = std::min(next, s);
            if (next < 2.0) {
                long kept2 = 0;
                for (double s : scores)
                    if (s >= next) ++kept2;
                CHECK(static_cast<double>(kept2) / n < 0.95);
            }
        }
    }
}

TEST_CASE("filter") {
    auto rec = [](const std::string& id, double p_id) {
        scoring::ScoredRecord r;
        r.id = id;
        r.p_id = p_id;
        return r;
    };
    std::vector<scoring::ScoredRecord> recs = {rec("a", 0.9), rec("b", 0.2), rec("c", 0.5),
                                               rec("d", 0.2)};
    SUBCASE("threshold below the minimum keeps everything in order") {
        auto out = scoring::filter(recs, -10.0);
        REQUIRE(out.size() == 4);
        CHECK(out[0].id == "a");
        CHECK(out[3].id == "d");
    }
    SUBCASE("threshold above the maximum keeps nothing") {
        CHECK(scoring::filter(recs, 1.1).empty());
    }
    SUBCASE("matches a hand-selected subset, ties retained") {
        auto out = scoring::filter(recs, 0.2);
        REQUIRE(out.size() == 4);
        out = scoring::filter(recs, 0.5);
        REQUIRE(out.size() == 2);
        CHECK(out[0].id == "a");
        CHECK(out[1].id == "c");
    }
    SUBCASE("idempotent") {
        auto once = scoring::filter(recs, 0.4);
        auto twice = scoring::filter(once, 0.4);
        REQUIRE(twice.size() == once.size());
        for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice[i].id == once[i].id);
    }
}

TEST_CASE("make_scored fills the derived fields") {
    SUBCASE("with a bc probability") {
        auto r = scoring::make_scored("x", 0.8, 0.9, 1, "id");
        CHECK(r.p_cl_star == doctest::Approx(scoring::sigmoid(0.8)));
        CHECK(r.p_id == doctest::Approx(scoring::sigmoid(0.8) * 0.9));
    }
    SUBCASE("without a bc probability the raw sim is the score") {
        auto r = scoring::make_scored("x", 0.8, -1.0, 0, "misaligned");
        CHECK(r.p_id == doctest::Approx(0.8));
        CHECK(r.p_bc == -1.0);
    }
}

TEST_CASE("scored csv shape") {
    auto r = scoring::make_scored("rec1", 0.5, 0.25, 1, "id");
    CHECK(scoring::scored_csv_header() == "id,sim,p_cl_star,p_bc,p_id,label,scenario");
    const auto row = scoring::scored_csv_row(r);
    CHECK(row.find("rec1,") == 0);
    CHECK(row.find(",id") == row.size() - 3);
}
