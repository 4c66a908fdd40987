#include <doctest.h>

#include <cmath>

#include "coodkit/gradcheck.hpp"
#include "coodkit/losses.hpp"

using namespace cood;
using ad::ParamSetT;
using ad::TapeT;
using ad::TensorT;

namespace {

// brute-force f64 InfoNCE oracle, straight from the formula
double info_nce_oracle(const std::vector<double>& s, int n, double tau) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0, col = 0.0;
        for (int j = 0; j < n; ++j) {
            row += std::exp(s[i * n + j] / tau);
            col += std::exp(s[j * n + i] / tau);
        }
        total += std::log(std::exp(s[i * n + i] / tau) / row);
        total += std::log(std::exp(s[i * n + i] / tau) / col);
    }
    return -total / (2.0 * n);
}

} // namespace

TEST_CASE("info_nce worked values") {
    TapeT<double> tape;
    SUBCASE("N=1 is exactly zero") {
        auto loss = losses::info_nce(tape, tape.mat(1, 1, {0.37}), 0.07);
        CHECK(loss.scalar_value() == 0.0);
    }
    SUBCASE("uniform similarities give ln N") {
        for (double tau : {0.07, 0.5, 1.0}) {
            auto loss = losses::info_nce(tape, tape.mat(2, 2, {0.3, 0.3, 0.3, 0.3}), tau);
            CHECK(loss.scalar_value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        }
        auto l3 = losses::info_nce(tape, tape.mat(3, 3, std::vector<double>(9, -0.2)), 0.07);
        CHECK(l3.scalar_value() == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    }
    SUBCASE("identity matrix, N=2, tau=1") {
        auto loss = losses::info_nce(tape, tape.mat(2, 2, {1, 0, 0, 1}), 1.0);
        const double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
        CHECK(loss.scalar_value() == doctest::Approx(expected).epsilon(1e-12));
        CHECK(loss.scalar_value() == doctest::Approx(0.313262).epsilon(1e-5));
    }
    SUBCASE("random matrices match the brute-force oracle") {
        SeededRng rng(31);
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 2 + static_cast<int>(rng.next_below(5));
            std::vector<double> s(static_cast<std::size_t>(n) * n);
            for (auto& v : s) v = rng.uniform(-1.0, 1.0);
            auto loss = losses::info_nce(tape, tape.mat(n, n, s), 0.07);
            CHECK(loss.scalar_value() ==
                  doctest::Approx(info_nce_oracle(s, n, 0.07)).epsilon(1e-9));
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(losses::info_nce(tape, tape.mat(1, 2, {0.0, 0.0}), 0.07),
                        losses::NonSquare);
        CHECK_THROWS_AS(losses::info_nce(tape, tape.mat(1, 1, {0.0}), 0.0),
                        losses::BadTemperature);
    }
}

TEST_CASE("info_nce row-direction term is shift invariant") {
    // softmax shift invariance of one direction, built from public primitives
    TapeT<double> tape;
    auto direction_term = [&](const std::vector<double>& s, int n) {
        auto logits = tape.mat(n, n, s);
        return tape.sub(tape.sum_all(tape.lse_rows(logits)),
                        tape.sum_all(tape.diag(logits)))
            .scalar_value();
    };
    SeededRng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3;
        std::vector<double> s(9);
        for (auto& v : s) v = rng.uniform(-2.0, 2.0);
        auto shifted = s;
        const double c = rng.uniform(-5.0, 5.0);
        for (int j = 0; j < n; ++j) shifted[1 * n + j] += c;  // shift one entire row
        CHECK(direction_term(s, n) == doctest::Approx(direction_term(shifted, n)).epsilon(1e-9));
    }
}

TEST_CASE("margin_id_loss worked values") {
    TapeT<double> tape;
    SUBCASE("satisfied margin contributes zero") {
        // S[0][0]=0.9 aligned; S[1][0]=0.5 negative comment vs code 0
        auto s = tape.mat(2, 2, {0.9, 0.0, 0.5, 0.0});
        auto loss = losses::margin_id_loss(tape, s, {0}, 0.2);
        CHECK(loss.scalar_value() == doctest::Approx(0.0));
    }
    SUBCASE("violated margin: (1/2)*0.15 = 0.075") {
        auto s = tape.mat(2, 2, {0.55, 0.0, 0.5, 0.0});
        auto loss = losses::margin_id_loss(tape, s, {0}, 0.2);
        CHECK(loss.scalar_value() == doctest::Approx(0.075).epsilon(1e-12));
    }
    SUBCASE("negatives equal to the positive give hinge = m per term") {
        const double v = 0.6, m = 0.2;
        auto s = tape.mat(3, 3, std::vector<double>(9, v));
        auto loss = losses::margin_id_loss(tape, s, {0, 1, 2}, m);
        // 3 ID pairs x 2 negatives each, every hinge = m, normalized by 1/3
        CHECK(loss.scalar_value() == doctest::Approx(3.0 * 2.0 * m / 3.0).epsilon(1e-12));
    }
    SUBCASE("empty ID set rejected") {
        auto s = tape.mat(2, 2, {0.5, 0.1, 0.1, 0.5});
        CHECK_THROWS_AS(losses::margin_id_loss(tape, s, {}, 0.2), losses::EmptyIdSet);
    }
}

TEST_CASE("margin_ood_loss worked values") {
    TapeT<double> tape;
    SUBCASE("sims [0.1, 0.3] against m=0.2 give 0.05") {
        // OOD code at column 1: S[0][1]=0.1, S[1][1]=0.3
        auto s = tape.mat(2, 2, {0.9, 0.1, 0.2, 0.3});
        auto loss = losses::margin_ood_loss(tape, s, {1}, 0.2);
        CHECK(loss.scalar_value() == doctest::Approx(0.05).epsilon(1e-12));
    }
    SUBCASE("all sims below the margin give zero") {
        auto s = tape.mat(2, 2, {0.1, 0.15, 0.05, 0.1});
        CHECK(losses::margin_ood_loss(tape, s, {0, 1}, 0.2).scalar_value() ==
              doctest::Approx(0.0));
    }
    SUBCASE("no OOD in batch gives zero") {
        auto s = tape.mat(2, 2, {0.9, 0.8, 0.7, 0.9});
        CHECK(losses::margin_ood_loss(tape, s, {}, 0.2).scalar_value() == 0.0);
    }
}

TEST_CASE("cl_loss composition") {
    TapeT<double> tape;
    SUBCASE("worked value 0.0625") {
        auto loss = losses::cl_loss(tape, tape.scalar(0.075), tape.scalar(0.05), 2);
        CHECK(loss.scalar_value() == doctest::Approx(0.0625).epsilon(1e-12));
    }
    SUBCASE("both zero") {
        CHECK(losses::cl_loss(tape, tape.scalar(0.0), tape.scalar(0.0), 4).scalar_value() ==
              0.0);
    }
    SUBCASE("scales as 1/N") {
        const double a = losses::cl_loss(tape, tape.scalar(0.3), tape.scalar(0.1), 2)
                             .scalar_value();
        const double b = losses::cl_loss(tape, tape.scalar(0.3), tape.scalar(0.1), 4)
                             .scalar_value();
        CHECK(a == doctest::Approx(2.0 * b));
    }
}

TEST_CASE("margin losses are non-negative and piecewise linear in sims") {
    SeededRng rng(55);
    TapeT<double> tape;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_below(4));
        std::vector<double> s(static_cast<std::size_t>(n) * n);
        for (auto& v : s) v = rng.uniform(-1.0, 1.0);
        std::vector<int> ids, oods;
        for (int i = 0; i < n; ++i) (rng.next_below(2) ? ids : oods).push_back(i);
        if (ids.empty()) ids.push_back(oods.back());
        auto sm = tape.mat(n, n, s);
        CHECK(losses::margin_id_loss(tape, sm, ids, 0.2).scalar_value() >= 0.0);
        CHECK(losses::margin_ood_loss(tape, sm, oods, 0.2).scalar_value() >= 0.0);
    }
}

TEST_CASE("bc head") {
    losses::BcConfig cfg{4};  // 16 -> 8 -> 8 -> 1
    SUBCASE("zero weights and biases give exactly 0.5") {
        ad::ParamSetT<double> zeros;
        for (const auto& name : losses::bc_param_names()) {
            auto shape = losses::bc_param_shape(cfg, name);
            std::size_t n = 1;
            for (int d : shape) n *= static_cast<std::size_t>(d);
            zeros.items.push_back({name, shape, std::vector<double>(n, 0.0)});
        }
        TapeT<double> tape;
        enc::BoundParams<double> bound;
        bound.source = &zeros;
        for (const auto& p : zeros.items) bound.leaves.push_back(tape.constant(p.shape, p.values));
        auto probs = losses::bc_forward(tape, bound, tape.mat(3, 16, std::vector<double>(48, 0.7)));
        for (double p : probs.values) CHECK(p == 0.5);
    }
    SUBCASE("output strictly inside (0,1) for random finite inputs") {
        auto params = losses::init_bc_params<double>(cfg, SeededRng(3));
        TapeT<double> tape;
        enc::BoundParams<double> bound;
        bound.source = &params;
        for (const auto& p : params.items) bound.leaves.push_back(tape.constant(p.shape, p.values));
        SeededRng rng(4);
        std::vector<double> feats(32);
        for (auto& f : feats) f = rng.uniform(-50.0, 50.0);
        auto probs = losses::bc_forward(tape, bound, tape.mat(2, 16, feats));
        for (double p : probs.values) {
            CHECK(p > 0.0);
            CHECK(p < 1.0);
        }
    }
    SUBCASE("gradient check against central differences") {
        auto params = losses::init_bc_params<double>(cfg, SeededRng(5));
        SeededRng rng(6);
        std::vector<double> feats(32);
        for (auto& f : feats) f = rng.uniform(-1.0, 1.0);
        const double err = ad::gradient_check(
            [&](TapeT<double>& t, const std::vector<TensorT<double>>& leaves) {
                enc::BoundParams<double> bound{leaves, &params};
                auto probs = losses::bc_forward(t, bound, t.mat(2, 16, feats));
                return losses::bce_loss(t, probs, {1, 0});
            },
            params, 1e-4);
        CHECK(err < 1e-4);
    }
    SUBCASE("feature width mismatch") {
        auto params = losses::init_bc_params<double>(cfg, SeededRng(5));
        TapeT<double> tape;
        enc::BoundParams<double> bound;
        bound.source = &params;
        for (const auto& p : params.items) bound.leaves.push_back(tape.constant(p.shape, p.values));
        CHECK_THROWS_AS(losses::bc_forward(tape, bound, tape.mat(2, 8, std::vector<double>(16, 0.0))),
                        ad::ShapeMismatch);
    }
}

TEST_CASE("bce_loss worked values") {
    TapeT<double> tape;
    SUBCASE("p=0.5, y=1 gives ln 2") {
        auto loss = losses::bce_loss(tape, tape.vec(std::vector<double>{0.5}), {1});
        CHECK(loss.scalar_value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        CHECK(loss.scalar_value() == doctest::Approx(0.693147).epsilon(1e-6));
    }
    SUBCASE("confident correct prediction is ~0") {
        auto loss = losses::bce_loss(tape, tape.vec(std::vector<double>{1.0 - 1e-9}), {1});
        CHECK(loss.scalar_value() < 1e-6);
    }
    SUBCASE("batch {(0.9,1),(0.2,0)} = 0.164252") {
        auto loss = losses::bce_loss(tape, tape.vec(std::vector<double>{0.9, 0.2}), {1, 0});
        const double expected = -(std::log(0.9) + std::log(0.8)) / 2.0;
        CHECK(loss.scalar_value() == doctest::Approx(expected).epsilon(1e-12));
        CHECK(loss.scalar_value() == doctest::Approx(0.164252).epsilon(1e-5));
    }
    SUBCASE("labels validated") {
        CHECK_THROWS_AS(losses::bce_loss(tape, tape.vec(std::vector<double>{0.5}), {2}),
                        ad::OutOfRange);
    }
}

TEST_CASE("joint_loss") {
    TapeT<double> tape;
    CHECK(losses::joint_loss(tape, tape.scalar(1.0), tape.scalar(0.5), 0.2).scalar_value() ==
          doctest::Approx(1.1).epsilon(1e-12));
    CHECK(losses::joint_loss(tape, tape.scalar(0.8), tape.scalar(123.0), 0.0).scalar_value() ==
          doctest::Approx(0.8));
    CHECK(losses::joint_loss(tape, tape.scalar(0.0625), tape.scalar(0.16425203), 0.2)
              .scalar_value() == doctest::Approx(0.0953504).epsilon(1e-6));
    CHECK_THROWS_AS(losses::joint_loss(tape, tape.scalar(1.0), tape.scalar(1.0), -0.1),
                    ad::OutOfRange);

    SUBCASE("monotone non-decreasing in each argument") {
        SeededRng rng(77);
        for (int i = 0; i < 30; ++i) {
            const double cl = rng.uniform(0.0, 2.0), bc = rng.uniform(0.0, 2.0);
            const double up_cl =
                losses::joint_loss(tape, tape.scalar(cl + 0.1), tape.scalar(bc), 0.2)
                    .scalar_value();
            const double up_bc =
                losses::joint_loss(tape, tape.scalar(cl), tape.scalar(bc + 0.1), 0.2)
                    .scalar_value();
            const double base =
                losses::joint_loss(tape, tape.scalar(cl), tape.scalar(bc), 0.2).scalar_value();
            CHECK(up_cl >= base);
            CHECK(up_bc >= base);
        }
    }
}

TEST_CASE("info_nce gradient through a random similarity matrix") {
    // tau = 0.07 saturates the row softmax so hard on full-range sims that
    // off-max entries carry gradients ~e^-28, irresolvable by any finite
    // difference; the checks use tau = 1 at full range and the paper tau on
    // the cosine range an untrained encoder actually produces
    struct Config {
        double tau, range;
    };
    for (const auto& [tau, range] : {Config{1.0, 1.0}, Config{0.07, 0.3}}) {
        for (int trial = 0; trial < 10; ++trial) {
            ParamSetT<double> p;
            SeededRng rng(91 + static_cast<std::uint64_t>(trial));
            std::vector<double> s(16);
            for (auto& v : s) v = rng.uniform(-range, range);
            p.items.push_back({"s", {4, 4}, s});
            const double err = ad::gradient_check(
                [tau = tau](TapeT<double>& t, const std::vector<TensorT<double>>& leaves) {
                    return losses::info_nce(t, leaves[0], tau);
                },
                p, 1e-4);
            CHECK(err < 1e-4);
        }
    }
}
