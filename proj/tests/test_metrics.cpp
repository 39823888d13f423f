#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "surerag/error.hpp"
#include "surerag/metrics.hpp"
#include "surerag/random.hpp"

using namespace surerag;
using namespace surerag::metrics;

namespace {
constexpr Label S = Label::supported, R = Label::refuted, I = Label::insufficient;
}

TEST_CASE("macro_f1 from a hand confusion matrix") {
    const std::vector<Label> gold{S, S, I}, pred{S, I, I};
    const auto r = macro_f1(gold, pred);
    CHECK(r.per_class[0] == doctest::Approx(2.0 / 3.0));
    CHECK(r.per_class[1] == 0.0);
    CHECK(r.per_class[2] == doctest::Approx(2.0 / 3.0));
    CHECK(r.macro == doctest::Approx(4.0 / 9.0));
}

TEST_CASE("macro_f1 of a perfect prediction is 1") {
    const std::vector<Label> gold{S, R, I, I, R};
    CHECK(macro_f1(gold, gold).macro == doctest::Approx(1.0));
}

TEST_CASE("majority predictor scores zero on absent classes") {
    const std::vector<Label> gold{S, R, I, I, I, R, S, I};
    const std::vector<Label> pred(gold.size(), I);
    const auto r = macro_f1(gold, pred);
    CHECK(r.per_class[0] == 0.0);
    CHECK(r.per_class[1] == 0.0);
    CHECK(r.per_class[2] > 0.0);
}

TEST_CASE("macro_f1 errors") {
    const std::vector<Label> a{S}, b{S, R}, empty;
    CHECK_THROWS_AS(macro_f1(a, b), Error);
    CHECK_THROWS_AS(macro_f1(empty, empty), Error);
}

TEST_CASE("macro_f1 matches the confusion-matrix oracle and ignores order") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(12);
        std::vector<Label> gold, pred;
        std::vector<int> g, p;
        for (std::size_t i = 0; i < n; ++i) {
            g.push_back(static_cast<int>(rng.index(3)));
            p.push_back(static_cast<int>(rng.index(3)));
            gold.push_back(static_cast<Label>(g.back()));
            pred.push_back(static_cast<Label>(p.back()));
        }
        const auto expect = oracle::per_class_f1(g, p);
        const auto got = macro_f1(gold, pred);
        for (int c = 0; c < 3; ++c) CHECK(got.per_class[c] == doctest::Approx(expect[c]).epsilon(1e-12));
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        rng.shuffle(perm);
        std::vector<Label> g2, p2;
        for (auto i : perm) {
            g2.push_back(gold[i]);
            p2.push_back(pred[i]);
        }
        CHECK(macro_f1(g2, p2).macro == doctest::Approx(got.macro).epsilon(1e-12));
    }
}

TEST_CASE("binary safety F1") {
    SUBCASE("all supported") {
        const std::vector<Label> g{S, S, S};
        CHECK(binary_safety_f1(g, g).safe_f1 == doctest::Approx(1.0));
    }
    SUBCASE("refuted and insufficient collapse to unsafe") {
        const std::vector<Label> g{S, R, I}, p{S, I, R};
        const auto r = binary_safety_f1(g, p);
        CHECK(r.unsafe_f1 == doctest::Approx(1.0));
        CHECK(r.safe_f1 == doctest::Approx(1.0));
    }
    SUBCASE("no safe predictions") {
        const std::vector<Label> g{S, R}, p{R, R};
        const auto r = binary_safety_f1(g, p);
        CHECK(r.safe_f1 == 0.0);
        CHECK(r.unsafe_f1 == doctest::Approx(2.0 / 3.0));
    }
    const std::vector<Label> a{S}, b{S, S};
    CHECK_THROWS_AS(binary_safety_f1(a, b), Error);
}

TEST_CASE("risk-coverage curve on three examples") {
    const std::vector<double> s{0.9, 0.8, 0.7};
    const std::vector<bool> safe{true, false, true};
    const auto c = risk_coverage_curve(s, safe);
    REQUIRE(c.size() == 3);
    CHECK(c[0].coverage == doctest::Approx(1.0 / 3.0));
    CHECK(c[0].risk == 0.0);
    CHECK(c[1].coverage == doctest::Approx(2.0 / 3.0));
    CHECK(c[1].risk == doctest::Approx(0.5));
    CHECK(c[2].coverage == doctest::Approx(1.0));
    CHECK(c[2].risk == doctest::Approx(1.0 / 3.0));
    CHECK(risk_at_coverage(c, 0.3) == 0.0);
    CHECK(coverage_at_risk(c, 1.0) == doctest::Approx(1.0));
    CHECK(aurc(s, safe) == doctest::Approx((0.0 + 0.5 + 1.0 / 3.0) / 3.0));
    CHECK(aurc(s, safe) == doctest::Approx(0.2778).epsilon(1e-4));
}

TEST_CASE("risk-coverage edge cases") {
    const std::vector<double> s{0.4, 0.4, 0.1};
    const std::vector<bool> all_safe{true, true, true}, mixed{false, true, false};
    for (const auto& p : risk_coverage_curve(s, all_safe)) CHECK(p.risk == 0.0);
    CHECK(aurc(s, all_safe) == 0.0);
    const auto c = risk_coverage_curve(s, mixed);
    CHECK(c.size() == 2);  // ties answered together
    CHECK(c.back().coverage == doctest::Approx(1.0));
    CHECK(c.back().risk == doctest::Approx(2.0 / 3.0));
    CHECK(coverage_at_risk(c, 0.1) == 0.0);

    const std::vector<double> empty;
    const std::vector<bool> none;
    CHECK_THROWS_AS(risk_coverage_curve(empty, none), Error);
    CHECK_THROWS_AS(aurc(empty, none), Error);
    const std::vector<double> nan{0.1, std::nan("")};
    CHECK_THROWS_AS(risk_coverage_curve(nan, std::vector<bool>{true, false}), Error);

    // c above the largest coverage
    const std::vector<RiskCoveragePoint> partial{{0.5, 0.0, 1.0}};
    CHECK_THROWS_AS(risk_at_coverage(partial, 0.7), Error);
}

TEST_CASE("reversing a perfect ranking increases AURC") {
    const std::vector<double> s{0.9, 0.7, 0.5, 0.3, 0.1};
    const std::vector<bool> safe{true, true, true, false, false};
    std::vector<double> rev(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) rev[i] = -s[i];
    CHECK(aurc(rev, safe) > aurc(s, safe));
}

TEST_CASE("perfect-ranking AURC closed form") {
    for (std::size_t n = 1; n <= 10; ++n) {
        for (std::size_t u = 0; u <= n; ++u) {
            std::vector<double> s;
            std::vector<bool> safe;
            for (std::size_t i = 0; i < n; ++i) {
                s.push_back(static_cast<double>(n - i));
                safe.push_back(i < n - u);
            }
            CHECK(aurc(s, safe) == doctest::Approx(oracle::perfect_ranking_aurc(n, u)).epsilon(1e-12));
        }
    }
}

TEST_CASE("risk at full coverage is the base unsafe rate") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 1 + rng.index(20);
        std::vector<double> s;
        std::vector<bool> safe;
        double unsafe = 0;
        for (std::size_t i = 0; i < n; ++i) {
            s.push_back(std::round(rng.uniform() * 5) / 5);
            safe.push_back(rng.uniform() < 0.5);
            if (!safe.back()) unsafe += 1;
        }
        const auto c = risk_coverage_curve(s, safe);
        CHECK(c.back().coverage == doctest::Approx(1.0));
        CHECK(c.back().risk == doctest::Approx(unsafe / static_cast<double>(n)));
        for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i].coverage > c[i - 1].coverage);
        const double a = aurc(s, safe);
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
    }
}

TEST_CASE("binary ECE") {
    SUBCASE("all confident, three of four safe") {
        const std::vector<double> p{1.0, 1.0, 1.0, 1.0};
        const std::vector<bool> safe{true, true, true, false};
        CHECK(binary_ece(p, safe) == doctest::Approx(0.25));
    }
    SUBCASE("calibrated bin") {
        const std::vector<double> p(10, 0.8);
        std::vector<bool> safe(10, true);
        safe[0] = safe[1] = false;
        CHECK(binary_ece(p, safe) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("one bin is the global gap") {
        const std::vector<double> p{0.9, 0.2, 0.6, 0.55};
        const std::vector<bool> safe{true, true, false, true};
        double acc = 0, conf = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            conf += std::max(p[i], 1 - p[i]);
            acc += ((p[i] >= 0.5) == safe[i]) ? 1 : 0;
        }
        CHECK(binary_ece(p, safe, 1) == doctest::Approx(std::abs(acc - conf) / 4.0));
    }
    SUBCASE("errors") {
        const std::vector<double> empty;
        CHECK_THROWS_AS(binary_ece(empty, std::vector<bool>{}), Error);
        const std::vector<double> p{0.5};
        CHECK_THROWS_AS(binary_ece(p, std::vector<bool>{true}, 0), Error);
        const std::vector<double> bad{1.5};
        CHECK_THROWS_AS(binary_ece(bad, std::vector<bool>{true}), Error);
    }
}

TEST_CASE("binary ECE is invariant to p -> 1-p with flags flipped") {
    Rng rng(11);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + rng.index(15);
        std::vector<double> p, q;
        std::vector<bool> safe, flipped;
        for (std::size_t i = 0; i < n; ++i) {
            // avoid exactly 0.5, where the prediction rule is asymmetric
            double v = rng.uniform();
            if (v == 0.5) v = 0.25;
            p.push_back(v);
            q.push_back(1.0 - v);
            safe.push_back(rng.uniform() < 0.5);
            flipped.push_back(!safe.back());
        }
        CHECK(binary_ece(p, safe) == doctest::Approx(binary_ece(q, flipped)).epsilon(1e-9));
    }
}

TEST_CASE("metrics agree with the brute-force oracle for n <= 8") {
    const std::vector<std::vector<double>> score_sets = {
        {0.95, 0.8, 0.7, 0.6, 0.55, 0.3, 0.1, 0.5},
        {0.9, 0.9, 0.4, 0.4, 0.4, 0.2, 0.75, 0.65},
        {1.0, 0.0, 0.52, 0.48, 0.85, 0.15, 0.6, 0.6},
    };
    std::size_t cases = 0;
    for (const auto& base : score_sets) {
        for (std::size_t n = 1; n <= 8; ++n) {
            const std::vector<double> s(base.begin(), base.begin() + static_cast<long>(n));
            for (unsigned mask = 0; mask < (1u << n); ++mask) {
                std::vector<bool> safe(n);
                for (std::size_t i = 0; i < n; ++i) safe[i] = (mask >> i) & 1u;
                const auto curve = risk_coverage_curve(s, safe);
                const auto expect = oracle::risk_coverage(s, safe);
                REQUIRE(curve.size() == expect.size());
                for (std::size_t k = 0; k < curve.size(); ++k) {
                    CHECK(curve[k].coverage == doctest::Approx(expect[k].coverage).epsilon(1e-12));
                    CHECK(curve[k].risk == doctest::Approx(expect[k].risk).epsilon(1e-12));
                }
                CHECK(aurc(s, safe) == doctest::Approx(oracle::aurc(s, safe)).epsilon(1e-12));
                for (double c : {0.1, 0.3, 0.5, 0.7, 1.0})
                    CHECK(risk_at_coverage(curve, c) == doctest::Approx(oracle::risk_at_coverage(expect, c)));
                for (int bins : {1, 4, 15})
                    CHECK(binary_ece(s, safe, bins) == doctest::Approx(oracle::binary_ece(s, safe, bins)).epsilon(1e-12));
                ++cases;
            }
        }
    }
    CHECK(cases == 3 * 510);
}
