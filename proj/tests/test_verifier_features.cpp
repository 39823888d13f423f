#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "surerag/error.hpp"
#include "surerag/features.hpp"
#include "surerag/verifier.hpp"

using namespace surerag;
using namespace surerag::features;

namespace {

ScoreMatrix row_matrix(std::vector<RelationDist> rows) {
    ScoreMatrix m{1, rows.size(), std::move(rows)};
    return m;
}

// Normalized exponentials of sharpness * r, evaluated directly.
RelationDist softmax3(double a, double b, double c, double sharpness) {
    const double ea = std::exp(sharpness * a), eb = std::exp(sharpness * b), ec = std::exp(sharpness * c);
    const double z = ea + eb + ec;
    return {ea / z, eb / z, ec / z};
}

void check_simplex(const RelationDist& d) {
    for (double p : d) CHECK(p >= 0.0);
    CHECK(std::abs(d[0] + d[1] + d[2] - 1.0) < 1e-9);
}

}  // namespace

TEST_CASE("surrogate: half overlap with a nearby negation") {
    // claim {bridge}, passage {bridge, tower}: o = 0.5, and "not" sits next to "bridge".
    const auto d = verifier::surrogate_distribution("q", "the bridge", "The bridge is not a tower.");
    const auto want = softmax3(0.0, 0.5, 0.5, 4.0);
    CHECK(d[0] == doctest::Approx(want[0]).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(want[1]).epsilon(1e-12));
    CHECK(d[2] == doctest::Approx(want[2]).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(0.4683).epsilon(1e-4));
    CHECK(d[0] == doctest::Approx(0.0634).epsilon(1e-3));
}

TEST_CASE("surrogate: containment and disjoint texts") {
    // claim {arlenport, harbour} inside passage {arlenport, harbour, busy}: o = 2/3.
    const auto full = verifier::surrogate_distribution("q", "Arlenport harbour", "The Arlenport harbour is busy.");
    CHECK(full[0] > full[2]);
    CHECK(full[2] > full[1]);
    const auto want = softmax3(2.0 / 3, 0.0, 1.0 / 3, 4.0);
    CHECK(full[0] == doctest::Approx(want[0]));

    const auto none = verifier::surrogate_distribution("q", "Arlenport", "Brixholm lies on a river.");
    CHECK(none[2] > none[0]);
    CHECK(none[2] > none[1]);

    verifier::SurrogateParams sharp;
    sharp.sharpness = 200;
    const auto limit = verifier::surrogate_distribution("q", "Arlenport harbour", "Arlenport harbour", sharp);
    CHECK(limit[0] > 1 - 1e-12);

    // A negation cue far from any claim token does not count.
    const auto far = verifier::surrogate_distribution(
        "q", "bridge", "bridge one two three four five six seven never");
    CHECK(far[1] < far[0]);
}

TEST_CASE("surrogate output is a simplex point and depends on token sets only") {
    const auto src = builder::make_scripted_sources(3, 2);
    for (const auto& s : src)
        for (const auto& p : s.candidate_passages) check_simplex(verifier::surrogate_distribution(s.question, s.answer, p.text()));
    const auto a = verifier::surrogate_distribution("q", "Arlenport bridge", "Bridge in Arlenport. Harbour too.");
    const auto b = verifier::surrogate_distribution("q", "Arlenport bridge", "Harbour too. Bridge in Arlenport.");
    CHECK(a == b);
}

TEST_CASE("score_pairs: canonical order, ingestion pass-through and coverage gaps") {
    const auto bench = fixture::oracle_benchmark(5, 3);
    const auto lex = verifier::score_pairs(verifier::PairVerifier::lexical(), bench.build.examples);
    REQUIRE(lex.size() == bench.build.pair_labels.size());
    for (std::size_t i = 0; i < lex.size(); ++i) {
        CHECK(lex[i].example_id == bench.build.pair_labels[i].example_id);
        CHECK(lex[i].passage_id == bench.build.pair_labels[i].passage_id);
    }
    CHECK(verifier::score_pairs(verifier::PairVerifier::lexical(), bench.build.examples) == lex);

    const auto dir = fixture::scratch_dir("ingest");
    auto shuffled = bench.scores;
    std::reverse(shuffled.begin(), shuffled.end());
    write_pair_scores(shuffled, dir / "s.jsonl");
    const auto got = verifier::score_pairs(verifier::PairVerifier::ingested(dir / "s.jsonl"), bench.build.examples);
    REQUIRE(got.size() == bench.scores.size());
    double max_diff = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].passage_id == bench.scores[i].passage_id);
        for (int k = 0; k < 3; ++k) max_diff = std::max(max_diff, std::abs(got[i].dist()[k] - bench.scores[i].dist()[k]));
    }
    CHECK(max_diff == 0.0);

    shuffled.erase(shuffled.begin() + 7);
    write_pair_scores(shuffled, dir / "gap.jsonl");
    try {
        verifier::score_pairs(verifier::PairVerifier::ingested(dir / "gap.jsonl"), bench.build.examples);
        FAIL("expected missing_pair");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::missing_pair);
    }

    verifier::PairVerifier bad;
    bad.kind = verifier::VerifierKind::ingested;
    CHECK_THROWS_AS(verifier::validate(bad), Error);
    auto flat = verifier::PairVerifier::lexical();
    flat.surrogate.sharpness = 0;
    CHECK_THROWS_AS(verifier::validate(flat), Error);
}

TEST_CASE("aggregate: definitions on small matrices") {
    const auto a = aggregate(row_matrix({{0.9, 0.05, 0.05}, {0.05, 0.9, 0.05}}), std::nullopt);
    CHECK(a.m_sup == 0.9);
    CHECK(a.m_ref == 0.9);
    CHECK(a.conflict_x == 0.9);
    CHECK(a.cov_supported == 1.0);

    const double third = 1.0 / 3;
    const auto u = aggregate(row_matrix({{third, third, third}, {third, third, third}, {third, third, third}}), 0.2);
    CHECK(u.disagreement_d == doctest::Approx(0.0));
    CHECK(u.entropy_mean == doctest::Approx(std::log(3.0)));
    CHECK(u.cov_insufficient == 1.0);
    CHECK(u.retrieval_u == 0.2);

    const auto d = aggregate(row_matrix({{0.8, 0.1, 0.1}, {0.2, 0.1, 0.7}}), std::nullopt);
    CHECK(d.disagreement_d == doctest::Approx(0.3));
    CHECK(d.cov_supported == 1.0);
    CHECK(d.mean_neutral == doctest::Approx(0.4));

    const auto r = aggregate(row_matrix({{0.1, 0.6, 0.3}}), std::nullopt);
    CHECK(r.cov_refuted == 1.0);

    CHECK(claim_verdict(0.5, 0.5) == Label::supported);
    CHECK(claim_verdict(0.4, 0.45) == Label::insufficient);
    CHECK(claim_verdict(0.5, 0.6) == Label::refuted);

    const auto one_hot = aggregate(row_matrix({{1, 0, 0}, {0, 0, 1}}), std::nullopt);
    CHECK(one_hot.entropy_mean == 0.0);

    CHECK_THROWS_AS(aggregate(ScoreMatrix{1, 0, {}}, std::nullopt), Error);
    CHECK_THROWS_AS(aggregate(row_matrix({{0.5, 0.5, 0.5}}), std::nullopt), Error);
}

TEST_CASE("aggregate properties over random matrices") {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t k = 1 + rng.index(8);
        std::vector<RelationDist> rows;
        for (std::size_t i = 0; i < k; ++i) {
            const double a = rng.uniform(), b = rng.uniform() * (1 - a);
            rows.push_back({a, b, 1 - a - b});
        }
        const auto f = aggregate(row_matrix(rows), std::nullopt);
        CHECK(std::abs(f.cov_supported + f.cov_refuted + f.cov_insufficient - 1.0) < 1e-9);
        CHECK(f.entropy_mean <= std::log(3.0) + 1e-9);
        CHECK(f.conflict_x <= std::min(f.m_sup, f.m_ref) + 1e-9);

        auto perm = rows;
        rng.shuffle(perm);
        const auto g = aggregate(row_matrix(perm), std::nullopt);
        CHECK(g.m_sup == f.m_sup);
        CHECK(g.cov_supported == f.cov_supported);
        CHECK(g.entropy_mean == doctest::Approx(f.entropy_mean).epsilon(1e-12));
        CHECK(g.disagreement_d == doctest::Approx(f.disagreement_d).epsilon(1e-12));
        for (auto p : {Pooling::max, Pooling::mean, Pooling::top_k}) {
            const auto x = pool_predict(row_matrix(rows), p), y = pool_predict(row_matrix(perm), p);
            for (int c = 0; c < 3; ++c) CHECK(x[c] == doctest::Approx(y[c]).epsilon(1e-12));
        }
    }
}

TEST_CASE("retrieval uncertainty") {
    const std::vector<double> s{1.0, 3.0, 2.0};
    CHECK(retrieval_uncertainty_from_scores(s) == doctest::Approx(0.5));
    const std::vector<double> flat{2.0, 2.0};
    CHECK(retrieval_uncertainty_from_scores(flat) == 0.5);
    CHECK(retrieval_uncertainty_from_scores({}) == 0.5);
    const std::vector<double> top{0.0, 1.0, 1.0, 1.0};
    CHECK(retrieval_uncertainty_from_scores(top) == doctest::Approx(0.25));
    // Affine rescaling leaves the normalized scores unchanged.
    const std::vector<double> scaled{5.0, 9.0, 9.0, 9.0};
    CHECK(retrieval_uncertainty_from_scores(scaled) == doctest::Approx(0.25));
}

TEST_CASE("feature modes differ only in the retrieval column") {
    const auto bench = fixture::oracle_benchmark(6, 5);
    for (std::size_t i = 0; i < bench.build.examples.size(); ++i) {
        const auto& ex = bench.build.examples[i];
        const auto w = aggregate(ex, bench.matrices[i], FeatureMode::with_retrieval);
        auto n = aggregate(ex, bench.matrices[i], FeatureMode::no_retrieval);
        auto b = aggregate(ex, bench.matrices[i], FeatureMode::bm25_retrieval);
        CHECK_FALSE(n.retrieval_u.has_value());
        REQUIRE(b.retrieval_u.has_value());
        CHECK(*b.retrieval_u >= 0.0);
        CHECK(*b.retrieval_u <= 1.0);
        n.retrieval_u = w.retrieval_u;
        b.retrieval_u = w.retrieval_u;
        CHECK(n == w);
        CHECK(b == w);
        CHECK(to_values(w, FeatureMode::with_retrieval).size() == 10);
        CHECK(to_values(w, FeatureMode::no_retrieval).size() == 9);

        // no_retrieval and bm25 never read the retrieval_score field.
        auto blanked = ex;
        for (auto& p : blanked.passages) p.retrieval_score = 123.0;
        CHECK(retrieval_uncertainty(blanked, FeatureMode::no_retrieval) == std::nullopt);
        CHECK(retrieval_uncertainty(blanked, FeatureMode::bm25_retrieval) ==
              retrieval_uncertainty(ex, FeatureMode::bm25_retrieval));
    }
    CHECK(feature_names(FeatureMode::no_retrieval).size() == 9);
    CHECK(feature_names(FeatureMode::with_retrieval).back() == "retrieval_u");
    CHECK(parse_feature_mode("bm25_retrieval") == FeatureMode::bm25_retrieval);
    CHECK_THROWS_AS(parse_feature_mode("bm26"), Error);
}

TEST_CASE("pooling baselines") {
    const auto m = row_matrix({{0.9, 0.05, 0.05}, {0.2, 0.1, 0.7}});
    const auto mx = pool_predict(m, Pooling::max);
    CHECK(mx[0] == doctest::Approx(0.9 / 1.7));
    CHECK(mx[1] == doctest::Approx(0.1 / 1.7));
    CHECK(mx[2] == doctest::Approx(0.7 / 1.7));
    CHECK(mx[0] == doctest::Approx(0.5294).epsilon(1e-4));
    CHECK(argmax_label(mx) == Label::supported);

    const auto mean = pool_predict(m, Pooling::mean);
    CHECK(mean[0] == doctest::Approx(0.55));
    CHECK(mean[1] == doctest::Approx(0.075));
    CHECK(mean[2] == doctest::Approx(0.375));

    const auto one = row_matrix({{0.3, 0.2, 0.5}});
    for (auto p : {Pooling::max, Pooling::mean, Pooling::top_k}) {
        const auto d = pool_predict(one, p);
        for (int c = 0; c < 3; ++c) CHECK(d[c] == doctest::Approx(one.cells[0][c]));
    }

    const auto three = row_matrix({{0.9, 0.05, 0.05}, {0.1, 0.1, 0.8}, {0.5, 0.3, 0.2}});
    const auto top2 = pool_predict(three, Pooling::top_k, 2);
    const double s = (0.9 + 0.5) / 2, r = (0.3 + 0.1) / 2, n = (0.8 + 0.2) / 2;
    CHECK(top2[0] == doctest::Approx(s / (s + r + n)));
    CHECK(top2[2] == doctest::Approx(n / (s + r + n)));

    CHECK_THROWS_AS(pool_predict(ScoreMatrix{1, 0, {}}, Pooling::max), Error);
    CHECK_THROWS_AS(pool_predict(m, Pooling::top_k, 0), Error);
}

TEST_CASE("pooling witnesses") {
    const auto partial = row_matrix({{0.9, 0.05, 0.05}, {0.1, 0.1, 0.8}});
    CHECK(argmax_label(pool_predict(partial, Pooling::max)) == Label::supported);

    for (const auto& m : fixture::single_refute_fixtures(20, 3)) {
        const auto mean = pool_predict(m, Pooling::mean);
        const auto f = aggregate(m, std::nullopt);
        CHECK(mean[1] < 0.5);
        CHECK(f.m_ref >= 0.85);
    }
}

TEST_CASE("bm25") {
    const std::vector<std::vector<std::string>> docs{{"bridge"}};
    const auto stats = Bm25Stats::from_documents(docs);
    CHECK(stats.idf("bridge") == doctest::Approx(std::log(4.0 / 3.0)));
    CHECK(bm25_score({"bridge"}, docs[0], stats) == doctest::Approx(0.2877).epsilon(1e-4));
    CHECK(bm25_score({"river"}, docs[0], stats) == 0.0);

    const std::vector<std::vector<std::string>> corpus{{"a", "b", "c"}, {"a", "a", "d"}, {"e"}};
    const auto st = Bm25Stats::from_documents(corpus);
    CHECK(st.avg_doc_len == doctest::Approx(7.0 / 3));
    const double once = bm25_score({"a"}, {"a", "x", "y"}, st);
    const double twice = bm25_score({"a"}, {"a", "a", "y"}, st);
    CHECK(twice >= once);

    CHECK_THROWS_AS(bm25_score({"a"}, {"a"}, Bm25Stats{}), Error);
}

TEST_CASE("feature file round-trip") {
    const auto bench = fixture::oracle_benchmark(4, 2);
    std::vector<FeatureRow> rows;
    for (std::size_t i = 0; i < bench.build.examples.size(); ++i) {
        const auto mode = i % 2 ? FeatureMode::with_retrieval : FeatureMode::no_retrieval;
        rows.push_back({bench.build.examples[i].example_id,
                        aggregate(bench.build.examples[i], bench.matrices[i], mode)});
    }
    const auto dir = fixture::scratch_dir("features");
    write_features(rows, dir / "f.jsonl");
    CHECK(read_features(dir / "f.jsonl") == rows);
}
