#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "surerag/diagnostics.hpp"
#include "surerag/error.hpp"
#include "surerag/shortcuts.hpp"

using namespace surerag;
using namespace surerag::shortcuts;

namespace {

// Examples with random answers and passages whose labels carry no signal.
std::vector<ExampleRecord> random_examples(std::size_t n, Split split, const std::string& prefix, Rng& rng) {
    static const char* words[] = {"amber", "basalt", "cedar", "delta", "ember", "fjord", "garnet", "heron",
                                  "indigo", "juniper", "kelp", "lichen", "marble", "nectar", "onyx", "pumice"};
    auto phrase = [&](std::size_t len) {
        std::string s;
        for (std::size_t i = 0; i < len; ++i) s += std::string(i ? " " : "") + words[rng.index(16)];
        return s;
    };
    std::vector<ExampleRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        ExampleRecord r;
        r.condition = all_conditions[rng.index(5)];
        r.label = expected_label(r.condition);
        r.group_id = prefix + std::to_string(i);
        r.example_id = r.group_id + ":" + std::string(to_string(r.condition));
        r.split = split;
        r.question = phrase(6) + "?";
        r.answer = phrase(1 + rng.index(3));
        r.claims = {r.answer};
        r.passages = {fixture::plain_passage(r.example_id + "-p", phrase(10), rng.uniform())};
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<DecisionOutcome> preds_for(const std::vector<ExampleRecord>& ex, const std::map<Condition, double>& p) {
    std::vector<DecisionOutcome> out;
    for (const auto& e : ex) {
        const double s = p.at(e.condition);
        out.push_back({e.example_id, {s, 0.0, 1.0 - s}, s >= 0.5 ? Label::supported : Label::insufficient, 0, s,
                       Decision::abstain});
    }
    return out;
}

std::vector<ExampleRecord> full_groups(std::size_t groups) {
    std::vector<ExampleRecord> out;
    for (std::size_t g = 0; g < groups; ++g)
        for (auto c : all_conditions) {
            ExampleRecord r;
            r.group_id = "g" + std::to_string(g);
            r.condition = c;
            r.example_id = r.group_id + ":" + std::string(to_string(c));
            r.label = expected_label(c);
            out.push_back(r);
        }
    return out;
}

}  // namespace

TEST_CASE("views expose only their fields") {
    ExampleRecord r;
    r.question = "Which harbour?";
    r.answer = "Port Arlen";
    r.passages = {fixture::plain_passage("a", "Port Arlen is busy.", 0.5),
                  fixture::plain_passage("b", "Ferries run daily from here.", 0.1)};
    CHECK(AnswerView::of(r).answer == "Port Arlen");
    CHECK(EvidenceView::of(r).passages.size() == 2);
    const auto len = LengthView::of(r);
    CHECK(len.answer_tokens == 2);
    CHECK(len.passage_count == 2);
    CHECK(len.evidence_tokens == 9);
    CHECK(len.mean_passage_tokens == 4.5);
    const auto ov = overlap_features(OverlapView::of(r));
    REQUIRE(ov.size() == 3);
    CHECK(ov[1] == 1.0);
    CHECK(ConcatView::of(r).text.find("Which harbour?") != std::string::npos);

    const auto tri = char_trigram_features("abc");
    double norm = 0;
    for (double v : tri.value) norm += v * v;
    CHECK(norm == doctest::Approx(1.0));
    for (auto i : tri.index) CHECK(i < hash_dim);
}

TEST_CASE("majority baseline predicts the modal train label") {
    const auto bench = fixture::oracle_benchmark(30, 4);
    std::vector<ExampleRecord> train, test;
    for (const auto& e : bench.build.examples) (e.split == Split::train ? train : test).push_back(e);
    const auto r = run_shortcut(ShortcutKind::majority, train, test);
    for (auto l : r.predictions) CHECK(l == Label::insufficient);
    CHECK(r.f1.per_class[0] == 0.0);
    CHECK(r.f1.per_class[1] == 0.0);
}

TEST_CASE("hypothesis-only stays at chance when labels carry no answer signal") {
    Rng rng(99);
    const auto train = random_examples(900, Split::train, "tr", rng);
    const auto test = random_examples(900, Split::test, "te", rng);
    const auto real = run_shortcut(ShortcutKind::hypothesis_only, train, test);

    auto shuffled = train;
    std::vector<Label> labels;
    for (const auto& e : shuffled) labels.push_back(e.label);
    rng.shuffle(labels);
    for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].label = labels[i];
    const auto control = run_shortcut(ShortcutKind::hypothesis_only, shuffled, test);
    CHECK(std::abs(real.f1.macro - control.f1.macro) <= 0.05);
}

TEST_CASE("every shortcut runs and rejects group overlap") {
    const auto bench = fixture::oracle_benchmark(30, 4);
    std::vector<ExampleRecord> train, test;
    for (const auto& e : bench.build.examples) (e.split == Split::train ? train : test).push_back(e);
    for (auto k : all_shortcuts) {
        const auto r = run_shortcut(k, train, test);
        CHECK(r.predictions.size() == test.size());
        CHECK(r.f1.macro >= 0.0);
        CHECK(r.f1.macro <= 1.0);
        CHECK(parse_shortcut(to_string(k)) == k);
        CHECK(run_shortcut(k, train, test).predictions == r.predictions);
    }
    auto leaky = test;
    leaky.push_back(train.front());
    CHECK_THROWS_AS(run_shortcut(ShortcutKind::length_only, train, leaky), Error);
}

TEST_CASE("artifact ratio") {
    const auto r = diagnostics::artifact_ratio(0.6101, 0.8951);
    CHECK(r.ratio == doctest::Approx(0.6816).epsilon(1e-4));
    CHECK(r.severity == "moderate");
    CHECK(diagnostics::artifact_ratio(0.7, 0.7).ratio == 1.0);
    CHECK(diagnostics::artifact_ratio(0.7, 0.7).severity == "severe");
    CHECK(diagnostics::artifact_ratio(0.0, 0.8).ratio == 0.0);
    CHECK(diagnostics::artifact_ratio(0.0, 0.8).severity == "low");
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        const double a = rng.uniform(), b = rng.uniform(0.01, 1), c = rng.uniform(0.1, 10);
        CHECK(diagnostics::artifact_ratio(a * c, b * c).ratio == doctest::Approx(diagnostics::artifact_ratio(a, b).ratio));
    }
    CHECK_THROWS_AS(diagnostics::artifact_ratio(0.5, 0.0), Error);
}

TEST_CASE("counterfactual swap") {
    const auto ex = full_groups(4);
    const std::map<Condition, double> good{{Condition::full, 0.9},
                                           {Condition::partial, 0.4},
                                           {Condition::hard_insufficient, 0.2},
                                           {Condition::irrelevant, 0.1},
                                           {Condition::refuted, 0.05}};
    const auto r = diagnostics::counterfactual_swap(preds_for(ex, good), ex);
    REQUIRE(r.rows.size() == 4);
    CHECK(r.rows[0].condition == Condition::partial);
    CHECK(r.rows[0].pairs == 4);
    CHECK(r.rows[0].success_rate == 1.0);
    CHECK(r.rows[0].mean_delta == doctest::Approx(0.5));
    CHECK(r.skipped.empty());

    // Equal scores are not a success.
    auto tie = good;
    tie[Condition::partial] = 0.9;
    const auto t = diagnostics::counterfactual_swap(preds_for(ex, tie), ex);
    CHECK(t.rows[0].success_rate == 0.0);
    CHECK(t.rows[0].mean_delta == 0.0);

    // Row order does not matter.
    auto rev = ex;
    std::reverse(rev.begin(), rev.end());
    auto preds = preds_for(ex, good);
    std::reverse(preds.begin(), preds.end());
    const auto o = diagnostics::counterfactual_swap(preds, rev);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(o.rows[i].pairs == r.rows[i].pairs);
        CHECK(o.rows[i].mean_delta == doctest::Approx(r.rows[i].mean_delta));
    }

    auto no_full = ex;
    std::erase_if(no_full, [](const ExampleRecord& e) { return e.group_id == "g2" && e.condition == Condition::full; });
    const auto s = diagnostics::counterfactual_swap(preds_for(no_full, good), no_full);
    CHECK(s.skipped == std::vector<std::string>{"g2"});
    CHECK(s.rows[0].pairs == 3);

    auto missing = preds_for(ex, good);
    missing.pop_back();
    CHECK_THROWS_AS(diagnostics::counterfactual_swap(missing, ex), Error);
}

TEST_CASE("diagnostics report on an oracle benchmark") {
    const auto bench = fixture::oracle_benchmark(40, 6);
    experiment::ExperimentOptions opts;
    opts.feature_mode = features::FeatureMode::no_retrieval;
    const auto run = experiment::run_experiment(bench.build.examples, bench.matrices, opts);
    const auto rep = diagnostics::diagnose(bench.build.examples, bench.matrices, run.predictions,
                                           run.report.calibrated.f1.macro, opts);
    CHECK(rep.shortcuts.size() == all_shortcuts.size());
    CHECK(rep.prefix_not_rate == 0.0);
    CHECK(rep.no_oracle.modes.size() == 3);
    const auto text = diagnostics::format_report(rep);
    CHECK(text.find("drop retrieval score") != std::string::npos);
    CHECK(text.find("<- this run") != std::string::npos);
    CHECK(text.find("Full vs. partial") != std::string::npos);
    CHECK(diagnostics::to_json(rep).find("\"artifact_ratio\"") != std::string::npos);
    CHECK(diagnostics::mode_label(features::FeatureMode::bm25_retrieval) == "BM25 retrieval score");
}
