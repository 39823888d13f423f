#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "surerag/error.hpp"
#include "surerag/pipeline.hpp"

using namespace surerag;
using namespace surerag::pipeline;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig small_run(const fs::path& dir, std::size_t sources = 40) {
    builder::write_sources(builder::make_scripted_sources(sources, 3), dir / "sources.jsonl");
    RunConfig c;
    c.source = dir / "sources.jsonl";
    c.out = dir / "run";
    c.experiment.max_iters = 200;
    return c;
}

}  // namespace

TEST_CASE("config round-trips through key = value text") {
    RunConfig c;
    c.seed = 21;
    c.scores = "scores.jsonl";
    c.set("feature_mode", "bm25_retrieval");
    c.set("beta_grid", "0, 0.5");
    c.set("tau_grid", "0.1");
    c.set("u_weights", "0.4,0.3,0.1,0.1,0.1");
    c.set("seeds", "1,2");
    const auto doc = c.to_kv();
    const auto back = RunConfig::from_kv(kv::Document::parse(doc.str()));
    CHECK(back.to_kv().str() == doc.str());
    CHECK(back.seed == 21);
    CHECK(back.experiment.feature_mode == features::FeatureMode::bm25_retrieval);
    CHECK(back.experiment.beta_grid == std::vector<double>{0, 0.5});
    CHECK(back.seeds == std::vector<std::uint64_t>{1, 2});

    CHECK(RunConfig{}.to_kv().require("tau_grid") == "auto");
    try {
        c.set("no_such_key", "1");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_argument);
    }
    CHECK_THROWS_AS(c.set("seed", "abc"), Error);

    RunConfig bad;
    bad.split_ratios = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(validate(bad), Error);
    CHECK(parse_stage("calibrate") == Stage::calibrate);
    CHECK_THROWS_AS(parse_stage("deploy"), Error);
}

TEST_CASE("sha256 of a known string") {
    const auto dir = fixture::scratch_dir("sha");
    std::ofstream(dir / "abc.txt", std::ios::binary) << "abc";
    CHECK(sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("full run is reproducible and hashed") {
    const auto dir = fixture::scratch_dir("pipeline-repeat");
    auto c = small_run(dir);
    const auto first = run_pipeline(c);
    const auto m1 = slurp(first.manifest);
    const auto metrics1 = slurp(c.out / files::metrics_json);
    CHECK(m1.find("output.model.txt.sha256") != std::string::npos);
    CHECK(m1.find("input.source.sha256") != std::string::npos);
    for (const char* f : {files::examples, files::scores, files::features, files::model, files::predictions,
                          files::metrics_text, files::diagnostics_text})
        CHECK(fs::exists(c.out / f));

    const auto second = run_pipeline(c);
    CHECK(slurp(second.manifest) == m1);
    CHECK(slurp(c.out / files::metrics_json) == metrics1);
    CHECK(!first.metrics.empty());

    c.seed = 14;
    run_pipeline(c);
    CHECK(slurp(c.out / files::manifest) != m1);
}

TEST_CASE("stages run one at a time and failures are tagged") {
    const auto dir = fixture::scratch_dir("pipeline-stages");
    auto c = small_run(dir, 20);
    run_stage(c, Stage::build);
    CHECK(fs::exists(c.out / files::examples));
    CHECK(slurp(c.out / files::manifest).find("stage = build") != std::string::npos);

    // train before features: the stage fails and leaves no model behind.
    try {
        run_stage(c, Stage::train);
        FAIL("expected a stage error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("stage train") != std::string::npos);
        CHECK(e.code() == ErrorCode::io);
    }
    CHECK_FALSE(fs::exists(c.out / files::model));

    for (auto s : {Stage::score, Stage::features, Stage::train, Stage::calibrate, Stage::tune, Stage::evaluate,
                   Stage::diagnose})
        run_stage(c, s);
    CHECK(fs::exists(c.out / files::diagnostics_json));

    auto no_source = c;
    no_source.source.reset();
    no_source.out = dir / "empty";
    CHECK_THROWS_AS(run_stage(no_source, Stage::build), Error);
}

TEST_CASE("ingested scores missing a pair fail the score stage") {
    const auto dir = fixture::scratch_dir("pipeline-ingest");
    auto c = small_run(dir, 12);
    run_stage(c, Stage::build);
    auto labels = read_pair_labels(c.out / files::pair_labels);
    labels.pop_back();
    write_pair_scores(fixture::oracle_scores(labels, 1), dir / "scores.jsonl");
    c.scores = dir / "scores.jsonl";
    c.examples = c.out / files::examples;
    try {
        run_stage(c, Stage::score);
        FAIL("expected missing_pair");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::missing_pair);
    }
    CHECK_FALSE(fs::exists(c.out / files::scores));
}

TEST_CASE("test labels do not reach the fitted model") {
    const auto dir = fixture::scratch_dir("pipeline-blind");
    auto c = small_run(dir, 40);
    run_stage(c, Stage::build);
    c.examples = c.out / files::examples;
    auto run_to_tune = [&] {
        for (auto s : {Stage::score, Stage::features, Stage::train, Stage::calibrate, Stage::tune}) run_stage(c, s);
        return slurp(c.out / files::model);
    };
    const auto model_a = run_to_tune();

    auto ex = read_examples(*c.examples);
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < ex.size(); ++i)
        if (ex[i].split == Split::test) test.push_back(i);
    REQUIRE(test.size() > 2);
    // Rotate (condition, label) over the test rows.
    const auto first = std::make_pair(ex[test[0]].condition, ex[test[0]].label);
    for (std::size_t j = 0; j + 1 < test.size(); ++j) {
        ex[test[j]].condition = ex[test[j + 1]].condition;
        ex[test[j]].label = ex[test[j + 1]].label;
    }
    ex[test.back()].condition = first.first;
    ex[test.back()].label = first.second;
    write_examples(ex, *c.examples);
    CHECK(run_to_tune() == model_a);
}

TEST_CASE("multi-seed summary") {
    const std::vector<std::vector<std::pair<std::string, double>>> runs{
        {{"sure_calibrated.macro_f1", 0.88}, {"sure_calibrated.f1.Supported", 0.9}},
        {{"sure_calibrated.macro_f1", 0.90}, {"sure_calibrated.f1.Supported", 0.9}},
        {{"sure_calibrated.macro_f1", 0.91}, {"sure_calibrated.f1.Supported", 0.9}}};
    const auto s = summarize_seeds(runs);
    REQUIRE(s.size() == 2);
    CHECK(s[0].mean == doctest::Approx(0.896667).epsilon(1e-5));
    CHECK(s[0].stddev == doctest::Approx(0.012472).epsilon(1e-4));
    CHECK(s[1].stddev == doctest::Approx(0.0).epsilon(1e-12));
    const auto text = format_multi_seed({13, 21, 42}, runs);
    CHECK(text.find("Seeds: 13, 21, 42") != std::string::npos);
    CHECK(text.find("0.8967 ± 0.0125") != std::string::npos);
    CHECK(text.find("SURE calibrated") != std::string::npos);

    auto mismatched = runs;
    mismatched[1].pop_back();
    CHECK_THROWS_AS(summarize_seeds(mismatched), Error);
}

TEST_CASE("multi-seed run writes per-seed directories") {
    const auto dir = fixture::scratch_dir("pipeline-multi");
    auto c = small_run(dir, 20);
    c.seeds = {13, 21};
    const auto report = multi_seed(c);
    CHECK(fs::exists(report));
    CHECK(fs::exists(c.out / "seed_13" / files::manifest));
    CHECK(fs::exists(c.out / "seed_21" / files::metrics_json));
    CHECK(slurp(report).find("Seeds: 13, 21") != std::string::npos);
    const auto m = slurp(c.out / files::manifest);
    CHECK(m.find("stage = multi-seed") != std::string::npos);
}

TEST_CASE("no-retrieval runs label their diagnostics") {
    const auto dir = fixture::scratch_dir("pipeline-noret");
    auto c = small_run(dir, 20);
    c.experiment.feature_mode = features::FeatureMode::no_retrieval;
    run_pipeline(c);
    const auto d = slurp(c.out / files::diagnostics_text);
    CHECK(d.find("drop retrieval score") != std::string::npos);
    CHECK(d.find("(SURE, drop retrieval score)") != std::string::npos);
}
