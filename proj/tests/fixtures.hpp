#pragma once

// Synthetic benchmarks shared by the unit and acceptance tests.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "surerag/builder.hpp"
#include "surerag/corpus.hpp"
#include "surerag/random.hpp"

namespace fixture {

using namespace surerag;

// A distribution concentrated on `rel`: the dominant coordinate is drawn
// from [lo, hi] and the rest split at random between the other two.
inline RelationDist peaked(Relation rel, double lo, double hi, Rng& rng) {
    const double top = rng.uniform(lo, hi);
    const double split = rng.uniform();
    RelationDist d{};
    const std::size_t k = index(rel);
    d[k] = top;
    d[(k + 1) % 3] = (1.0 - top) * split;
    d[(k + 2) % 3] = (1.0 - top) * (1.0 - split);
    return d;
}

// Oracle pair scores: every stub's relation gets a peaked distribution
// (support/refute rows in [0.85, 0.97], neutral rows in [0.70, 0.84]).
inline std::vector<PairScore> oracle_scores(const std::vector<PairLabel>& labels, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<PairScore> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        const auto d = l.label == Relation::neutral ? peaked(l.label, 0.70, 0.84, rng) : peaked(l.label, 0.85, 0.97, rng);
        out.push_back({l.example_id, l.claim_index, l.passage_id, d[0], d[1], d[2], l.label});
    }
    return out;
}

struct OracleBenchmark {
    builder::BuildResult build;
    std::vector<PairScore> scores;
    ScoreMatrixSet matrices;
};

// Builder output over scripted sources (five variants per source) with
// oracle pair scores.
inline OracleBenchmark oracle_benchmark(std::size_t sources, std::uint64_t seed) {
    OracleBenchmark b;
    b.build = builder::build_benchmark(builder::make_scripted_sources(sources, seed), seed, {0.7, 0.15, 0.15});
    b.scores = oracle_scores(b.build.pair_labels, mix_seed(seed, "oracle-scores"));
    b.matrices = join_scores(b.build.examples, b.scores);
    return b;
}

inline Passage plain_passage(const std::string& id, const std::string& text, std::optional<double> retrieval,
                             Origin origin = Origin::distractor) {
    return {id, "Title " + id, {text}, retrieval, origin};
}

// Examples whose retrieval scores encode the label through their shape
// (sorted min-max patterns 0111 / 0011 / 0001) while the pair scores are
// drawn from one label-independent distribution.
struct LeakSet {
    std::vector<ExampleRecord> examples;
    ScoreMatrixSet matrices;
};

inline LeakSet leak_set(std::size_t groups, std::uint64_t seed) {
    Rng rng(seed);
    LeakSet s;
    const std::vector<std::string> group_ids = [&] {
        std::vector<std::string> g;
        for (std::size_t i = 0; i < groups; ++i) g.push_back("g-leak" + std::to_string(i));
        return g;
    }();
    const auto splits = builder::assign_splits(group_ids, {0.6, 0.2, 0.2}, seed);
    const Condition conditions[] = {Condition::full, Condition::refuted, Condition::irrelevant};
    const double shapes[3][4] = {{0, 1, 1, 1}, {0, 0, 1, 1}, {0, 0, 0, 1}};
    for (std::size_t g = 0; g < groups; ++g) {
        for (int c = 0; c < 3; ++c) {
            ExampleRecord ex;
            ex.group_id = group_ids[g];
            ex.condition = conditions[c];
            ex.example_id = ex.group_id + ":" + std::string(to_string(ex.condition));
            ex.split = splits.at(ex.group_id);
            ex.label = expected_label(ex.condition);
            ex.question = "Which harbour does ferry " + std::to_string(g) + " serve?";
            ex.answer = "Port " + std::to_string(g);
            ex.claims = {ex.answer};
            const double scale = rng.uniform(1.0, 5.0), offset = rng.uniform(0.0, 3.0);
            ScoreMatrix m{1, 4, {}};
            for (int i = 0; i < 4; ++i) {
                ex.passages.push_back(plain_passage(ex.example_id + "-p" + std::to_string(i),
                                                    "Ferry timetable entry " + std::to_string(i) + ".",
                                                    offset + scale * shapes[c][i]));
                const double a = rng.uniform(), b = rng.uniform() * (1.0 - a);
                m.cells.push_back({a, b, 1.0 - a - b});
            }
            s.examples.push_back(std::move(ex));
            s.matrices.push_back(std::move(m));
        }
    }
    return s;
}

// Refuted examples with one strongly refuting passage among 4 to 9 neutral
// passages.
inline std::vector<ScoreMatrix> single_refute_fixtures(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ScoreMatrix> out;
    for (std::size_t n = 0; n < count; ++n) {
        const std::size_t neutral = 4 + rng.index(6);
        ScoreMatrix m{1, neutral + 1, {}};
        const std::size_t at = rng.index(neutral + 1);
        for (std::size_t i = 0; i <= neutral; ++i)
            m.cells.push_back(i == at ? peaked(Relation::refute, 0.85, 0.97, rng)
                                      : peaked(Relation::neutral, 0.70, 0.84, rng));
        out.push_back(std::move(m));
    }
    return out;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("surerag-test-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace fixture
