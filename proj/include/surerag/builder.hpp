#pragma once

// Benchmark construction: five evidence conditions per multi-hop source
// question, metadata-derived pair labels, natural answer perturbations and
// group-disjoint splits.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "surerag/types.hpp"

namespace surerag::builder {

enum class AnswerType { entity, number, date, yesno, other };
std::string_view to_string(AnswerType t);
AnswerType parse_answer_type(std::string_view s);

struct GoldFact {
    std::string title;
    std::string sentence;
    bool operator==(const GoldFact&) const = default;
};

struct SourceQuestion {
    std::string source_id;
    std::string question;
    std::string answer;
    AnswerType answer_type = AnswerType::other;
    std::vector<GoldFact> gold_facts;
    // Gold passages carry Origin::gold_support; everything else is the
    // distractor pool.
    std::vector<Passage> candidate_passages;

    bool operator==(const SourceQuestion&) const = default;
};

// Throws invariant: fewer than two gold passages, or a gold fact that does
// not resolve to a sentence of a candidate passage with the same title.
void validate(const SourceQuestion& src);

std::vector<SourceQuestion> read_sources(const std::filesystem::path& path);
void write_sources(const std::vector<SourceQuestion>& sources, const std::filesystem::path& path);

enum class PerturbationKind { entity_swap, number_change, date_shift, yesno_flip };
std::string_view to_string(PerturbationKind k);

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::entity_swap;
    std::string original;
    std::string replacement;
};

// Differs from the original ignoring case and carries no "not " prefix.
bool is_valid_replacement(std::string_view original, std::string_view replacement);

// Adds delta to the first numeral of `text` (the first exactly-four-digit
// numeral when year_only). Returns nullopt when there is no such numeral or
// the result would be negative.
std::optional<std::string> shift_numeral(std::string_view text, long delta, bool year_only);

std::optional<PerturbationSpec> perturb_answer(const std::string& answer, AnswerType type,
                                               const SourceQuestion& src, std::uint64_t rng_seed);

struct BuildOptions {
    // Passages taken for the hard-insufficient and irrelevant variants;
    // 0 selects half of the distractor pool (at least one).
    std::size_t evidence_k = 0;
};

std::string group_id_for(const SourceQuestion& src);

// Variants come back with split = train; assign_splits decides the real one.
// Omitted variants are appended to `notes` with a reason.
std::vector<ExampleRecord> build_variants(const SourceQuestion& src, std::uint64_t rng_seed,
                                          std::vector<std::string>& notes,
                                          const BuildOptions& options = {});

// src_map is keyed by group_id.
std::vector<PairLabel> derive_pair_labels(const std::vector<ExampleRecord>& records,
                                          const std::map<std::string, SourceQuestion>& src_map);

using SplitRatios = std::array<double, 3>;

std::map<std::string, Split> assign_splits(const std::vector<std::string>& groups,
                                           const SplitRatios& ratios, std::uint64_t rng_seed);

// Fraction of refuted-condition answers starting with "not " (0 when there
// are none).
double audit_prefix_not(const std::vector<ExampleRecord>& records);

struct BuildResult {
    std::vector<ExampleRecord> examples;
    std::vector<PairLabel> pair_labels;
    std::vector<std::string> notes;
    std::map<std::string, std::size_t> counts;  // per condition, split and pair label
    double prefix_not_rate = 0.0;
};

BuildResult build_benchmark(const std::vector<SourceQuestion>& sources, std::uint64_t seed,
                            const SplitRatios& ratios, const BuildOptions& options = {});

// Flat key = value manifest: seed, ratios, counts, prefix-not rate, notes.
void write_build_manifest(const BuildResult& result, std::uint64_t seed, const SplitRatios& ratios,
                          const std::filesystem::path& path);

// Deterministic two-hop questions over an invented world (bridge entities,
// founding years, head counts, yes/no comparisons), eight distractors each.
std::vector<SourceQuestion> make_scripted_sources(std::size_t n, std::uint64_t seed);

}  // namespace surerag::builder
