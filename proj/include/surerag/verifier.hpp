#pragma once

// Pair-level relation distributions h(q, c, e): ingested from an external
// scorer's pair-scores file, or computed by a deterministic lexical surrogate.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "surerag/types.hpp"

namespace surerag::verifier {

struct SurrogateParams {
    std::vector<std::string> negation_cues = {"not", "no", "never", "n't", "neither", "nor", "without"};
    double sharpness = 4.0;
    std::size_t negation_window = 5;
};

enum class VerifierKind { ingested, lexical_surrogate };

struct PairVerifier {
    VerifierKind kind = VerifierKind::lexical_surrogate;
    std::optional<std::filesystem::path> score_source;
    SurrogateParams surrogate;

    static PairVerifier ingested(std::filesystem::path source) {
        return {VerifierKind::ingested, std::move(source), {}};
    }
    static PairVerifier lexical(SurrogateParams params = {}) {
        return {VerifierKind::lexical_surrogate, std::nullopt, std::move(params)};
    }
};

void validate(const PairVerifier& v);

// Softmax of sharpness * (o(1-g), o*g, 1-o), where o is the content-token
// Jaccard overlap of claim and passage and g flags a negation cue within the
// window of a claim token in the passage. The question is accepted for
// interface parity with neural scorers and does not enter the formula.
RelationDist surrogate_distribution(std::string_view question, std::string_view claim,
                                    std::string_view passage, const SurrogateParams& params = {});

// One score per (example, claim, passage) in canonical order. Ingested
// scores are returned unchanged; a triple absent from the file raises
// missing_pair.
std::vector<PairScore> score_pairs(const PairVerifier& verifier, const std::vector<ExampleRecord>& examples);

}  // namespace surerag::verifier
