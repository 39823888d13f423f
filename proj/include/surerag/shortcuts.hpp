#pragma once

// Shortcut baselines that see only one restricted slice of an example. Each
// feature map takes a view type holding exactly the fields that baseline may
// read, so a baseline cannot depend on anything else.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "surerag/logistic.hpp"
#include "surerag/metrics.hpp"
#include "surerag/types.hpp"

namespace surerag::shortcuts {

enum class ShortcutKind { majority, hypothesis_only, evidence_only, length_only, overlap_only, concat_tfidf };
inline constexpr std::array<ShortcutKind, 6> all_shortcuts = {
    ShortcutKind::majority,     ShortcutKind::hypothesis_only, ShortcutKind::evidence_only,
    ShortcutKind::length_only,  ShortcutKind::overlap_only,    ShortcutKind::concat_tfidf};
std::string_view to_string(ShortcutKind k);
ShortcutKind parse_shortcut(std::string_view s);

inline constexpr std::uint32_t hash_dim = 1u << 15;

struct AnswerView {
    std::string answer;
    static AnswerView of(const ExampleRecord& r) { return {r.answer}; }
};

struct EvidenceView {
    std::vector<std::string> passages;
    static EvidenceView of(const ExampleRecord& r);
};

struct LengthView {
    double answer_tokens = 0;
    double evidence_tokens = 0;
    double passage_count = 0;
    double mean_passage_tokens = 0;
    static LengthView of(const ExampleRecord& r);
};

struct OverlapView {
    std::string answer;
    std::string evidence;
    static OverlapView of(const ExampleRecord& r);
};

struct ConcatView {
    std::string text;  // question + answer + evidence
    static ConcatView of(const ExampleRecord& r);
};

// Character 3-gram counts hashed into hash_dim buckets, L2-normalised.
logistic::SparseRow char_trigram_features(std::string_view s);
std::vector<double> length_features(const LengthView& v);
// (Jaccard, containment of answer tokens, count of answer tokens in evidence)
std::vector<double> overlap_features(const OverlapView& v);

// Hashed tf-idf over word tokens; idf fitted on the training documents.
class TfidfHasher {
public:
    void fit(const std::vector<std::string>& docs);
    logistic::SparseRow transform(const std::string& doc) const;

private:
    std::vector<double> idf_;
};

struct ShortcutOptions {
    double l2_lambda = 1e-3;
    std::size_t max_iters = 300;
};

struct ShortcutResult {
    ShortcutKind kind = ShortcutKind::majority;
    metrics::F1Report f1;
    std::vector<Label> predictions;
};

// Trains on `train` and scores `test`. Throws invalid_argument when the two
// share a group.
ShortcutResult run_shortcut(ShortcutKind kind, const std::vector<ExampleRecord>& train,
                            const std::vector<ExampleRecord>& test, const ShortcutOptions& options = {});

}  // namespace surerag::shortcuts
