#pragma once

// Core data model shared by every stage: evidence passages, verification
// examples, pair-level relation scores and answer-level decisions.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace surerag {

// Answer-level sufficiency label. The enumerator order is the fixed
// tie-break order used by every argmax in the project.
enum class Label { supported = 0, refuted = 1, insufficient = 2 };
inline constexpr std::size_t label_count = 3;
inline constexpr std::array<Label, label_count> all_labels = {
    Label::supported, Label::refuted, Label::insufficient};

enum class Condition { full, partial, hard_insufficient, irrelevant, refuted };
inline constexpr std::array<Condition, 5> all_conditions = {
    Condition::full, Condition::partial, Condition::hard_insufficient,
    Condition::irrelevant, Condition::refuted};

enum class Split { train, dev, test };
enum class Origin { gold_support, distractor, overlap_substitute };

// Pair-level relation between one claim and one passage.
enum class Relation { support = 0, refute = 1, neutral = 2 };

enum class Decision { answer, abstain };

std::string_view to_string(Label v);
std::string_view to_string(Condition v);
std::string_view to_string(Split v);
std::string_view to_string(Origin v);
std::string_view to_string(Relation v);
std::string_view to_string(Decision v);

// Parsers throw surerag::Error(parse) on unknown names.
Label parse_label(std::string_view s);
Condition parse_condition(std::string_view s);
Split parse_split(std::string_view s);
Origin parse_origin(std::string_view s);
Relation parse_relation(std::string_view s);
Decision parse_decision(std::string_view s);

// The label an example must carry given how its evidence was built.
Label expected_label(Condition c);

inline constexpr std::size_t index(Label l) { return static_cast<std::size_t>(l); }
inline constexpr std::size_t index(Relation r) { return static_cast<std::size_t>(r); }

// Relation distribution over (support, refute, neutral).
using RelationDist = std::array<double, 3>;
// Label distribution over (Supported, Refuted, Insufficient).
using LabelDist = std::array<double, 3>;

// First maximal coordinate wins, which realises the fixed label order.
Label argmax_label(const LabelDist& pi);

struct Passage {
    std::string passage_id;
    std::string title;
    std::vector<std::string> sentences;
    std::optional<double> retrieval_score;
    Origin origin = Origin::distractor;

    // Sentences joined by single spaces.
    std::string text() const;

    bool operator==(const Passage&) const = default;
};

struct ExampleRecord {
    std::string example_id;
    std::string group_id;
    Split split = Split::train;
    Condition condition = Condition::full;
    std::string question;
    std::string answer;
    std::vector<std::string> claims;
    std::vector<Passage> passages;
    Label label = Label::supported;

    bool operator==(const ExampleRecord&) const = default;
};

struct PairScore {
    std::string example_id;
    std::size_t claim_index = 0;
    std::string passage_id;
    double p_support = 0.0;
    double p_refute = 0.0;
    double p_neutral = 0.0;
    std::optional<Relation> pair_label;

    RelationDist dist() const { return {p_support, p_refute, p_neutral}; }

    bool operator==(const PairScore&) const = default;
};

// Supervision stub emitted by the benchmark builder: a labelled pair with no
// probabilities attached yet.
struct PairLabel {
    std::string example_id;
    std::size_t claim_index = 0;
    std::string passage_id;
    Relation label = Relation::neutral;

    bool operator==(const PairLabel&) const = default;
};

struct DecisionOutcome {
    std::string example_id;
    LabelDist pi{};
    Label predicted_label = Label::insufficient;
    double uncertainty_u = 0.0;
    double selective_score_s = 0.0;
    Decision decision = Decision::abstain;

    bool operator==(const DecisionOutcome&) const = default;
};

// Validation helpers; each throws surerag::Error(invariant) naming the record.
void validate(const Passage& p);
void validate(const ExampleRecord& r);
void validate(const PairScore& s);
void validate(const DecisionOutcome& d);

}  // namespace surerag
