#include "surerag/types.hpp"

#include <cmath>
#include <set>

#include "surerag/error.hpp"

namespace surerag {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table,
             std::string_view what) {
    for (const auto& [value, name] : table) {
        if (name == s) return value;
    }
    fail(ErrorCode::parse, "unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<Label, std::string_view>, 3> label_names{{
    {Label::supported, "Supported"},
    {Label::refuted, "Refuted"},
    {Label::insufficient, "Insufficient"},
}};

constexpr std::array<std::pair<Condition, std::string_view>, 5> condition_names{{
    {Condition::full, "full"},
    {Condition::partial, "partial"},
    {Condition::hard_insufficient, "hard_insufficient"},
    {Condition::irrelevant, "irrelevant"},
    {Condition::refuted, "refuted"},
}};

constexpr std::array<std::pair<Split, std::string_view>, 3> split_names{{
    {Split::train, "train"},
    {Split::dev, "dev"},
    {Split::test, "test"},
}};

constexpr std::array<std::pair<Origin, std::string_view>, 3> origin_names{{
    {Origin::gold_support, "gold_support"},
    {Origin::distractor, "distractor"},
    {Origin::overlap_substitute, "overlap_substitute"},
}};

constexpr std::array<std::pair<Relation, std::string_view>, 3> relation_names{{
    {Relation::support, "Support"},
    {Relation::refute, "Refute"},
    {Relation::neutral, "Neutral"},
}};

constexpr std::array<std::pair<Decision, std::string_view>, 2> decision_names{{
    {Decision::answer, "Answer"},
    {Decision::abstain, "Abstain"},
}};

template <typename E, std::size_t N>
std::string_view name_of(E v, const std::array<std::pair<E, std::string_view>, N>& table) {
    for (const auto& [value, name] : table) {
        if (value == v) return name;
    }
    return "?";
}

bool simplex_ok(double a, double b, double c, double tol) {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) return false;
    if (a < -tol || b < -tol || c < -tol) return false;
    if (a > 1.0 + tol || b > 1.0 + tol || c > 1.0 + tol) return false;
    return std::abs(a + b + c - 1.0) <= tol;
}

}  // namespace

std::string_view to_string(Label v) { return name_of(v, label_names); }
std::string_view to_string(Condition v) { return name_of(v, condition_names); }
std::string_view to_string(Split v) { return name_of(v, split_names); }
std::string_view to_string(Origin v) { return name_of(v, origin_names); }
std::string_view to_string(Relation v) { return name_of(v, relation_names); }
std::string_view to_string(Decision v) { return name_of(v, decision_names); }

Label parse_label(std::string_view s) { return parse_enum(s, label_names, "label"); }
Condition parse_condition(std::string_view s) { return parse_enum(s, condition_names, "condition"); }
Split parse_split(std::string_view s) { return parse_enum(s, split_names, "split"); }
Origin parse_origin(std::string_view s) { return parse_enum(s, origin_names, "origin"); }
Relation parse_relation(std::string_view s) { return parse_enum(s, relation_names, "pair label"); }
Decision parse_decision(std::string_view s) { return parse_enum(s, decision_names, "decision"); }

Label expected_label(Condition c) {
    switch (c) {
    case Condition::full: return Label::supported;
    case Condition::refuted: return Label::refuted;
    case Condition::partial:
    case Condition::hard_insufficient:
    case Condition::irrelevant: return Label::insufficient;
    }
    return Label::insufficient;
}

Label argmax_label(const LabelDist& pi) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < label_count; ++i) {
        if (pi[i] > pi[best]) best = i;
    }
    return static_cast<Label>(best);
}

std::string Passage::text() const {
    std::string out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (i) out += ' ';
        out += sentences[i];
    }
    return out;
}

void validate(const Passage& p) {
    if (p.passage_id.empty()) fail(ErrorCode::invariant, "passage with empty passage_id");
    if (p.sentences.empty())
        fail(ErrorCode::invariant, "passage '" + p.passage_id + "': sentences must be non-empty");
    if (p.retrieval_score && !std::isfinite(*p.retrieval_score))
        fail(ErrorCode::invariant, "passage '" + p.passage_id + "': retrieval_score must be finite");
}

void validate(const ExampleRecord& r) {
    auto bad = [&](const std::string& why) {
        fail(ErrorCode::invariant, "example '" + r.example_id + "': " + why);
    };
    if (r.example_id.empty()) fail(ErrorCode::invariant, "example with empty example_id");
    if (r.group_id.empty()) bad("group_id must be non-empty");
    if (r.claims.size() != 1) bad("claims must hold exactly one claim");
    if (r.passages.empty()) bad("passages must be non-empty");
    if (r.label != expected_label(r.condition))
        bad("condition " + std::string(to_string(r.condition)) + " requires label " +
            std::string(to_string(expected_label(r.condition))) + ", got " +
            std::string(to_string(r.label)));
    std::set<std::string_view> ids;
    for (const auto& p : r.passages) {
        validate(p);
        if (!ids.insert(p.passage_id).second) bad("duplicate passage_id '" + p.passage_id + "'");
    }
}

void validate(const PairScore& s) {
    if (!simplex_ok(s.p_support, s.p_refute, s.p_neutral, 1e-6))
        fail(ErrorCode::invariant, "pair score (" + s.example_id + ", " +
                                       std::to_string(s.claim_index) + ", " + s.passage_id +
                                       "): probabilities must lie on the simplex");
}

void validate(const DecisionOutcome& d) {
    if (!simplex_ok(d.pi[0], d.pi[1], d.pi[2], 1e-6))
        fail(ErrorCode::invariant, "prediction '" + d.example_id + "': pi must lie on the simplex");
    if (d.predicted_label != argmax_label(d.pi))
        fail(ErrorCode::invariant, "prediction '" + d.example_id + "': predicted_label is not argmax of pi");
    if (!(d.uncertainty_u >= 0.0) || !std::isfinite(d.selective_score_s))
        fail(ErrorCode::invariant, "prediction '" + d.example_id + "': invalid uncertainty or score");
    if (d.decision == Decision::answer && d.predicted_label != Label::supported)
        fail(ErrorCode::invariant, "prediction '" + d.example_id + "': Answer requires Supported");
}

}  // namespace surerag
