#include "surerag/corpus.hpp"

#include <fstream>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "surerag/error.hpp"

namespace surerag {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) fail(ErrorCode::io, "write failed for '" + path.string() + "'");
}

// Calls parse(json, line_no) for each non-blank line; wraps JSON and field
// errors so they name the line.
template <typename T, typename Parse>
std::vector<T> read_lines(const fs::path& path, Parse parse) {
    auto in = open_in(path);
    std::vector<T> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            out.push_back(parse(j));
        } catch (const json::exception& e) {
            fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            if (e.code() == ErrorCode::parse)
                fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            throw;
        }
    }
    return out;
}

template <typename T, typename Dump>
void write_lines(const std::vector<T>& items, const fs::path& path, Dump dump) {
    auto out = open_out(path);
    for (const auto& item : items) out << dump(item).dump() << '\n';
    finish(out, path);
}

json passage_to_json(const Passage& p) {
    json j;
    j["passage_id"] = p.passage_id;
    j["title"] = p.title;
    j["sentences"] = p.sentences;
    if (p.retrieval_score) j["retrieval_score"] = *p.retrieval_score;
    j["origin"] = to_string(p.origin);
    return j;
}

Passage passage_from_json(const json& j) {
    Passage p;
    p.passage_id = j.at("passage_id").get<std::string>();
    p.title = j.value("title", std::string{});
    p.sentences = j.at("sentences").get<std::vector<std::string>>();
    if (auto it = j.find("retrieval_score"); it != j.end() && !it->is_null())
        p.retrieval_score = it->get<double>();
    p.origin = parse_origin(j.value("origin", std::string{"distractor"}));
    return p;
}

json example_to_json(const ExampleRecord& r) {
    json j;
    j["example_id"] = r.example_id;
    j["group_id"] = r.group_id;
    j["split"] = to_string(r.split);
    j["condition"] = to_string(r.condition);
    j["question"] = r.question;
    j["answer"] = r.answer;
    j["claims"] = r.claims;
    json ps = json::array();
    for (const auto& p : r.passages) ps.push_back(passage_to_json(p));
    j["passages"] = std::move(ps);
    j["label"] = to_string(r.label);
    return j;
}

ExampleRecord example_from_json(const json& j) {
    ExampleRecord r;
    r.example_id = j.at("example_id").get<std::string>();
    r.group_id = j.at("group_id").get<std::string>();
    r.split = parse_split(j.at("split").get<std::string>());
    r.condition = parse_condition(j.at("condition").get<std::string>());
    r.question = j.at("question").get<std::string>();
    r.answer = j.at("answer").get<std::string>();
    if (auto it = j.find("claims"); it != j.end() && !it->is_null())
        r.claims = it->get<std::vector<std::string>>();
    if (r.claims.empty()) r.claims = {r.answer};
    for (const auto& p : j.at("passages")) r.passages.push_back(passage_from_json(p));
    r.label = parse_label(j.at("label").get<std::string>());
    return r;
}

json score_to_json(const PairScore& s) {
    json j;
    j["example_id"] = s.example_id;
    j["claim_index"] = s.claim_index;
    j["passage_id"] = s.passage_id;
    j["p_support"] = s.p_support;
    j["p_refute"] = s.p_refute;
    j["p_neutral"] = s.p_neutral;
    if (s.pair_label) j["pair_label"] = to_string(*s.pair_label);
    return j;
}

PairScore score_from_json(const json& j) {
    PairScore s;
    s.example_id = j.at("example_id").get<std::string>();
    s.claim_index = j.at("claim_index").get<std::size_t>();
    s.passage_id = j.at("passage_id").get<std::string>();
    s.p_support = j.at("p_support").get<double>();
    s.p_refute = j.at("p_refute").get<double>();
    s.p_neutral = j.at("p_neutral").get<double>();
    if (auto it = j.find("pair_label"); it != j.end() && !it->is_null())
        s.pair_label = parse_relation(it->get<std::string>());
    return s;
}

json prediction_to_json(const DecisionOutcome& d) {
    json j;
    j["example_id"] = d.example_id;
    j["pi_supported"] = d.pi[0];
    j["pi_refuted"] = d.pi[1];
    j["pi_insufficient"] = d.pi[2];
    j["uncertainty_u"] = d.uncertainty_u;
    j["selective_score"] = d.selective_score_s;
    j["predicted_label"] = to_string(d.predicted_label);
    j["decision"] = to_string(d.decision);
    return j;
}

DecisionOutcome prediction_from_json(const json& j) {
    DecisionOutcome d;
    d.example_id = j.at("example_id").get<std::string>();
    d.pi = {j.at("pi_supported").get<double>(), j.at("pi_refuted").get<double>(),
            j.at("pi_insufficient").get<double>()};
    d.uncertainty_u = j.at("uncertainty_u").get<double>();
    d.selective_score_s = j.at("selective_score").get<double>();
    d.predicted_label = parse_label(j.at("predicted_label").get<std::string>());
    d.decision = parse_decision(j.at("decision").get<std::string>());
    return d;
}

}  // namespace

std::vector<ExampleRecord> read_examples(const fs::path& path) {
    auto records = read_lines<ExampleRecord>(path, [](const json& j) {
        auto r = example_from_json(j);
        validate(r);
        return r;
    });
    std::set<std::string_view> ids;
    for (const auto& r : records) {
        if (!ids.insert(r.example_id).second)
            fail(ErrorCode::invariant, "example '" + r.example_id + "': duplicate example_id");
    }
    check_group_disjoint(records);
    return records;
}

void write_examples(const std::vector<ExampleRecord>& records, const fs::path& path) {
    write_lines(records, path, example_to_json);
}

std::vector<PairScore> read_pair_scores(const fs::path& path) {
    return read_lines<PairScore>(path, [](const json& j) {
        auto s = score_from_json(j);
        validate(s);
        return s;
    });
}

void write_pair_scores(const std::vector<PairScore>& scores, const fs::path& path) {
    write_lines(scores, path, score_to_json);
}

std::vector<PairLabel> read_pair_labels(const fs::path& path) {
    return read_lines<PairLabel>(path, [](const json& j) {
        PairLabel l;
        l.example_id = j.at("example_id").get<std::string>();
        l.claim_index = j.at("claim_index").get<std::size_t>();
        l.passage_id = j.at("passage_id").get<std::string>();
        l.label = parse_relation(j.at("pair_label").get<std::string>());
        return l;
    });
}

void write_pair_labels(const std::vector<PairLabel>& labels, const fs::path& path) {
    write_lines(labels, path, [](const PairLabel& l) {
        json j;
        j["example_id"] = l.example_id;
        j["claim_index"] = l.claim_index;
        j["passage_id"] = l.passage_id;
        j["pair_label"] = to_string(l.label);
        return j;
    });
}

std::vector<DecisionOutcome> read_predictions(const fs::path& path) {
    return read_lines<DecisionOutcome>(path, [](const json& j) {
        auto d = prediction_from_json(j);
        validate(d);
        return d;
    });
}

void write_predictions(const std::vector<DecisionOutcome>& preds, const fs::path& path) {
    write_lines(preds, path, prediction_to_json);
}

ScoreMatrixSet join_scores(const std::vector<ExampleRecord>& examples,
                           const std::vector<PairScore>& scores) {
    // example_id -> (position, passage_id -> column)
    struct Slot {
        std::size_t row;
        std::unordered_map<std::string, std::size_t> columns;
    };
    std::unordered_map<std::string, Slot> slots;
    ScoreMatrixSet out(examples.size());
    std::vector<std::vector<bool>> filled(examples.size());
    for (std::size_t e = 0; e < examples.size(); ++e) {
        const auto& ex = examples[e];
        Slot slot{e, {}};
        for (std::size_t i = 0; i < ex.passages.size(); ++i) slot.columns.emplace(ex.passages[i].passage_id, i);
        slots.emplace(ex.example_id, std::move(slot));
        out[e].claims = ex.claims.size();
        out[e].passages = ex.passages.size();
        out[e].cells.assign(out[e].claims * out[e].passages, RelationDist{});
        filled[e].assign(out[e].cells.size(), false);
    }

    for (const auto& s : scores) {
        auto it = slots.find(s.example_id);
        if (it == slots.end())
            fail(ErrorCode::invariant, "orphan pair score: unknown example_id '" + s.example_id + "'");
        auto col = it->second.columns.find(s.passage_id);
        if (col == it->second.columns.end())
            fail(ErrorCode::invariant, "orphan pair score: example '" + s.example_id +
                                           "' has no passage '" + s.passage_id + "'");
        const std::size_t e = it->second.row;
        if (s.claim_index >= out[e].claims)
            fail(ErrorCode::invariant, "orphan pair score: example '" + s.example_id +
                                           "' has no claim " + std::to_string(s.claim_index));
        validate(s);
        const std::size_t cell = s.claim_index * out[e].passages + col->second;
        if (filled[e][cell])
            fail(ErrorCode::invariant, "duplicate pair score (" + s.example_id + ", " +
                                           std::to_string(s.claim_index) + ", " + s.passage_id + ")");
        filled[e][cell] = true;
        out[e].cells[cell] = s.dist();
    }

    for (std::size_t e = 0; e < examples.size(); ++e) {
        for (std::size_t c = 0; c < filled[e].size(); ++c) {
            if (!filled[e][c]) {
                const auto& ex = examples[e];
                fail(ErrorCode::missing_pair,
                     "missing pair score (" + ex.example_id + ", " + std::to_string(c / out[e].passages) +
                         ", " + ex.passages[c % out[e].passages].passage_id + ")");
            }
        }
    }
    return out;
}

void check_group_disjoint(const std::vector<ExampleRecord>& examples) {
    std::unordered_map<std::string, Split> seen;
    for (const auto& r : examples) {
        auto [it, inserted] = seen.emplace(r.group_id, r.split);
        if (!inserted && it->second != r.split)
            fail(ErrorCode::invariant, "example '" + r.example_id + "': group '" + r.group_id +
                                           "' appears in splits " + std::string(to_string(it->second)) +
                                           " and " + std::string(to_string(r.split)));
    }
}

}  // namespace surerag
