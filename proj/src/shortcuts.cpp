#include "surerag/shortcuts.hpp"

#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "surerag/decision.hpp"
#include "surerag/error.hpp"
#include "surerag/random.hpp"
#include "surerag/text.hpp"

namespace surerag::shortcuts {

std::string_view to_string(ShortcutKind k) {
    switch (k) {
    case ShortcutKind::majority: return "majority";
    case ShortcutKind::hypothesis_only: return "hypothesis_only";
    case ShortcutKind::evidence_only: return "evidence_only";
    case ShortcutKind::length_only: return "length_only";
    case ShortcutKind::overlap_only: return "overlap_only";
    case ShortcutKind::concat_tfidf: return "concat_tfidf";
    }
    return "majority";
}

ShortcutKind parse_shortcut(std::string_view s) {
    for (auto k : all_shortcuts)
        if (to_string(k) == s) return k;
    fail(ErrorCode::invalid_argument, "unknown shortcut baseline '" + std::string(s) + "'");
}

EvidenceView EvidenceView::of(const ExampleRecord& r) {
    EvidenceView v;
    for (const auto& p : r.passages) v.passages.push_back(p.text());
    return v;
}

LengthView LengthView::of(const ExampleRecord& r) {
    LengthView v;
    v.answer_tokens = static_cast<double>(text::tokenize(r.answer).size());
    for (const auto& p : r.passages) v.evidence_tokens += static_cast<double>(text::tokenize(p.text()).size());
    v.passage_count = static_cast<double>(r.passages.size());
    v.mean_passage_tokens = v.passage_count > 0 ? v.evidence_tokens / v.passage_count : 0.0;
    return v;
}

OverlapView OverlapView::of(const ExampleRecord& r) {
    OverlapView v{r.answer, {}};
    for (const auto& p : r.passages) v.evidence += p.text() + " ";
    return v;
}

ConcatView ConcatView::of(const ExampleRecord& r) {
    ConcatView v{r.question + " " + r.answer};
    for (const auto& p : r.passages) v.text += " " + p.text();
    return v;
}

namespace {

logistic::SparseRow to_sparse(const std::map<std::uint32_t, double>& counts) {
    logistic::SparseRow row;
    double norm = 0.0;
    for (const auto& [i, c] : counts) norm += c * c;
    norm = std::sqrt(norm);
    for (const auto& [i, c] : counts) {
        row.index.push_back(i);
        row.value.push_back(norm > 0.0 ? c / norm : 0.0);
    }
    return row;
}

std::uint32_t bucket(std::string_view s) { return static_cast<std::uint32_t>(fnv1a64(s) % hash_dim); }

}  // namespace

logistic::SparseRow char_trigram_features(std::string_view s) {
    const std::string padded = "#" + text::to_lower(s) + "#";
    std::map<std::uint32_t, double> counts;
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) counts[bucket(std::string_view(padded).substr(i, 3))] += 1.0;
    return to_sparse(counts);
}

std::vector<double> length_features(const LengthView& v) {
    return {v.answer_tokens, v.evidence_tokens, v.passage_count, v.mean_passage_tokens};
}

std::vector<double> overlap_features(const OverlapView& v) {
    const auto a = text::content_token_set(v.answer);
    const auto e = text::content_token_set(v.evidence);
    std::size_t present = 0;
    for (const auto& t : a) present += e.count(t);
    const double containment = a.empty() ? 0.0 : static_cast<double>(present) / static_cast<double>(a.size());
    return {text::jaccard(a, e), containment, static_cast<double>(present)};
}

void TfidfHasher::fit(const std::vector<std::string>& docs) {
    std::vector<double> df(hash_dim, 0.0);
    for (const auto& d : docs) {
        std::unordered_set<std::uint32_t> seen;
        for (const auto& t : text::tokenize(d)) seen.insert(bucket(t));
        for (auto b : seen) df[b] += 1.0;
    }
    const double n = static_cast<double>(docs.size());
    idf_.assign(hash_dim, 0.0);
    for (std::uint32_t b = 0; b < hash_dim; ++b) idf_[b] = std::log((1.0 + n) / (1.0 + df[b])) + 1.0;
}

logistic::SparseRow TfidfHasher::transform(const std::string& doc) const {
    if (idf_.empty()) fail(ErrorCode::invalid_argument, "tf-idf transform before fit");
    std::map<std::uint32_t, double> counts;
    for (const auto& t : text::tokenize(doc)) counts[bucket(t)] += 1.0;
    for (auto& [b, c] : counts) c *= idf_[b];
    return to_sparse(counts);
}

ShortcutResult run_shortcut(ShortcutKind kind, const std::vector<ExampleRecord>& train,
                            const std::vector<ExampleRecord>& test, const ShortcutOptions& options) {
    if (train.empty() || test.empty()) fail(ErrorCode::invalid_argument, "run_shortcut: empty split");
    std::set<std::string> train_groups;
    for (const auto& r : train) train_groups.insert(r.group_id);
    for (const auto& r : test)
        if (train_groups.count(r.group_id))
            fail(ErrorCode::invalid_argument, "run_shortcut: group '" + r.group_id + "' is in both splits");

    std::vector<Label> y_train, y_test;
    for (const auto& r : train) y_train.push_back(r.label);
    for (const auto& r : test) y_test.push_back(r.label);

    ShortcutResult result;
    result.kind = kind;

    if (kind == ShortcutKind::majority) {
        std::array<std::size_t, label_count> counts{};
        for (auto l : y_train) ++counts[index(l)];
        std::size_t best = 0;
        for (std::size_t c = 1; c < label_count; ++c)
            if (counts[c] > counts[best]) best = c;
        result.predictions.assign(test.size(), static_cast<Label>(best));
        result.f1 = metrics::macro_f1(y_test, result.predictions);
        return result;
    }

    std::size_t dim = hash_dim;
    std::vector<logistic::SparseRow> train_rows, test_rows;
    switch (kind) {
    case ShortcutKind::hypothesis_only:
        for (const auto& r : train) train_rows.push_back(char_trigram_features(AnswerView::of(r).answer));
        for (const auto& r : test) test_rows.push_back(char_trigram_features(AnswerView::of(r).answer));
        break;
    case ShortcutKind::evidence_only: {
        auto join = [](const EvidenceView& v) {
            std::string s;
            for (const auto& p : v.passages) s += p + " ";
            return s;
        };
        for (const auto& r : train) train_rows.push_back(char_trigram_features(join(EvidenceView::of(r))));
        for (const auto& r : test) test_rows.push_back(char_trigram_features(join(EvidenceView::of(r))));
        break;
    }
    case ShortcutKind::length_only:
    case ShortcutKind::overlap_only: {
        std::vector<std::vector<double>> tr, te;
        for (const auto& r : train)
            tr.push_back(kind == ShortcutKind::length_only ? length_features(LengthView::of(r))
                                                           : overlap_features(OverlapView::of(r)));
        for (const auto& r : test)
            te.push_back(kind == ShortcutKind::length_only ? length_features(LengthView::of(r))
                                                           : overlap_features(OverlapView::of(r)));
        dim = tr.front().size();
        const auto standardization = decision::Standardization::fit(tr, dim);
        auto dense = [&](const std::vector<double>& v) {
            logistic::SparseRow row;
            const auto z = standardization.apply(v);
            for (std::size_t i = 0; i < z.size(); ++i) {
                row.index.push_back(static_cast<std::uint32_t>(i));
                row.value.push_back(z[i]);
            }
            return row;
        };
        for (const auto& v : tr) train_rows.push_back(dense(v));
        for (const auto& v : te) test_rows.push_back(dense(v));
        break;
    }
    case ShortcutKind::concat_tfidf: {
        std::vector<std::string> docs;
        for (const auto& r : train) docs.push_back(ConcatView::of(r).text);
        TfidfHasher hasher;
        hasher.fit(docs);
        for (const auto& d : docs) train_rows.push_back(hasher.transform(d));
        for (const auto& r : test) test_rows.push_back(hasher.transform(ConcatView::of(r).text));
        break;
    }
    case ShortcutKind::majority: break;
    }

    logistic::DesignMatrix x(dim);
    for (auto& row : train_rows) x.add_sparse(std::move(row));
    logistic::TrainOptions opts;
    opts.l2_lambda = options.l2_lambda;
    opts.max_iters = options.max_iters;
    const auto model = logistic::fit(x, y_train, opts).model;
    for (const auto& row : test_rows) result.predictions.push_back(argmax_label(logistic::softmax(model.logits(row))));
    result.f1 = metrics::macro_f1(y_test, result.predictions);
    return result;
}

}  // namespace surerag::shortcuts
