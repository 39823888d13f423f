#include "surerag/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>

#include <json.hpp>

#include "surerag/error.hpp"
#include "surerag/text.hpp"

namespace surerag::features {

std::string_view to_string(FeatureMode m) {
    switch (m) {
    case FeatureMode::with_retrieval: return "with_retrieval";
    case FeatureMode::no_retrieval: return "no_retrieval";
    case FeatureMode::bm25_retrieval: return "bm25_retrieval";
    }
    return "with_retrieval";
}

FeatureMode parse_feature_mode(std::string_view s) {
    for (auto m : {FeatureMode::with_retrieval, FeatureMode::no_retrieval, FeatureMode::bm25_retrieval})
        if (to_string(m) == s) return m;
    fail(ErrorCode::parse, "unknown feature mode '" + std::string(s) + "'");
}

std::string_view to_string(Pooling p) {
    switch (p) {
    case Pooling::max: return "max";
    case Pooling::mean: return "mean";
    case Pooling::top_k: return "top_k";
    }
    return "max";
}

const std::vector<std::string>& all_feature_names() {
    static const std::vector<std::string> names = {
        "cov_supported", "cov_refuted", "cov_insufficient", "m_sup",     "m_ref",
        "mean_neutral",  "entropy_mean", "disagreement_d",  "conflict_x", "retrieval_u"};
    return names;
}

std::vector<std::string> feature_names(FeatureMode mode) {
    auto names = all_feature_names();
    if (mode == FeatureMode::no_retrieval) names.pop_back();
    return names;
}

std::size_t feature_count(FeatureMode mode) { return mode == FeatureMode::no_retrieval ? 9 : 10; }

std::vector<double> to_values(const FeatureVector& f, FeatureMode mode) {
    std::vector<double> v = {f.cov_supported, f.cov_refuted, f.cov_insufficient, f.m_sup,          f.m_ref,
                             f.mean_neutral,  f.entropy_mean, f.disagreement_d,  f.conflict_x};
    if (mode != FeatureMode::no_retrieval) {
        if (!f.retrieval_u)
            fail(ErrorCode::invalid_argument, "feature mode " + std::string(to_string(mode)) +
                                                  " needs a retrieval_u value");
        v.push_back(*f.retrieval_u);
    }
    return v;
}

Label claim_verdict(double v_sup, double v_ref) {
    if (v_sup >= v_ref && v_sup >= verdict_threshold) return Label::supported;
    if (v_ref > v_sup && v_ref >= verdict_threshold) return Label::refuted;
    return Label::insufficient;
}

namespace {

void check_cell(const RelationDist& d) {
    for (double p : d)
        if (!std::isfinite(p) || p < -1e-6 || p > 1.0 + 1e-6)
            fail(ErrorCode::invariant, "aggregate: cell probabilities must lie in [0, 1]");
    if (std::abs(d[0] + d[1] + d[2] - 1.0) > 1e-6) fail(ErrorCode::invariant, "aggregate: cell is not on the simplex");
}

double entropy(const RelationDist& d) {
    double h = 0.0;
    for (double p : d)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

}  // namespace

FeatureVector aggregate(const ScoreMatrix& matrix, std::optional<double> retrieval_u) {
    if (matrix.passages == 0) fail(ErrorCode::invalid_argument, "aggregate: evidence set is empty (k = 0)");
    if (matrix.claims == 0) fail(ErrorCode::invalid_argument, "aggregate: answer has no claims");
    if (matrix.cells.size() != matrix.claims * matrix.passages)
        fail(ErrorCode::invalid_argument, "aggregate: matrix shape does not match its cells");
    for (const auto& c : matrix.cells) check_cell(c);

    FeatureVector f;
    const auto m = static_cast<double>(matrix.claims);
    const auto k = static_cast<double>(matrix.passages);
    double neutral_sum = 0.0, entropy_sum = 0.0;
    for (std::size_t j = 0; j < matrix.claims; ++j) {
        double v_sup = 0.0, v_ref = 0.0, sup_sum = 0.0;
        for (std::size_t i = 0; i < matrix.passages; ++i) {
            const auto& d = matrix.at(j, i);
            v_sup = std::max(v_sup, d[0]);
            v_ref = std::max(v_ref, d[1]);
            sup_sum += d[0];
            neutral_sum += d[2];
            entropy_sum += entropy(d);
        }
        const double sup_mean = sup_sum / k;
        double var = 0.0;
        for (std::size_t i = 0; i < matrix.passages; ++i) {
            const double dev = matrix.at(j, i)[0] - sup_mean;
            var += dev * dev;
        }
        f.disagreement_d += std::sqrt(var / k);
        f.conflict_x += std::min(v_sup, v_ref);
        f.m_sup = std::max(f.m_sup, v_sup);
        f.m_ref = std::max(f.m_ref, v_ref);
        switch (claim_verdict(v_sup, v_ref)) {
        case Label::supported: f.cov_supported += 1.0; break;
        case Label::refuted: f.cov_refuted += 1.0; break;
        case Label::insufficient: f.cov_insufficient += 1.0; break;
        }
    }
    f.cov_supported /= m;
    f.cov_refuted /= m;
    f.cov_insufficient /= m;
    f.disagreement_d /= m;
    f.conflict_x /= m;
    const double cells = m * k;
    f.mean_neutral = neutral_sum / cells;
    f.entropy_mean = entropy_sum / cells;
    f.retrieval_u = retrieval_u;
    return f;
}

double retrieval_uncertainty_from_scores(std::span<const double> scores) {
    if (scores.empty()) return 0.5;
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) return 0.5;
    double mean = 0.0;
    for (double s : scores) mean += (s - *lo) / range;
    mean /= static_cast<double>(scores.size());
    return 1.0 - mean;
}

std::optional<double> retrieval_uncertainty(const ExampleRecord& ex, FeatureMode mode) {
    switch (mode) {
    case FeatureMode::no_retrieval: return std::nullopt;
    case FeatureMode::with_retrieval: {
        std::vector<double> scores;
        for (const auto& p : ex.passages)
            if (p.retrieval_score) scores.push_back(*p.retrieval_score);
        return retrieval_uncertainty_from_scores(scores);
    }
    case FeatureMode::bm25_retrieval: {
        const auto query_all = text::content_tokens(ex.question + " " + ex.answer);
        std::vector<std::vector<std::string>> docs;
        docs.reserve(ex.passages.size());
        for (const auto& p : ex.passages) docs.push_back(text::content_tokens(p.text()));
        const auto stats = Bm25Stats::from_documents(docs);
        const Bm25Params params;
        double best = 0.0;
        for (const auto& d : docs) best = std::max(best, bm25_score(query_all, d, stats, params));
        // Each term contributes strictly less than idf * (k1 + 1).
        double bound = 0.0;
        for (const auto& t : std::set<std::string>(query_all.begin(), query_all.end()))
            bound += stats.idf(t) * (params.k1 + 1.0);
        const double normalized = bound > 0.0 ? best / bound : 0.0;
        return 1.0 - normalized;
    }
    }
    return std::nullopt;
}

FeatureVector aggregate(const ExampleRecord& ex, const ScoreMatrix& matrix, FeatureMode mode) {
    return aggregate(matrix, retrieval_uncertainty(ex, mode));
}

LabelDist pool_predict(const ScoreMatrix& matrix, Pooling pooling, std::size_t k_top) {
    if (matrix.cells.empty()) fail(ErrorCode::invalid_argument, "pool_predict: empty matrix");
    if (pooling == Pooling::top_k && k_top == 0) fail(ErrorCode::invalid_argument, "pool_predict: k_top must be >= 1");
    LabelDist out{};
    const auto n = static_cast<double>(matrix.cells.size());
    for (std::size_t r = 0; r < 3; ++r) {
        std::vector<double> column;
        column.reserve(matrix.cells.size());
        for (const auto& c : matrix.cells) column.push_back(c[r]);
        switch (pooling) {
        case Pooling::max: out[r] = *std::max_element(column.begin(), column.end()); break;
        case Pooling::mean: {
            double s = 0.0;
            for (double v : column) s += v;
            out[r] = s / n;
            break;
        }
        case Pooling::top_k: {
            const std::size_t take = std::min(k_top, column.size());
            std::partial_sort(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(take), column.end(),
                              std::greater<>());
            double s = 0.0;
            for (std::size_t i = 0; i < take; ++i) s += column[i];
            out[r] = s / static_cast<double>(take);
            break;
        }
        }
    }
    const double z = out[0] + out[1] + out[2];
    if (z > 0.0)
        for (auto& v : out) v /= z;
    else
        out = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    return out;
}

Bm25Stats Bm25Stats::from_documents(const std::vector<std::vector<std::string>>& docs) {
    Bm25Stats s;
    s.doc_count = docs.size();
    double total = 0.0;
    for (const auto& d : docs) {
        total += static_cast<double>(d.size());
        for (const auto& t : std::set<std::string>(d.begin(), d.end())) ++s.doc_freq[t];
    }
    s.avg_doc_len = docs.empty() ? 0.0 : total / static_cast<double>(docs.size());
    return s;
}

double Bm25Stats::idf(const std::string& term) const {
    const auto it = doc_freq.find(term);
    const double df = it == doc_freq.end() ? 0.0 : static_cast<double>(it->second);
    const double n = static_cast<double>(doc_count);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25_score(const std::vector<std::string>& query_tokens, const std::vector<std::string>& passage_tokens,
                  const Bm25Stats& stats, const Bm25Params& params) {
    if (stats.doc_count == 0) fail(ErrorCode::invalid_argument, "bm25_score: corpus has no documents");
    std::unordered_map<std::string, std::size_t> tf;
    for (const auto& t : passage_tokens) ++tf[t];
    const double len = static_cast<double>(passage_tokens.size());
    const double norm = stats.avg_doc_len > 0.0 ? len / stats.avg_doc_len : 0.0;
    double score = 0.0;
    for (const auto& q : std::set<std::string>(query_tokens.begin(), query_tokens.end())) {
        const auto it = tf.find(q);
        if (it == tf.end()) continue;
        const double f = static_cast<double>(it->second);
        score += stats.idf(q) * f * (params.k1 + 1.0) / (f + params.k1 * (1.0 - params.b + params.b * norm));
    }
    return score;
}

void write_features(const std::vector<FeatureRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
    for (const auto& r : rows) {
        const auto& f = r.features;
        nlohmann::ordered_json j;
        j["example_id"] = r.example_id;
        j["cov_supported"] = f.cov_supported;
        j["cov_refuted"] = f.cov_refuted;
        j["cov_insufficient"] = f.cov_insufficient;
        j["m_sup"] = f.m_sup;
        j["m_ref"] = f.m_ref;
        j["mean_neutral"] = f.mean_neutral;
        j["entropy_mean"] = f.entropy_mean;
        j["disagreement_d"] = f.disagreement_d;
        j["conflict_x"] = f.conflict_x;
        if (f.retrieval_u)
            j["retrieval_u"] = *f.retrieval_u;
        else
            j["retrieval_u"] = nullptr;
        out << j.dump() << '\n';
    }
    out.flush();
    if (!out) fail(ErrorCode::io, "write failed for '" + path.string() + "'");
}

std::vector<FeatureRow> read_features(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open '" + path.string() + "'");
    std::vector<FeatureRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            FeatureRow r;
            r.example_id = j.at("example_id").get<std::string>();
            auto& f = r.features;
            f.cov_supported = j.at("cov_supported").get<double>();
            f.cov_refuted = j.at("cov_refuted").get<double>();
            f.cov_insufficient = j.at("cov_insufficient").get<double>();
            f.m_sup = j.at("m_sup").get<double>();
            f.m_ref = j.at("m_ref").get<double>();
            f.mean_neutral = j.at("mean_neutral").get<double>();
            f.entropy_mean = j.at("entropy_mean").get<double>();
            f.disagreement_d = j.at("disagreement_d").get<double>();
            f.conflict_x = j.at("conflict_x").get<double>();
            if (j.contains("retrieval_u") && !j.at("retrieval_u").is_null())
                f.retrieval_u = j.at("retrieval_u").get<double>();
            rows.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

}  // namespace surerag::features
