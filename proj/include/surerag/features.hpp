#pragma once

// Answer-level aggregation of a pair-score matrix into interpretable feature
// blocks (coverage, relation strength, dispersion, retrieval), the pooling
// baselines over the same matrix, and BM25 scoring for the retrieval block.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "surerag/corpus.hpp"
#include "surerag/types.hpp"

namespace surerag::features {

enum class FeatureMode { with_retrieval, no_retrieval, bm25_retrieval };
std::string_view to_string(FeatureMode m);
FeatureMode parse_feature_mode(std::string_view s);

struct FeatureVector {
    // Fraction of claims whose verdict is Supported / Refuted / Insufficient.
    double cov_supported = 0.0;
    double cov_refuted = 0.0;
    double cov_insufficient = 0.0;
    double m_sup = 0.0;
    double m_ref = 0.0;
    double mean_neutral = 0.0;
    // Mean Shannon entropy of the cells, in nats.
    double entropy_mean = 0.0;
    // Population std of per-passage p_support, averaged over claims.
    double disagreement_d = 0.0;
    // min(max support, max refutation) per claim, averaged over claims.
    double conflict_x = 0.0;
    std::optional<double> retrieval_u;

    bool operator==(const FeatureVector&) const = default;
};

inline constexpr double verdict_threshold = 0.5;

// All ten field names in vector order.
const std::vector<std::string>& all_feature_names();
// Names used by a mode: the retrieval column is dropped for no_retrieval.
std::vector<std::string> feature_names(FeatureMode mode);
std::size_t feature_count(FeatureMode mode);
// Values in feature_names(mode) order. Throws when the mode needs a
// retrieval value the vector lacks.
std::vector<double> to_values(const FeatureVector& f, FeatureMode mode);

// Per-claim verdict from the maxima over passages.
Label claim_verdict(double v_sup, double v_ref);

// Throws invalid_argument for k = 0 and invariant for non-simplex cells.
FeatureVector aggregate(const ScoreMatrix& matrix, std::optional<double> retrieval_u);

// 1 - mean of min-max-normalized scores (0.5 each when all equal).
double retrieval_uncertainty_from_scores(std::span<const double> scores);

// The retrieval block for an example under a mode. with_retrieval reads the
// passages' retrieval_score fields; bm25_retrieval reads only texts, the
// question and the answer; no_retrieval reads nothing.
std::optional<double> retrieval_uncertainty(const ExampleRecord& ex, FeatureMode mode);

FeatureVector aggregate(const ExampleRecord& ex, const ScoreMatrix& matrix, FeatureMode mode);

// Feature file: one JSON object per line with example_id and the ten named
// fields; retrieval_u is null when the mode has no retrieval block.
struct FeatureRow {
    std::string example_id;
    FeatureVector features;

    bool operator==(const FeatureRow&) const = default;
};
void write_features(const std::vector<FeatureRow>& rows, const std::filesystem::path& path);
std::vector<FeatureRow> read_features(const std::filesystem::path& path);

enum class Pooling { max, mean, top_k };
std::string_view to_string(Pooling p);

// Label distribution of a pooling baseline (support->Supported,
// refute->Refuted, neutral->Insufficient).
LabelDist pool_predict(const ScoreMatrix& matrix, Pooling pooling, std::size_t k_top = 3);

struct Bm25Stats {
    std::size_t doc_count = 0;
    double avg_doc_len = 0.0;
    std::unordered_map<std::string, std::size_t> doc_freq;

    static Bm25Stats from_documents(const std::vector<std::vector<std::string>>& docs);
    double idf(const std::string& term) const;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

// Sum over distinct query terms of idf * tf(k1+1) / (tf + k1(1-b+b*len/avg)).
double bm25_score(const std::vector<std::string>& query_tokens, const std::vector<std::string>& passage_tokens,
                  const Bm25Stats& stats, const Bm25Params& params = {});

}  // namespace surerag::features
