#pragma once

// Artifact-aware checks around a trained model: shortcut baselines and the
// artifact ratio, counterfactual evidence swaps within groups, and the
// no-oracle comparison across retrieval feature modes.

#include <string>
#include <vector>

#include "surerag/corpus.hpp"
#include "surerag/experiment.hpp"
#include "surerag/features.hpp"
#include "surerag/metrics.hpp"
#include "surerag/shortcuts.hpp"

namespace surerag::diagnostics {

inline constexpr double severe_ratio = 0.85;
inline constexpr double moderate_ratio = 0.5;

struct ArtifactRatio {
    double ratio = 0.0;
    std::string severity;  // "severe", "moderate" or "low"
};

// best_shortcut_macro / model_macro. Throws invalid_argument when
// model_macro is not positive.
ArtifactRatio artifact_ratio(double best_shortcut_macro, double model_macro);

struct SwapRow {
    Condition condition = Condition::partial;  // compared against full
    std::size_t pairs = 0;
    double mean_delta = 0.0;
    double success_rate = 0.0;
};

struct SwapResult {
    std::vector<SwapRow> rows;          // partial, hard_insufficient, irrelevant, refuted
    std::vector<std::string> skipped;   // groups without a full variant
};

// Delta = pi_Supported(full) - pi_Supported(variant) for every degraded
// variant of a group; success when Delta > 0. Every example must have a
// prediction; predictions for other examples are ignored.
SwapResult counterfactual_swap(const std::vector<DecisionOutcome>& predictions,
                               const std::vector<ExampleRecord>& examples);

struct NoOracleRow {
    features::FeatureMode mode = features::FeatureMode::with_retrieval;
    metrics::F1Report f1;
};

struct NoOracleResult {
    std::vector<NoOracleRow> modes;
    metrics::F1Report mean_pool;
};

// Runs the full decision pipeline once per mode on the same splits.
NoOracleResult no_oracle_compare(const std::vector<ExampleRecord>& examples, const ScoreMatrixSet& matrices,
                                 const experiment::ExperimentOptions& options,
                                 const std::vector<features::FeatureMode>& modes = {
                                     features::FeatureMode::with_retrieval, features::FeatureMode::no_retrieval,
                                     features::FeatureMode::bm25_retrieval});

// Row label used in reports, e.g. "drop retrieval score" for no_retrieval.
std::string mode_label(features::FeatureMode mode);

struct DiagnosticsReport {
    features::FeatureMode feature_mode = features::FeatureMode::with_retrieval;
    double model_macro = 0.0;
    std::vector<shortcuts::ShortcutResult> shortcuts;
    shortcuts::ShortcutKind best_shortcut = shortcuts::ShortcutKind::majority;
    ArtifactRatio artifact;
    double prefix_not_rate = 0.0;
    SwapResult swap;
    NoOracleResult no_oracle;
};

// Shortcuts train on the train split and score test; the swap reads the
// given test predictions.
DiagnosticsReport diagnose(const std::vector<ExampleRecord>& examples, const ScoreMatrixSet& matrices,
                           const std::vector<DecisionOutcome>& predictions, double model_macro,
                           const experiment::ExperimentOptions& options);

std::string format_report(const DiagnosticsReport& report);
std::string to_json(const DiagnosticsReport& report);

}  // namespace surerag::diagnostics
