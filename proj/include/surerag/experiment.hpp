#pragma once

// The decision pipeline over one set of examples and pair scores: feature
// extraction, training on train, temperature and (beta, tau) on dev, and the
// test-split evaluation against the pooling baselines.

#include <string>
#include <utility>
#include <vector>

#include "surerag/corpus.hpp"
#include "surerag/decision.hpp"
#include "surerag/features.hpp"
#include "surerag/metrics.hpp"

namespace surerag::experiment {

struct ExperimentOptions {
    features::FeatureMode feature_mode = features::FeatureMode::with_retrieval;
    double l2_lambda = 1e-3;
    std::size_t max_iters = 500;
    std::vector<double> beta_grid = {0.0, 0.25, 0.5, 1.0, 2.0};
    std::vector<double> tau_grid;  // empty: quantiles of the dev scores
    std::size_t pooling_k = 3;
    int ece_bins = metrics::default_ece_bins;
    std::vector<double> coverage_points = {0.30, 0.50, 0.70};
    std::vector<double> risk_points = {0.05, 0.10, 0.20};
    decision::UWeights u_weights = decision::uniform_u_weights;
};

void validate(const ExperimentOptions& o);

std::vector<features::FeatureRow> compute_features(const std::vector<ExampleRecord>& examples,
                                                   const ScoreMatrixSet& matrices, features::FeatureMode mode);

// Rows of one split in example order. Labels are copied for train and dev
// only; a test partition never carries them.
decision::Partition make_partition(const std::vector<ExampleRecord>& examples,
                                   const std::vector<features::FeatureRow>& rows, features::FeatureMode mode,
                                   Split split);

// Test labels and conditions replaced by a fixed placeholder and passage
// origins reset, so stages before evaluation cannot depend on them.
std::vector<ExampleRecord> redact_test_labels(std::vector<ExampleRecord> examples);

decision::AggregationClassifier train_stage(const std::vector<ExampleRecord>& examples,
                                            const std::vector<features::FeatureRow>& rows,
                                            const ExperimentOptions& options);

double calibrate_stage(const decision::AggregationClassifier& clf, const std::vector<ExampleRecord>& examples,
                       const std::vector<features::FeatureRow>& rows);

// Tunes the raw variant at temperature 1 and the calibrated variant at
// `temperature` on dev.
decision::SureModel tune_stage(const decision::AggregationClassifier& clf, double temperature,
                               const std::vector<ExampleRecord>& examples,
                               const std::vector<features::FeatureRow>& rows, const ExperimentOptions& options);

std::vector<DecisionOutcome> predict(const decision::SureModel& model, const std::vector<ExampleRecord>& examples,
                                     const std::vector<features::FeatureRow>& rows, Split split, bool calibrated);

struct SelectiveReport {
    double operating_coverage = 0.0;  // at the tuned (beta, tau)
    double operating_risk = 0.0;
    double aurc = 0.0;        // ranking induced by the decision rule
    double aurc_score = 0.0;  // ranking by s alone
    std::vector<double> risk_exact;        // test curve read at each coverage point
    std::vector<double> risk_dev_threshold;  // dev threshold applied to test
    std::vector<double> coverage_dev_threshold;
    std::vector<double> coverage_at_risk;
};

struct VariantReport {
    std::string name;
    metrics::F1Report f1;            // argmax labels
    metrics::F1Report selective_f1;  // abstained Supported counted as Insufficient
    metrics::SafetyF1 safety;
    SelectiveReport selective;
    double ece = 0.0;
    double temperature = 1.0;
    double beta = 0.0;
    double tau = 0.0;
};

struct PoolingReport {
    features::Pooling pooling = features::Pooling::max;
    metrics::F1Report f1;
    metrics::SafetyF1 safety;
    std::vector<double> risk_exact;
    double aurc = 0.0;
    double ece = 0.0;
    // Share of partial-condition test examples predicted Supported.
    double partial_supported_rate = 0.0;
};

struct EvaluationReport {
    features::FeatureMode feature_mode = features::FeatureMode::with_retrieval;
    std::size_t n_test = 0;
    std::vector<double> coverage_points;
    std::vector<double> risk_points;
    VariantReport raw;
    VariantReport calibrated;
    std::vector<PoolingReport> pooling;  // max, mean, top_k
};

// The only entry point that reads test labels.
EvaluationReport evaluate(const decision::SureModel& model, const std::vector<ExampleRecord>& examples,
                          const std::vector<features::FeatureRow>& rows, const ScoreMatrixSet& matrices,
                          const ExperimentOptions& options);

// Every scalar in the report under a stable dotted name.
std::vector<std::pair<std::string, double>> flatten(const EvaluationReport& report);

// Main-results, selective-answering and calibration tables.
std::string format_report(const EvaluationReport& report);

struct ExperimentResult {
    decision::SureModel model;
    std::vector<features::FeatureRow> rows;
    std::vector<DecisionOutcome> predictions;  // calibrated variant, test split
    EvaluationReport report;
};

ExperimentResult run_experiment(const std::vector<ExampleRecord>& examples, const ScoreMatrixSet& matrices,
                                const ExperimentOptions& options);

}  // namespace surerag::experiment
