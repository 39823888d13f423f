#pragma once

// Answer-level classifier over aggregated features, temperature
// calibration, the uncertainty penalty, the answer-or-abstain rule and
// dev-split tuning of (beta, tau).

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surerag/features.hpp"
#include "surerag/logistic.hpp"
#include "surerag/types.hpp"

namespace surerag::decision {

struct Standardization {
    std::vector<double> mean;
    std::vector<double> stddev;  // constant features get 1

    static Standardization fit(const std::vector<std::vector<double>>& rows, std::size_t dim);
    std::vector<double> apply(std::span<const double> raw) const;
};

struct AggregationClassifier {
    features::FeatureMode feature_mode = features::FeatureMode::with_retrieval;
    std::vector<std::string> feature_names;
    double l2_lambda = 0.0;
    Standardization standardization;
    logistic::Model model;

    std::size_t dim() const { return feature_names.size(); }
    std::array<double, label_count> logits(std::span<const double> raw_features) const;
};

// Rows of one split. Fitting entry points refuse the test split, so test
// labels can only be read at evaluation time.
struct Partition {
    Split split = Split::train;
    std::vector<std::string> example_ids;
    std::vector<std::vector<double>> features;
    std::vector<Label> labels;
};

AggregationClassifier train_classifier(const Partition& train, features::FeatureMode mode, double l2_lambda,
                                       std::size_t max_iters);

// Lower-level entry used by the Partition overload and by tests.
AggregationClassifier train_classifier(const std::vector<std::vector<double>>& rows, std::span<const Label> labels,
                                       features::FeatureMode mode, double l2_lambda, std::size_t max_iters);

// Softmax of logits / temperature.
LabelDist predict(const AggregationClassifier& clf, std::span<const double> raw_features, double temperature = 1.0);

struct TemperatureGrid {
    double lo = 0.05;
    double hi = 20.0;
    std::size_t points = 200;
};

// Mean NLL of softmax(logits / T) against the labels.
double temperature_nll(std::span<const std::array<double, label_count>> logits, std::span<const Label> labels,
                       double temperature);

// Log-spaced grid search followed by golden-section refinement between the
// grid neighbours of the best point.
double fit_temperature(std::span<const std::array<double, label_count>> logits, std::span<const Label> labels,
                       const TemperatureGrid& grid = {});

double fit_temperature(const AggregationClassifier& clf, const Partition& dev);

// Weights for (entropy, disagreement, conflict, coverage deficit, retrieval).
using UWeights = std::array<double, 5>;
inline constexpr UWeights uniform_u_weights = {0.2, 0.2, 0.2, 0.2, 0.2};

// w1 H(pi)/ln3 + w2 min(1, 2d) + w3 x + w4 (1 - cov_supported) + w5 retrieval_u.
// Without a retrieval value the fifth term is dropped and the rest
// renormalised.
double uncertainty_u(const LabelDist& pi, const features::FeatureVector& f, const UWeights& w = uniform_u_weights);

struct SelectiveConfig {
    double beta = 0.0;
    double tau = 0.0;
    double temperature = 1.0;
    UWeights u_weights = uniform_u_weights;
};

void validate(const SelectiveConfig& c);

// s = pi_Supported - beta u; Answer iff argmax is Supported and s >= tau.
DecisionOutcome decide(const std::string& example_id, const LabelDist& pi, double u, const SelectiveConfig& config);

struct ScoredExample {
    LabelDist pi{};
    double u = 0.0;
};

struct TuneResult {
    double beta = 0.0;
    double tau = 0.0;
    double dev_aurc = 0.0;
};

// The ranking induced by (beta, tau) orders answered examples by s and puts
// every abstention in one tied block at the bottom; its AURC on dev is
// minimised, ties going to the smaller beta and then the smaller tau. An
// empty tau_grid means 50 evenly spaced quantiles of the dev scores for each
// beta.
TuneResult tune_selective(std::span<const ScoredExample> dev, std::span<const Label> dev_labels,
                          const std::vector<double>& beta_grid, const std::vector<double>& tau_grid);

// AURC of the ranking induced by one (beta, tau).
double induced_aurc(std::span<const ScoredExample> dev, std::span<const Label> labels, double beta, double tau);

std::vector<double> score_quantiles(std::vector<double> scores, std::size_t count);

// Trained classifier plus its raw and calibrated selective settings.
struct SureModel {
    AggregationClassifier classifier;
    SelectiveConfig raw;         // temperature 1
    SelectiveConfig calibrated;  // fitted temperature, re-tuned beta and tau

    void save(const std::filesystem::path& path) const;
    static SureModel load(const std::filesystem::path& path);
};

}  // namespace surerag::decision
