#pragma once

// Three-way and binary classification scores, selective risk-coverage
// metrics, and binary expected calibration error.

#include <array>
#include <span>
#include <vector>

#include "surerag/types.hpp"

namespace surerag::metrics {

struct F1Report {
    double macro = 0.0;
    std::array<double, 3> per_class{};  // Supported, Refuted, Insufficient
};

// Precision or recall with a zero denominator counts as 0.
F1Report macro_f1(std::span<const Label> gold, std::span<const Label> pred);

struct SafetyF1 {
    double safe_f1 = 0.0;
    double unsafe_f1 = 0.0;
};

// Supported -> safe, Refuted/Insufficient -> unsafe.
SafetyF1 binary_safety_f1(std::span<const Label> gold, std::span<const Label> pred);

inline bool is_safe(Label l) { return l == Label::supported; }

struct RiskCoveragePoint {
    double coverage = 0.0;
    double risk = 0.0;
    double threshold = 0.0;
};

// One point per distinct score, thresholds descending, coverage ascending.
std::vector<RiskCoveragePoint> risk_coverage_curve(std::span<const double> scores, const std::vector<bool>& safe);

// Risk at the smallest curve coverage >= c. Throws when c exceeds the
// largest coverage on the curve.
double risk_at_coverage(const std::vector<RiskCoveragePoint>& curve, double c);
// Largest coverage whose risk <= r, 0 when none qualifies.
double coverage_at_risk(const std::vector<RiskCoveragePoint>& curve, double r);
// Threshold of the point risk_at_coverage reads.
double threshold_at_coverage(const std::vector<RiskCoveragePoint>& curve, double c);

// Mean risk over the prefix sets top-1..top-n, where a prefix that ends
// inside a run of tied scores is extended to the whole run.
double aurc(std::span<const double> scores, const std::vector<bool>& safe);

// Coverage and risk when answering every example with score >= threshold.
RiskCoveragePoint apply_threshold(std::span<const double> scores, const std::vector<bool>& safe, double threshold);

inline constexpr int default_ece_bins = 15;

// Confidence max(p, 1-p), prediction safe iff p >= 0.5, equal-width bins on
// [0.5, 1] closed on the right (the first bin also holds 0.5).
double binary_ece(std::span<const double> p_safe, const std::vector<bool>& safe, int n_bins = default_ece_bins);

}  // namespace surerag::metrics
