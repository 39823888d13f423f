#include "surerag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "surerag/error.hpp"

namespace surerag::metrics {

namespace {

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
    const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

void check_pair(std::size_t a, std::size_t b, const char* what) {
    if (a != b) fail(ErrorCode::invalid_argument, std::string(what) + ": length mismatch");
    if (a == 0) fail(ErrorCode::invalid_argument, std::string(what) + ": empty input");
}

// Indices sorted by score descending; stable so equal scores keep input order.
std::vector<std::size_t> rank_desc(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

void check_scores(std::span<const double> scores) {
    for (double s : scores)
        if (!std::isfinite(s)) fail(ErrorCode::invalid_argument, "selective scores must be finite");
}

}  // namespace

F1Report macro_f1(std::span<const Label> gold, std::span<const Label> pred) {
    check_pair(gold.size(), pred.size(), "macro_f1");
    F1Report r;
    for (auto l : all_labels) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            if (pred[i] == l && gold[i] == l) ++tp;
            else if (pred[i] == l) ++fp;
            else if (gold[i] == l) ++fn;
        }
        r.per_class[index(l)] = f1(tp, fp, fn);
    }
    r.macro = (r.per_class[0] + r.per_class[1] + r.per_class[2]) / 3.0;
    return r;
}

SafetyF1 binary_safety_f1(std::span<const Label> gold, std::span<const Label> pred) {
    check_pair(gold.size(), pred.size(), "binary_safety_f1");
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool g = is_safe(gold[i]), p = is_safe(pred[i]);
        if (g && p) ++tp;
        else if (!g && p) ++fp;
        else if (g && !p) ++fn;
        else ++tn;
    }
    // For the unsafe class the roles of fp and fn swap.
    return {f1(tp, fp, fn), f1(tn, fn, fp)};
}

std::vector<RiskCoveragePoint> risk_coverage_curve(std::span<const double> scores, const std::vector<bool>& safe) {
    check_pair(scores.size(), safe.size(), "risk_coverage_curve");
    check_scores(scores);
    const auto order = rank_desc(scores);
    const double n = static_cast<double>(scores.size());
    std::vector<RiskCoveragePoint> curve;
    std::size_t answered = 0, unsafe = 0, i = 0;
    while (i < order.size()) {
        const double t = scores[order[i]];
        while (i < order.size() && scores[order[i]] == t) {
            ++answered;
            if (!safe[order[i]]) ++unsafe;
            ++i;
        }
        curve.push_back({static_cast<double>(answered) / n,
                         static_cast<double>(unsafe) / static_cast<double>(answered), t});
    }
    return curve;
}

namespace {

const RiskCoveragePoint& point_at_coverage(const std::vector<RiskCoveragePoint>& curve, double c) {
    if (curve.empty()) fail(ErrorCode::invalid_argument, "risk_at_coverage: empty curve");
    if (!(c >= 0.0 && c <= 1.0)) fail(ErrorCode::invalid_argument, "risk_at_coverage: coverage must be in [0, 1]");
    for (const auto& p : curve)
        if (p.coverage >= c - 1e-12) return p;
    fail(ErrorCode::invalid_argument, "risk_at_coverage: coverage exceeds the curve's maximum");
}

}  // namespace

double risk_at_coverage(const std::vector<RiskCoveragePoint>& curve, double c) {
    return point_at_coverage(curve, c).risk;
}

double threshold_at_coverage(const std::vector<RiskCoveragePoint>& curve, double c) {
    return point_at_coverage(curve, c).threshold;
}

double coverage_at_risk(const std::vector<RiskCoveragePoint>& curve, double r) {
    if (curve.empty()) fail(ErrorCode::invalid_argument, "coverage_at_risk: empty curve");
    if (!(r >= 0.0 && r <= 1.0)) fail(ErrorCode::invalid_argument, "coverage_at_risk: risk must be in [0, 1]");
    double best = 0.0;
    for (const auto& p : curve)
        if (p.risk <= r + 1e-12) best = std::max(best, p.coverage);
    return best;
}

double aurc(std::span<const double> scores, const std::vector<bool>& safe) {
    check_pair(scores.size(), safe.size(), "aurc");
    check_scores(scores);
    const auto order = rank_desc(scores);
    double total = 0.0;
    std::size_t answered = 0, unsafe = 0, i = 0;
    while (i < order.size()) {
        const double t = scores[order[i]];
        std::size_t run = 0;
        while (i < order.size() && scores[order[i]] == t) {
            ++answered;
            ++run;
            if (!safe[order[i]]) ++unsafe;
            ++i;
        }
        // Every prefix ending inside this run answers the whole run.
        total += static_cast<double>(run) * static_cast<double>(unsafe) / static_cast<double>(answered);
    }
    return total / static_cast<double>(scores.size());
}

RiskCoveragePoint apply_threshold(std::span<const double> scores, const std::vector<bool>& safe, double threshold) {
    check_pair(scores.size(), safe.size(), "apply_threshold");
    std::size_t answered = 0, unsafe = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] >= threshold) {
            ++answered;
            if (!safe[i]) ++unsafe;
        }
    }
    return {static_cast<double>(answered) / static_cast<double>(scores.size()),
            answered ? static_cast<double>(unsafe) / static_cast<double>(answered) : 0.0, threshold};
}

double binary_ece(std::span<const double> p_safe, const std::vector<bool>& safe, int n_bins) {
    check_pair(p_safe.size(), safe.size(), "binary_ece");
    if (n_bins < 1) fail(ErrorCode::invalid_argument, "binary_ece: n_bins must be >= 1");
    std::vector<double> conf_sum(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<double> correct(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<std::size_t> count(static_cast<std::size_t>(n_bins), 0);
    const double width = 0.5 / n_bins;
    for (std::size_t i = 0; i < p_safe.size(); ++i) {
        const double p = p_safe[i];
        if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::invalid_argument, "binary_ece: probabilities must be in [0, 1]");
        const double conf = std::max(p, 1.0 - p);
        const bool pred_safe = p >= 0.5;
        // Right-closed bins: (0.5 + b w, 0.5 + (b+1) w].
        auto b = static_cast<int>(std::ceil((conf - 0.5) / width)) - 1;
        b = std::clamp(b, 0, n_bins - 1);
        const auto bi = static_cast<std::size_t>(b);
        conf_sum[bi] += conf;
        correct[bi] += pred_safe == safe[i] ? 1.0 : 0.0;
        ++count[bi];
    }
    const double n = static_cast<double>(p_safe.size());
    double ece = 0.0;
    for (std::size_t b = 0; b < count.size(); ++b) {
        if (!count[b]) continue;
        const double c = static_cast<double>(count[b]);
        ece += (c / n) * std::abs(correct[b] / c - conf_sum[b] / c);
    }
    return ece;
}

}  // namespace surerag::metrics
