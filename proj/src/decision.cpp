#include "surerag/decision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "surerag/error.hpp"
#include "surerag/kv.hpp"
#include "surerag/metrics.hpp"

namespace surerag::decision {

Standardization Standardization::fit(const std::vector<std::vector<double>>& rows, std::size_t dim) {
    Standardization s;
    s.mean.assign(dim, 0.0);
    s.stddev.assign(dim, 1.0);
    if (rows.empty()) return s;
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows)
        for (std::size_t f = 0; f < dim; ++f) s.mean[f] += r[f] / n;
    for (std::size_t f = 0; f < dim; ++f) {
        double var = 0.0;
        for (const auto& r : rows) var += (r[f] - s.mean[f]) * (r[f] - s.mean[f]);
        const double sd = std::sqrt(var / n);
        s.stddev[f] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

std::vector<double> Standardization::apply(std::span<const double> raw) const {
    if (raw.size() != mean.size()) fail(ErrorCode::invalid_argument, "standardization: dimension mismatch");
    std::vector<double> out(raw.size());
    for (std::size_t f = 0; f < raw.size(); ++f) out[f] = (raw[f] - mean[f]) / stddev[f];
    return out;
}

std::array<double, label_count> AggregationClassifier::logits(std::span<const double> raw_features) const {
    if (raw_features.size() != dim())
        fail(ErrorCode::invalid_argument, "classifier expects " + std::to_string(dim()) + " features, got " +
                                              std::to_string(raw_features.size()));
    const auto z = standardization.apply(raw_features);
    return model.logits(z);
}

AggregationClassifier train_classifier(const std::vector<std::vector<double>>& rows, std::span<const Label> labels,
                                       features::FeatureMode mode, double l2_lambda, std::size_t max_iters) {
    const std::size_t dim = features::feature_count(mode);
    for (const auto& r : rows) {
        if (r.size() != dim)
            fail(ErrorCode::invalid_argument, "train_classifier: expected " + std::to_string(dim) + " features");
        for (double v : r)
            if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "train_classifier: non-finite feature");
    }
    AggregationClassifier clf;
    clf.feature_mode = mode;
    clf.feature_names = features::feature_names(mode);
    clf.l2_lambda = l2_lambda;
    clf.standardization = Standardization::fit(rows, dim);
    logistic::DesignMatrix x(dim);
    for (const auto& r : rows) x.add_dense(clf.standardization.apply(r));
    logistic::TrainOptions opts;
    opts.l2_lambda = l2_lambda;
    opts.max_iters = max_iters;
    clf.model = logistic::fit(x, labels, opts).model;
    return clf;
}

AggregationClassifier train_classifier(const Partition& train, features::FeatureMode mode, double l2_lambda,
                                       std::size_t max_iters) {
    if (train.split != Split::train)
        fail(ErrorCode::invalid_argument, "train_classifier accepts only the train split");
    return train_classifier(train.features, train.labels, mode, l2_lambda, max_iters);
}

LabelDist predict(const AggregationClassifier& clf, std::span<const double> raw_features, double temperature) {
    return logistic::softmax(clf.logits(raw_features), temperature);
}

double temperature_nll(std::span<const std::array<double, label_count>> logits, std::span<const Label> labels,
                       double temperature) {
    double nll = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const auto& z = logits[i];
        double top = z[0];
        for (double v : z) top = std::max(top, v);
        double sum = 0.0;
        for (double v : z) sum += std::exp((v - top) / temperature);
        nll += (top - z[index(labels[i])]) / temperature + std::log(sum);
    }
    return nll / static_cast<double>(logits.size());
}

double fit_temperature(std::span<const std::array<double, label_count>> logits, std::span<const Label> labels,
                       const TemperatureGrid& grid) {
    if (logits.empty()) fail(ErrorCode::invalid_argument, "fit_temperature: empty dev set");
    if (logits.size() != labels.size()) fail(ErrorCode::invalid_argument, "fit_temperature: length mismatch");
    if (grid.points < 2 || !(grid.lo > 0.0) || !(grid.hi > grid.lo))
        fail(ErrorCode::invalid_argument, "fit_temperature: invalid grid");

    const double log_lo = std::log(grid.lo), log_hi = std::log(grid.hi);
    auto grid_at = [&](std::size_t i) {
        return log_lo + (log_hi - log_lo) * static_cast<double>(i) / static_cast<double>(grid.points - 1);
    };
    auto f = [&](double log_t) { return temperature_nll(logits, labels, std::exp(log_t)); };

    std::size_t best = 0;
    double best_nll = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.points; ++i) {
        const double v = f(grid_at(i));
        if (v < best_nll) {
            best_nll = v;
            best = i;
        }
    }

    // Golden-section search on log T between the neighbours of the best point.
    double a = grid_at(best == 0 ? 0 : best - 1);
    double b = grid_at(std::min(best + 1, grid.points - 1));
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double refined = 0.5 * (a + b);
    return f(refined) <= best_nll ? std::exp(refined) : std::exp(grid_at(best));
}

double fit_temperature(const AggregationClassifier& clf, const Partition& dev) {
    if (dev.split != Split::dev) fail(ErrorCode::invalid_argument, "fit_temperature accepts only the dev split");
    std::vector<std::array<double, label_count>> logits;
    logits.reserve(dev.features.size());
    for (const auto& r : dev.features) logits.push_back(clf.logits(r));
    return fit_temperature(logits, dev.labels);
}

double uncertainty_u(const LabelDist& pi, const features::FeatureVector& f, const UWeights& w) {
    double h = 0.0;
    for (double p : pi)
        if (p > 0.0) h -= p * std::log(p);
    const double terms[5] = {
        std::clamp(h / std::log(3.0), 0.0, 1.0),
        std::min(1.0, 2.0 * f.disagreement_d),
        std::clamp(f.conflict_x, 0.0, 1.0),
        std::clamp(1.0 - f.cov_supported, 0.0, 1.0),
        f.retrieval_u ? std::clamp(*f.retrieval_u, 0.0, 1.0) : 0.0,
    };
    const std::size_t used = f.retrieval_u ? 5 : 4;
    double wsum = 0.0, u = 0.0;
    for (std::size_t i = 0; i < used; ++i) {
        wsum += w[i];
        u += w[i] * terms[i];
    }
    return wsum > 0.0 ? u / wsum : 0.0;
}

void validate(const SelectiveConfig& c) {
    if (!std::isfinite(c.beta) || c.beta < 0.0) fail(ErrorCode::invalid_argument, "selective config: beta must be >= 0");
    if (!std::isfinite(c.tau)) fail(ErrorCode::invalid_argument, "selective config: tau must be finite");
    if (!std::isfinite(c.temperature) || !(c.temperature > 0.0))
        fail(ErrorCode::invalid_argument, "selective config: temperature must be > 0");
    double sum = 0.0;
    for (double w : c.u_weights) {
        if (!std::isfinite(w) || w < 0.0) fail(ErrorCode::invalid_argument, "selective config: u weights must be >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::invalid_argument, "selective config: u weights must sum to 1");
}

DecisionOutcome decide(const std::string& example_id, const LabelDist& pi, double u, const SelectiveConfig& config) {
    DecisionOutcome d;
    d.example_id = example_id;
    d.pi = pi;
    d.predicted_label = argmax_label(pi);
    d.uncertainty_u = u;
    d.selective_score_s = pi[index(Label::supported)] - config.beta * u;
    d.decision = d.predicted_label == Label::supported && d.selective_score_s >= config.tau ? Decision::answer
                                                                                            : Decision::abstain;
    return d;
}

std::vector<double> score_quantiles(std::vector<double> scores, std::size_t count) {
    if (scores.empty() || count == 0) return {};
    std::sort(scores.begin(), scores.end());
    std::vector<double> out;
    const std::size_t n = scores.size();
    for (std::size_t i = 0; i < count; ++i) {
        const double q = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(n - 1) + 1e-12));
        if (out.empty() || scores[idx] != out.back()) out.push_back(scores[idx]);
    }
    return out;
}

double induced_aurc(std::span<const ScoredExample> dev, std::span<const Label> labels, double beta, double tau) {
    std::vector<double> s(dev.size());
    std::vector<bool> answered(dev.size()), safe(dev.size());
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dev.size(); ++i) {
        s[i] = dev[i].pi[index(Label::supported)] - beta * dev[i].u;
        answered[i] = argmax_label(dev[i].pi) == Label::supported && s[i] >= tau;
        safe[i] = metrics::is_safe(labels[i]);
        lowest = std::min(lowest, s[i]);
    }
    const double bottom = lowest - 1.0;
    for (std::size_t i = 0; i < dev.size(); ++i)
        if (!answered[i]) s[i] = bottom;
    return metrics::aurc(s, safe);
}

TuneResult tune_selective(std::span<const ScoredExample> dev, std::span<const Label> dev_labels,
                          const std::vector<double>& beta_grid, const std::vector<double>& tau_grid) {
    if (dev.empty()) fail(ErrorCode::invalid_argument, "tune_selective: empty dev set");
    if (dev.size() != dev_labels.size()) fail(ErrorCode::invalid_argument, "tune_selective: length mismatch");
    if (beta_grid.empty()) fail(ErrorCode::invalid_argument, "tune_selective: empty beta grid");

    std::optional<TuneResult> best;
    auto better = [](const TuneResult& a, const TuneResult& b) {
        constexpr double eps = 1e-12;
        if (a.dev_aurc < b.dev_aurc - eps) return true;
        if (a.dev_aurc > b.dev_aurc + eps) return false;
        if (a.beta != b.beta) return a.beta < b.beta;
        return a.tau < b.tau;
    };
    for (double beta : beta_grid) {
        std::vector<double> taus = tau_grid;
        if (taus.empty()) {
            std::vector<double> s;
            s.reserve(dev.size());
            for (const auto& e : dev) s.push_back(e.pi[index(Label::supported)] - beta * e.u);
            taus = score_quantiles(std::move(s), 50);
        }
        for (double tau : taus) {
            TuneResult cand{beta, tau, induced_aurc(dev, dev_labels, beta, tau)};
            if (!best || better(cand, *best)) best = cand;
        }
    }
    return *best;
}

namespace {

void put_config(kv::Document& doc, const std::string& prefix, const SelectiveConfig& c) {
    doc.set(prefix + ".beta", kv::format_double(c.beta));
    doc.set(prefix + ".tau", kv::format_double(c.tau));
    doc.set(prefix + ".temperature", kv::format_double(c.temperature));
    doc.set(prefix + ".u_weights", kv::join_doubles({c.u_weights.begin(), c.u_weights.end()}));
}

SelectiveConfig get_config(const kv::Document& doc, const std::string& prefix) {
    SelectiveConfig c;
    c.beta = kv::parse_double(doc.require(prefix + ".beta"));
    c.tau = kv::parse_double(doc.require(prefix + ".tau"));
    c.temperature = kv::parse_double(doc.require(prefix + ".temperature"));
    const auto w = kv::split_doubles(doc.require(prefix + ".u_weights"));
    if (w.size() != 5) fail(ErrorCode::parse, prefix + ".u_weights must hold 5 values");
    std::copy(w.begin(), w.end(), c.u_weights.begin());
    validate(c);
    return c;
}

}  // namespace

void SureModel::save(const std::filesystem::path& path) const {
    const auto& clf = classifier;
    kv::Document doc;
    doc.set("format", "surerag-classifier-v1");
    doc.set("feature_mode", std::string(features::to_string(clf.feature_mode)));
    std::string names;
    for (std::size_t i = 0; i < clf.feature_names.size(); ++i) names += (i ? "," : "") + clf.feature_names[i];
    doc.set("features", names);
    doc.set("labels", "Supported,Refuted,Insufficient");
    doc.set("l2_lambda", kv::format_double(clf.l2_lambda));
    doc.set("standardization.mean", kv::join_doubles(clf.standardization.mean));
    doc.set("standardization.std", kv::join_doubles(clf.standardization.stddev));
    for (auto l : all_labels) {
        std::vector<double> w(clf.dim());
        for (std::size_t f = 0; f < clf.dim(); ++f) w[f] = clf.model.weight(index(l), f);
        doc.set("weights." + std::string(to_string(l)), kv::join_doubles(w));
    }
    doc.set("bias", kv::join_doubles({clf.model.bias(0), clf.model.bias(1), clf.model.bias(2)}));
    put_config(doc, "raw", raw);
    put_config(doc, "calibrated", calibrated);
    doc.write(path);
}

SureModel SureModel::load(const std::filesystem::path& path) {
    const auto doc = kv::Document::read(path);
    if (doc.require("format") != "surerag-classifier-v1")
        fail(ErrorCode::parse, path.string() + ": unsupported model format");
    SureModel m;
    auto& clf = m.classifier;
    clf.feature_mode = features::parse_feature_mode(doc.require("feature_mode"));
    clf.feature_names = kv::split_list(doc.require("features"));
    if (clf.feature_names != features::feature_names(clf.feature_mode))
        fail(ErrorCode::parse, path.string() + ": feature list does not match feature_mode");
    const std::size_t dim = clf.feature_names.size();
    clf.l2_lambda = kv::parse_double(doc.require("l2_lambda"));
    clf.standardization.mean = kv::split_doubles(doc.require("standardization.mean"));
    clf.standardization.stddev = kv::split_doubles(doc.require("standardization.std"));
    if (clf.standardization.mean.size() != dim || clf.standardization.stddev.size() != dim)
        fail(ErrorCode::parse, path.string() + ": standardization dimension mismatch");
    for (double sd : clf.standardization.stddev)
        if (!(sd > 0.0)) fail(ErrorCode::parse, path.string() + ": standardization std must be > 0");
    clf.model = logistic::Model(dim);
    for (auto l : all_labels) {
        const auto w = kv::split_doubles(doc.require("weights." + std::string(to_string(l))));
        if (w.size() != dim) fail(ErrorCode::parse, path.string() + ": weight row dimension mismatch");
        std::copy(w.begin(), w.end(), clf.model.params.begin() + static_cast<std::ptrdiff_t>(index(l) * dim));
    }
    const auto b = kv::split_doubles(doc.require("bias"));
    if (b.size() != label_count) fail(ErrorCode::parse, path.string() + ": bias must hold 3 values");
    std::copy(b.begin(), b.end(), clf.model.params.begin() + static_cast<std::ptrdiff_t>(label_count * dim));
    m.raw = get_config(doc, "raw");
    m.calibrated = get_config(doc, "calibrated");
    return m;
}

}  // namespace surerag::decision
