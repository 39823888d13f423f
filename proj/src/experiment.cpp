#include "surerag/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "surerag/error.hpp"

namespace surerag::experiment {

using features::FeatureMode;
using features::FeatureRow;

void validate(const ExperimentOptions& o) {
    if (o.beta_grid.empty()) fail(ErrorCode::invalid_argument, "beta grid is empty");
    for (double b : o.beta_grid)
        if (!std::isfinite(b) || b < 0.0) fail(ErrorCode::invalid_argument, "beta grid values must be >= 0");
    for (double t : o.tau_grid)
        if (!std::isfinite(t)) fail(ErrorCode::invalid_argument, "tau grid values must be finite");
    if (!(o.l2_lambda >= 0.0)) fail(ErrorCode::invalid_argument, "l2_lambda must be >= 0");
    if (o.max_iters == 0) fail(ErrorCode::invalid_argument, "max_iters must be >= 1");
    if (o.pooling_k == 0) fail(ErrorCode::invalid_argument, "pooling_k must be >= 1");
    if (o.ece_bins < 1) fail(ErrorCode::invalid_argument, "ece_bins must be >= 1");
    if (o.coverage_points.empty()) fail(ErrorCode::invalid_argument, "coverage points are empty");
    for (double c : o.coverage_points)
        if (!(c > 0.0 && c <= 1.0)) fail(ErrorCode::invalid_argument, "coverage points must lie in (0, 1]");
    for (double r : o.risk_points)
        if (!(r >= 0.0 && r <= 1.0)) fail(ErrorCode::invalid_argument, "risk points must lie in [0, 1]");
    decision::SelectiveConfig probe;
    probe.u_weights = o.u_weights;
    decision::validate(probe);
}

std::vector<FeatureRow> compute_features(const std::vector<ExampleRecord>& examples, const ScoreMatrixSet& matrices,
                                         FeatureMode mode) {
    if (examples.size() != matrices.size())
        fail(ErrorCode::invalid_argument, "compute_features: examples and score matrices differ in length");
    std::vector<FeatureRow> rows;
    rows.reserve(examples.size());
    for (std::size_t e = 0; e < examples.size(); ++e)
        rows.push_back({examples[e].example_id, features::aggregate(examples[e], matrices[e], mode)});
    return rows;
}

namespace {

std::unordered_map<std::string, const features::FeatureVector*> index_rows(const std::vector<FeatureRow>& rows) {
    std::unordered_map<std::string, const features::FeatureVector*> out;
    for (const auto& r : rows)
        if (!out.emplace(r.example_id, &r.features).second)
            fail(ErrorCode::invariant, "duplicate feature row for '" + r.example_id + "'");
    return out;
}

const features::FeatureVector& lookup(const std::unordered_map<std::string, const features::FeatureVector*>& idx,
                                      const std::string& id) {
    auto it = idx.find(id);
    if (it == idx.end()) fail(ErrorCode::invariant, "no feature row for example '" + id + "'");
    return *it->second;
}

std::vector<decision::ScoredExample> scored(const decision::AggregationClassifier& clf,
                                            const decision::Partition& part,
                                            const std::vector<const features::FeatureVector*>& fvs,
                                            const decision::SelectiveConfig& config) {
    std::vector<decision::ScoredExample> out;
    out.reserve(part.features.size());
    for (std::size_t i = 0; i < part.features.size(); ++i) {
        decision::ScoredExample s;
        s.pi = decision::predict(clf, part.features[i], config.temperature);
        s.u = decision::uncertainty_u(s.pi, *fvs[i], config.u_weights);
        out.push_back(s);
    }
    return out;
}

std::vector<const features::FeatureVector*> split_vectors(const std::vector<ExampleRecord>& examples,
                                                          const std::vector<FeatureRow>& rows, Split split) {
    const auto idx = index_rows(rows);
    std::vector<const features::FeatureVector*> out;
    for (const auto& ex : examples)
        if (ex.split == split) out.push_back(&lookup(idx, ex.example_id));
    return out;
}

}  // namespace

decision::Partition make_partition(const std::vector<ExampleRecord>& examples, const std::vector<FeatureRow>& rows,
                                   FeatureMode mode, Split split) {
    const auto idx = index_rows(rows);
    decision::Partition part;
    part.split = split;
    for (const auto& ex : examples) {
        if (ex.split != split) continue;
        part.example_ids.push_back(ex.example_id);
        part.features.push_back(features::to_values(lookup(idx, ex.example_id), mode));
        if (split != Split::test) part.labels.push_back(ex.label);
    }
    return part;
}

std::vector<ExampleRecord> redact_test_labels(std::vector<ExampleRecord> examples) {
    for (auto& ex : examples) {
        if (ex.split != Split::test) continue;
        ex.label = Label::insufficient;
        ex.condition = Condition::irrelevant;
        for (auto& p : ex.passages) p.origin = Origin::distractor;
    }
    return examples;
}

decision::AggregationClassifier train_stage(const std::vector<ExampleRecord>& examples,
                                            const std::vector<FeatureRow>& rows, const ExperimentOptions& options) {
    const auto train = make_partition(examples, rows, options.feature_mode, Split::train);
    if (train.features.empty()) fail(ErrorCode::invalid_argument, "train split is empty");
    return decision::train_classifier(train, options.feature_mode, options.l2_lambda, options.max_iters);
}

double calibrate_stage(const decision::AggregationClassifier& clf, const std::vector<ExampleRecord>& examples,
                       const std::vector<FeatureRow>& rows) {
    const auto dev = make_partition(examples, rows, clf.feature_mode, Split::dev);
    if (dev.features.empty()) fail(ErrorCode::invalid_argument, "dev split is empty");
    return decision::fit_temperature(clf, dev);
}

decision::SureModel tune_stage(const decision::AggregationClassifier& clf, double temperature,
                               const std::vector<ExampleRecord>& examples, const std::vector<FeatureRow>& rows,
                               const ExperimentOptions& options) {
    const auto dev = make_partition(examples, rows, clf.feature_mode, Split::dev);
    if (dev.features.empty()) fail(ErrorCode::invalid_argument, "dev split is empty");
    const auto fvs = split_vectors(examples, rows, Split::dev);

    decision::SureModel model;
    model.classifier = clf;
    for (auto* config : {&model.raw, &model.calibrated}) {
        config->temperature = config == &model.raw ? 1.0 : temperature;
        config->u_weights = options.u_weights;
        const auto s = scored(clf, dev, fvs, *config);
        const auto tuned = decision::tune_selective(s, dev.labels, options.beta_grid, options.tau_grid);
        config->beta = tuned.beta;
        config->tau = tuned.tau;
    }
    return model;
}

std::vector<DecisionOutcome> predict(const decision::SureModel& model, const std::vector<ExampleRecord>& examples,
                                     const std::vector<FeatureRow>& rows, Split split, bool calibrated) {
    const auto& clf = model.classifier;
    const auto& config = calibrated ? model.calibrated : model.raw;
    const auto part = make_partition(examples, rows, clf.feature_mode, split);
    const auto fvs = split_vectors(examples, rows, split);
    const auto s = scored(clf, part, fvs, config);
    std::vector<DecisionOutcome> out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back(decision::decide(part.example_ids[i], s[i].pi, s[i].u, config));
    return out;
}

namespace {

std::vector<bool> safe_flags(const std::vector<Label>& labels) {
    std::vector<bool> out;
    out.reserve(labels.size());
    for (auto l : labels) out.push_back(metrics::is_safe(l));
    return out;
}

VariantReport evaluate_variant(const std::string& name, const decision::SureModel& model, bool calibrated,
                               const std::vector<ExampleRecord>& examples, const std::vector<FeatureRow>& rows,
                               const std::vector<Label>& gold, const ExperimentOptions& options) {
    const auto& config = calibrated ? model.calibrated : model.raw;
    VariantReport v;
    v.name = name;
    v.temperature = config.temperature;
    v.beta = config.beta;
    v.tau = config.tau;

    const auto outcomes = predict(model, examples, rows, Split::test, calibrated);
    std::vector<Label> argmax, selective;
    std::vector<double> s, p_safe;
    std::vector<decision::ScoredExample> scored_test;
    std::size_t answered = 0, answered_unsafe = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        argmax.push_back(o.predicted_label);
        selective.push_back(o.predicted_label == Label::supported && o.decision == Decision::abstain
                                ? Label::insufficient
                                : o.predicted_label);
        s.push_back(o.selective_score_s);
        p_safe.push_back(o.pi[index(Label::supported)]);
        scored_test.push_back({o.pi, o.uncertainty_u});
        if (o.decision == Decision::answer) {
            ++answered;
            if (!metrics::is_safe(gold[i])) ++answered_unsafe;
        }
    }
    const auto safe = safe_flags(gold);
    v.f1 = metrics::macro_f1(gold, argmax);
    v.selective_f1 = metrics::macro_f1(gold, selective);
    v.safety = metrics::binary_safety_f1(gold, argmax);
    v.ece = metrics::binary_ece(p_safe, safe, options.ece_bins);

    auto& sel = v.selective;
    sel.operating_coverage = static_cast<double>(answered) / static_cast<double>(outcomes.size());
    sel.operating_risk = answered ? static_cast<double>(answered_unsafe) / static_cast<double>(answered) : 0.0;
    sel.aurc = decision::induced_aurc(scored_test, gold, config.beta, config.tau);
    sel.aurc_score = metrics::aurc(s, safe);

    const auto curve = metrics::risk_coverage_curve(s, safe);
    const auto dev_outcomes = predict(model, examples, rows, Split::dev, calibrated);
    std::vector<double> dev_s;
    std::vector<bool> dev_safe;
    for (const auto& o : dev_outcomes) dev_s.push_back(o.selective_score_s);
    for (const auto& ex : examples)
        if (ex.split == Split::dev) dev_safe.push_back(metrics::is_safe(ex.label));
    const auto dev_curve = metrics::risk_coverage_curve(dev_s, dev_safe);
    for (double c : options.coverage_points) {
        sel.risk_exact.push_back(metrics::risk_at_coverage(curve, c));
        const auto at = metrics::apply_threshold(s, safe, metrics::threshold_at_coverage(dev_curve, c));
        sel.risk_dev_threshold.push_back(at.risk);
        sel.coverage_dev_threshold.push_back(at.coverage);
    }
    for (double r : options.risk_points) sel.coverage_at_risk.push_back(metrics::coverage_at_risk(curve, r));
    return v;
}

}  // namespace

EvaluationReport evaluate(const decision::SureModel& model, const std::vector<ExampleRecord>& examples,
                          const std::vector<FeatureRow>& rows, const ScoreMatrixSet& matrices,
                          const ExperimentOptions& options) {
    validate(options);
    if (examples.size() != matrices.size())
        fail(ErrorCode::invalid_argument, "evaluate: examples and score matrices differ in length");
    EvaluationReport report;
    report.feature_mode = model.classifier.feature_mode;
    report.coverage_points = options.coverage_points;
    report.risk_points = options.risk_points;

    std::vector<Label> gold;
    std::vector<std::size_t> test_index;
    for (std::size_t e = 0; e < examples.size(); ++e) {
        if (examples[e].split != Split::test) continue;
        gold.push_back(examples[e].label);
        test_index.push_back(e);
    }
    if (gold.empty()) fail(ErrorCode::invalid_argument, "test split is empty");
    report.n_test = gold.size();
    report.raw = evaluate_variant("SURE", model, false, examples, rows, gold, options);
    report.calibrated = evaluate_variant("SURE calibrated", model, true, examples, rows, gold, options);

    const auto safe = safe_flags(gold);
    for (auto pooling : {features::Pooling::max, features::Pooling::mean, features::Pooling::top_k}) {
        PoolingReport p;
        p.pooling = pooling;
        std::vector<Label> pred;
        std::vector<double> p_safe;
        std::size_t partial = 0, partial_sup = 0;
        for (auto e : test_index) {
            const auto dist = features::pool_predict(matrices[e], pooling, options.pooling_k);
            pred.push_back(argmax_label(dist));
            p_safe.push_back(dist[index(Label::supported)]);
            if (examples[e].condition == Condition::partial) {
                ++partial;
                if (pred.back() == Label::supported) ++partial_sup;
            }
        }
        p.f1 = metrics::macro_f1(gold, pred);
        p.safety = metrics::binary_safety_f1(gold, pred);
        const auto curve = metrics::risk_coverage_curve(p_safe, safe);
        for (double c : options.coverage_points) p.risk_exact.push_back(metrics::risk_at_coverage(curve, c));
        p.aurc = metrics::aurc(p_safe, safe);
        p.ece = metrics::binary_ece(p_safe, safe, options.ece_bins);
        p.partial_supported_rate = partial ? static_cast<double>(partial_sup) / static_cast<double>(partial) : 0.0;
        report.pooling.push_back(std::move(p));
    }
    return report;
}

namespace {

std::string percent_tag(double v) { return std::to_string(static_cast<long>(std::lround(v * 100.0))); }

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    s.append(s.size() < width ? width - s.size() : 1, ' ');
    return s;
}

std::string pooling_name(features::Pooling p) {
    switch (p) {
    case features::Pooling::max: return "max-pool";
    case features::Pooling::mean: return "mean-pool";
    case features::Pooling::top_k: return "top-k pool";
    }
    return "pool";
}

std::string pooling_key(features::Pooling p) {
    switch (p) {
    case features::Pooling::max: return "max_pool";
    case features::Pooling::mean: return "mean_pool";
    case features::Pooling::top_k: return "top_k_pool";
    }
    return "pool";
}

}  // namespace

std::vector<std::pair<std::string, double>> flatten(const EvaluationReport& r) {
    std::vector<std::pair<std::string, double>> out;
    out.emplace_back("n_test", static_cast<double>(r.n_test));
    out.emplace_back("macro_f1", r.calibrated.f1.macro);
    out.emplace_back("ece_raw", r.raw.ece);
    out.emplace_back("ece_calibrated", r.calibrated.ece);
    auto f1 = [&](const std::string& p, const metrics::F1Report& f) {
        out.emplace_back(p + ".macro_f1", f.macro);
        for (auto l : all_labels) out.emplace_back(p + ".f1." + std::string(to_string(l)), f.per_class[index(l)]);
    };
    for (const auto* v : {&r.raw, &r.calibrated}) {
        const std::string p = v == &r.raw ? "sure" : "sure_calibrated";
        f1(p, v->f1);
        out.emplace_back(p + ".selective_macro_f1", v->selective_f1.macro);
        out.emplace_back(p + ".safe_f1", v->safety.safe_f1);
        out.emplace_back(p + ".unsafe_f1", v->safety.unsafe_f1);
        for (std::size_t i = 0; i < r.coverage_points.size(); ++i) {
            const auto tag = percent_tag(r.coverage_points[i]);
            out.emplace_back(p + ".risk@" + tag, v->selective.risk_exact[i]);
            out.emplace_back(p + ".risk@" + tag + ".dev_threshold", v->selective.risk_dev_threshold[i]);
            out.emplace_back(p + ".coverage@" + tag + ".dev_threshold", v->selective.coverage_dev_threshold[i]);
        }
        for (std::size_t i = 0; i < r.risk_points.size(); ++i)
            out.emplace_back(p + ".coverage@risk" + percent_tag(r.risk_points[i]), v->selective.coverage_at_risk[i]);
        out.emplace_back(p + ".aurc", v->selective.aurc);
        out.emplace_back(p + ".aurc_score", v->selective.aurc_score);
        out.emplace_back(p + ".operating_coverage", v->selective.operating_coverage);
        out.emplace_back(p + ".operating_risk", v->selective.operating_risk);
        out.emplace_back(p + ".ece", v->ece);
        out.emplace_back(p + ".temperature", v->temperature);
        out.emplace_back(p + ".beta", v->beta);
        out.emplace_back(p + ".tau", v->tau);
    }
    for (const auto& pr : r.pooling) {
        const auto p = pooling_key(pr.pooling);
        f1(p, pr.f1);
        out.emplace_back(p + ".safe_f1", pr.safety.safe_f1);
        out.emplace_back(p + ".unsafe_f1", pr.safety.unsafe_f1);
        for (std::size_t i = 0; i < r.coverage_points.size(); ++i)
            out.emplace_back(p + ".risk@" + percent_tag(r.coverage_points[i]), pr.risk_exact[i]);
        out.emplace_back(p + ".aurc", pr.aurc);
        out.emplace_back(p + ".ece", pr.ece);
        out.emplace_back(p + ".partial_supported_rate", pr.partial_supported_rate);
    }
    return out;
}

std::string format_report(const EvaluationReport& r) {
    std::string t;
    t += "Feature mode: " + std::string(features::to_string(r.feature_mode)) + "\n";
    t += "Test examples: " + std::to_string(r.n_test) + "\n\n";

    t += "Classification (test)\n";
    t += pad("Model", 26) + pad("Macro-F1", 10) + pad("Supp.-F1", 10) + pad("Ref.-F1", 10) + "Insuff.-F1\n";
    auto row = [&](const std::string& name, const metrics::F1Report& f) {
        t += pad(name, 26) + pad(fixed4(f.macro), 10) + pad(fixed4(f.per_class[0]), 10) +
             pad(fixed4(f.per_class[1]), 10) + fixed4(f.per_class[2]) + "\n";
    };
    for (const auto& p : r.pooling) row(pooling_name(p.pooling), p.f1);
    row(r.raw.name, r.raw.f1);
    row(r.calibrated.name, r.calibrated.f1);
    row(r.raw.name + " selective", r.raw.selective_f1);
    row(r.calibrated.name + " selective", r.calibrated.selective_f1);

    t += "\nSafe/unsafe (test)\n";
    t += pad("Model", 26) + pad("Safe-F1", 10) + "Unsafe-F1\n";
    for (const auto& p : r.pooling)
        t += pad(pooling_name(p.pooling), 22) + pad(fixed4(p.safety.safe_f1), 10) + fixed4(p.safety.unsafe_f1) + "\n";
    for (const auto* v : {&r.raw, &r.calibrated})
        t += pad(v->name, 26) + pad(fixed4(v->safety.safe_f1), 10) + fixed4(v->safety.unsafe_f1) + "\n";

    auto risk_header = [&](const std::string& title) {
        t += "\n" + title + "\n" + pad("Model", 26);
        for (double c : r.coverage_points) t += pad("Risk@" + percent_tag(c), 10);
        t += "AURC\n";
    };
    risk_header("Selective answering, exact test coverage");
    for (const auto& p : r.pooling) {
        t += pad(pooling_name(p.pooling), 22);
        for (double v : p.risk_exact) t += pad(fixed4(v), 10);
        t += fixed4(p.aurc) + "\n";
    }
    for (const auto* v : {&r.raw, &r.calibrated}) {
        t += pad(v->name, 26);
        for (double x : v->selective.risk_exact) t += pad(fixed4(x), 10);
        t += fixed4(v->selective.aurc) + "\n";
    }

    t += "\nSelective answering, dev-selected thresholds (risk / test coverage)\n" + pad("Model", 26);
    for (double c : r.coverage_points) t += pad("@" + percent_tag(c), 18);
    t += "\n";
    for (const auto* v : {&r.raw, &r.calibrated}) {
        t += pad(v->name, 26);
        for (std::size_t i = 0; i < r.coverage_points.size(); ++i)
            t += pad(fixed4(v->selective.risk_dev_threshold[i]) + " / " + fixed4(v->selective.coverage_dev_threshold[i]),
                     18);
        t += "\n";
    }

    if (!r.risk_points.empty()) {
        t += "\nCoverage at fixed risk\n" + pad("Model", 26);
        for (double x : r.risk_points) t += pad("Cov@risk" + percent_tag(x), 12);
        t += "\n";
        for (const auto* v : {&r.raw, &r.calibrated}) {
            t += pad(v->name, 26);
            for (double x : v->selective.coverage_at_risk) t += pad(fixed4(x), 12);
            t += "\n";
        }
    }

    t += "\nOperating point (tuned on dev)\n";
    t += pad("Model", 26) + pad("T", 10) + pad("beta", 10) + pad("tau", 10) + pad("Coverage", 10) + "Risk\n";
    for (const auto* v : {&r.raw, &r.calibrated})
        t += pad(v->name, 26) + pad(fixed4(v->temperature), 10) + pad(fixed4(v->beta), 10) + pad(fixed4(v->tau), 10) +
             pad(fixed4(v->selective.operating_coverage), 10) + fixed4(v->selective.operating_risk) + "\n";

    const std::string first_risk = r.coverage_points.empty() ? "" : percent_tag(r.coverage_points.front());
    t += "\nCalibration (safe/unsafe)\n";
    t += pad("Model", 26) + pad("Binary ECE", 12) + "Risk@" + first_risk + "\n";
    for (const auto* v : {&r.raw, &r.calibrated})
        t += pad(v->name, 26) + pad(fixed4(v->ece), 12) + fixed4(v->selective.risk_exact.front()) + "\n";
    return t;
}

ExperimentResult run_experiment(const std::vector<ExampleRecord>& examples, const ScoreMatrixSet& matrices,
                                const ExperimentOptions& options) {
    validate(options);
    ExperimentResult result;
    result.rows = compute_features(examples, matrices, options.feature_mode);
    const auto blind = redact_test_labels(examples);
    const auto clf = train_stage(blind, result.rows, options);
    const double temperature = calibrate_stage(clf, blind, result.rows);
    result.model = tune_stage(clf, temperature, blind, result.rows, options);
    result.predictions = predict(result.model, blind, result.rows, Split::test, true);
    result.report = evaluate(result.model, examples, result.rows, matrices, options);
    return result;
}

}  // namespace surerag::experiment
