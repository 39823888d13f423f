#include "surerag/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "surerag/builder.hpp"
#include "surerag/error.hpp"

namespace surerag::diagnostics {

ArtifactRatio artifact_ratio(double best_shortcut_macro, double model_macro) {
    if (!(model_macro > 0.0)) fail(ErrorCode::invalid_argument, "artifact_ratio: model macro-F1 must be > 0");
    if (!std::isfinite(best_shortcut_macro) || best_shortcut_macro < 0.0)
        fail(ErrorCode::invalid_argument, "artifact_ratio: shortcut macro-F1 must be finite and >= 0");
    ArtifactRatio r;
    r.ratio = best_shortcut_macro / model_macro;
    r.severity = r.ratio >= severe_ratio ? "severe" : r.ratio >= moderate_ratio ? "moderate" : "low";
    return r;
}

SwapResult counterfactual_swap(const std::vector<DecisionOutcome>& predictions,
                               const std::vector<ExampleRecord>& examples) {
    std::unordered_map<std::string, double> p_sup;
    for (const auto& p : predictions) p_sup[p.example_id] = p.pi[index(Label::supported)];

    // group -> condition -> pi_Supported
    std::map<std::string, std::map<Condition, double>> groups;
    for (const auto& ex : examples) {
        auto it = p_sup.find(ex.example_id);
        if (it == p_sup.end()) fail(ErrorCode::invariant, "counterfactual_swap: no prediction for '" + ex.example_id + "'");
        groups[ex.group_id][ex.condition] = it->second;
    }

    SwapResult result;
    const Condition degraded[] = {Condition::partial, Condition::hard_insufficient, Condition::irrelevant,
                                  Condition::refuted};
    std::map<Condition, std::pair<double, std::size_t>> sums;  // (delta sum, successes)
    for (auto c : degraded) result.rows.push_back({c, 0, 0.0, 0.0});
    for (const auto& [group, variants] : groups) {
        auto full = variants.find(Condition::full);
        if (full == variants.end()) {
            result.skipped.push_back(group);
            continue;
        }
        for (auto& row : result.rows) {
            auto v = variants.find(row.condition);
            if (v == variants.end()) continue;
            const double delta = full->second - v->second;
            ++row.pairs;
            sums[row.condition].first += delta;
            if (delta > 0.0) ++sums[row.condition].second;
        }
    }
    for (auto& row : result.rows) {
        if (row.pairs == 0) continue;
        const double n = static_cast<double>(row.pairs);
        row.mean_delta = sums[row.condition].first / n;
        row.success_rate = static_cast<double>(sums[row.condition].second) / n;
    }
    return result;
}

NoOracleResult no_oracle_compare(const std::vector<ExampleRecord>& examples, const ScoreMatrixSet& matrices,
                                 const experiment::ExperimentOptions& options,
                                 const std::vector<features::FeatureMode>& modes) {
    if (modes.empty()) fail(ErrorCode::invalid_argument, "no_oracle_compare: no modes given");
    NoOracleResult result;
    for (auto mode : modes) {
        auto opts = options;
        opts.feature_mode = mode;
        const auto run = experiment::run_experiment(examples, matrices, opts);
        result.modes.push_back({mode, run.report.calibrated.f1});
        for (const auto& p : run.report.pooling)
            if (p.pooling == features::Pooling::mean) result.mean_pool = p.f1;
    }
    return result;
}

std::string mode_label(features::FeatureMode mode) {
    switch (mode) {
    case features::FeatureMode::with_retrieval: return "with retrieval score";
    case features::FeatureMode::no_retrieval: return "drop retrieval score";
    case features::FeatureMode::bm25_retrieval: return "BM25 retrieval score";
    }
    return "with retrieval score";
}

DiagnosticsReport diagnose(const std::vector<ExampleRecord>& examples, const ScoreMatrixSet& matrices,
                           const std::vector<DecisionOutcome>& predictions, double model_macro,
                           const experiment::ExperimentOptions& options) {
    DiagnosticsReport report;
    report.feature_mode = options.feature_mode;
    report.model_macro = model_macro;

    std::vector<ExampleRecord> train, test;
    for (const auto& ex : examples) {
        if (ex.split == Split::train) train.push_back(ex);
        if (ex.split == Split::test) test.push_back(ex);
    }
    double best = -1.0;
    for (auto kind : shortcuts::all_shortcuts) {
        report.shortcuts.push_back(shortcuts::run_shortcut(kind, train, test));
        if (report.shortcuts.back().f1.macro > best) {
            best = report.shortcuts.back().f1.macro;
            report.best_shortcut = kind;
        }
    }
    report.artifact = artifact_ratio(best, model_macro);

    report.prefix_not_rate = builder::audit_prefix_not(examples);

    report.swap = counterfactual_swap(predictions, test);
    report.no_oracle = no_oracle_compare(examples, matrices, options);
    return report;
}

namespace {

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string condition_label(Condition c) {
    switch (c) {
    case Condition::full: return "full";
    case Condition::partial: return "partial";
    case Condition::hard_insufficient: return "hard-insufficient";
    case Condition::irrelevant: return "irrelevant";
    case Condition::refuted: return "refuting";
    }
    return "";
}

}  // namespace

std::string format_report(const DiagnosticsReport& r) {
    std::string t;
    t += "Feature mode: " + std::string(features::to_string(r.feature_mode)) + " (SURE, " + mode_label(r.feature_mode) +
         ")\n\n";

    t += "Shortcut baselines (test)\n";
    t += pad("Baseline", 18) + pad("Macro-F1", 10) + pad("Supp.-F1", 10) + pad("Ref.-F1", 10) + "Insuff.-F1\n";
    for (const auto& s : r.shortcuts)
        t += pad(std::string(shortcuts::to_string(s.kind)), 18) + pad(fixed4(s.f1.macro), 10) +
             pad(fixed4(s.f1.per_class[0]), 10) + pad(fixed4(s.f1.per_class[1]), 10) + fixed4(s.f1.per_class[2]) + "\n";

    t += "\nTrustworthiness checks\n";
    t += pad("Check", 36) + "Result\n";
    t += pad("Max artifact ratio", 36) + fixed4(r.artifact.ratio) + " (" + r.artifact.severity + ", " +
         std::string(shortcuts::to_string(r.best_shortcut)) + ")\n";
    t += pad("Prefix-not rate", 36) + fixed4(r.prefix_not_rate) + "\n";
    for (const auto& m : r.no_oracle.modes)
        t += pad("SURE, " + mode_label(m.mode), 36) + fixed4(m.f1.macro) + " Macro-F1" +
             (m.mode == r.feature_mode ? "  <- this run" : "") + "\n";
    t += pad("mean-pool", 36) + fixed4(r.no_oracle.mean_pool.macro) + " Macro-F1\n";

    t += "\nCounterfactual evidence swap\n";
    t += pad("Condition pair", 30) + pad("Pairs", 8) + pad("Mean dP_sup", 13) + "Success\n";
    for (const auto& row : r.swap.rows) {
        t += pad("Full vs. " + condition_label(row.condition), 30) + pad(std::to_string(row.pairs), 8);
        if (row.pairs == 0)
            t += pad("n/a", 13) + "n/a\n";
        else
            t += pad(fixed4(row.mean_delta), 13) + fixed4(row.success_rate) + "\n";
    }
    if (!r.swap.skipped.empty()) {
        t += "\nSkipped groups without a full variant:\n";
        for (const auto& g : r.swap.skipped) t += "  " + g + "\n";
    }
    return t;
}

std::string to_json(const DiagnosticsReport& r) {
    using nlohmann::ordered_json;
    auto f1 = [](const metrics::F1Report& f) {
        ordered_json j;
        j["macro_f1"] = f.macro;
        for (auto l : all_labels) j["per_class"][std::string(to_string(l))] = f.per_class[index(l)];
        return j;
    };
    ordered_json j;
    j["feature_mode"] = features::to_string(r.feature_mode);
    j["feature_mode_label"] = mode_label(r.feature_mode);
    j["model_macro_f1"] = r.model_macro;
    for (const auto& s : r.shortcuts) j["shortcuts"][std::string(shortcuts::to_string(s.kind))] = f1(s.f1);
    j["best_shortcut"] = shortcuts::to_string(r.best_shortcut);
    j["artifact_ratio"] = r.artifact.ratio;
    j["artifact_severity"] = r.artifact.severity;
    j["prefix_not_rate"] = r.prefix_not_rate;
    for (const auto& row : r.swap.rows) {
        ordered_json s;
        s["pairs"] = row.pairs;
        s["mean_delta_p_sup"] = row.mean_delta;
        s["success_rate"] = row.success_rate;
        j["counterfactual"]["full_vs_" + std::string(to_string(row.condition))] = s;
    }
    j["counterfactual_skipped_groups"] = r.swap.skipped;
    for (const auto& m : r.no_oracle.modes) j["no_oracle"][std::string(features::to_string(m.mode))] = f1(m.f1);
    j["no_oracle"]["mean_pool"] = f1(r.no_oracle.mean_pool);
    return j.dump(2) + "\n";
}

}  // namespace surerag::diagnostics
