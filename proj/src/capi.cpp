#include "surerag/surerag.h"

#include <cstring>
#include <new>
#include <string>

#include "surerag/builder.hpp"
#include "surerag/corpus.hpp"
#include "surerag/decision.hpp"
#include "surerag/diagnostics.hpp"
#include "surerag/error.hpp"
#include "surerag/metrics.hpp"
#include "surerag/pipeline.hpp"
#include "surerag/verifier.hpp"

struct sr_config {
    surerag::pipeline::RunConfig config;
};

struct sr_examples {
    std::vector<surerag::ExampleRecord> records;
};

struct sr_model {
    surerag::decision::SureModel model;
};

namespace {

thread_local std::string last_error;

sr_status to_status(surerag::ErrorCode code) {
    switch (code) {
    case surerag::ErrorCode::invalid_argument: return SR_INVALID_ARGUMENT;
    case surerag::ErrorCode::parse: return SR_PARSE;
    case surerag::ErrorCode::invariant: return SR_INVARIANT;
    case surerag::ErrorCode::io: return SR_IO;
    case surerag::ErrorCode::missing_pair: return SR_MISSING_PAIR;
    case surerag::ErrorCode::stage: return SR_STAGE;
    }
    return SR_INTERNAL;
}

template <typename F>
sr_status guard(F&& f) {
    try {
        f();
        last_error.clear();
        return SR_OK;
    } catch (const surerag::Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return SR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return SR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) surerag::fail(surerag::ErrorCode::invalid_argument, what);
}

void copy_out(const std::string& value, char* buf, size_t cap, size_t* needed) {
    if (needed) *needed = value.size() + 1;
    if (buf && cap > 0) {
        const size_t n = value.size() < cap - 1 ? value.size() : cap - 1;
        std::memcpy(buf, value.data(), n);
        buf[n] = '\0';
    }
}

std::vector<bool> flags(const int* safe, size_t n) {
    std::vector<bool> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = safe[i] != 0;
    return out;
}

surerag::Label label_of(int code) {
    require(code >= 0 && code <= 2, "label code must be 0, 1 or 2");
    return static_cast<surerag::Label>(code);
}

void fill(const surerag::DecisionOutcome& d, sr_decision* out) {
    for (int i = 0; i < 3; ++i) out->pi[i] = d.pi[i];
    out->label = static_cast<int>(d.predicted_label);
    out->u = d.uncertainty_u;
    out->s = d.selective_score_s;
    out->answer = d.decision == surerag::Decision::answer ? 1 : 0;
}

// Rebuilds the feature record from values in the model's column order.
surerag::features::FeatureVector vector_of(const surerag::decision::AggregationClassifier& clf, const double* v) {
    surerag::features::FeatureVector f;
    for (size_t i = 0; i < clf.feature_names.size(); ++i) {
        const auto& n = clf.feature_names[i];
        if (n == "cov_supported") f.cov_supported = v[i];
        else if (n == "cov_refuted") f.cov_refuted = v[i];
        else if (n == "cov_insufficient") f.cov_insufficient = v[i];
        else if (n == "m_sup") f.m_sup = v[i];
        else if (n == "m_ref") f.m_ref = v[i];
        else if (n == "mean_neutral") f.mean_neutral = v[i];
        else if (n == "entropy_mean") f.entropy_mean = v[i];
        else if (n == "disagreement_d") f.disagreement_d = v[i];
        else if (n == "conflict_x") f.conflict_x = v[i];
        else if (n == "retrieval_u") f.retrieval_u = v[i];
    }
    return f;
}

}  // namespace

extern "C" {

const char* sr_version(void) { return "1.0.0"; }

const char* sr_status_string(sr_status status) {
    switch (status) {
    case SR_OK: return "ok";
    case SR_INVALID_ARGUMENT: return "invalid argument";
    case SR_PARSE: return "parse error";
    case SR_INVARIANT: return "invariant violation";
    case SR_IO: return "i/o error";
    case SR_MISSING_PAIR: return "missing pair score";
    case SR_STAGE: return "stage failure";
    case SR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* sr_last_error(void) { return last_error.c_str(); }

sr_status sr_config_create(sr_config** out) {
    return guard([&] {
        require(out != nullptr, "out is null");
        *out = new sr_config{};
    });
}

sr_status sr_config_load(const char* path, sr_config** out) {
    return guard([&] {
        require(path && out, "path and out must be non-null");
        *out = nullptr;
        auto cfg = surerag::pipeline::RunConfig::load(path);
        *out = new sr_config{std::move(cfg)};
    });
}

sr_status sr_config_set(sr_config* config, const char* key, const char* value) {
    return guard([&] {
        require(config && key && value, "config, key and value must be non-null");
        config->config.set(key, value);
    });
}

sr_status sr_config_get(const sr_config* config, const char* key, char* buf, size_t cap, size_t* needed) {
    return guard([&] {
        require(config && key, "config and key must be non-null");
        const auto v = config->config.to_kv().get(key);
        if (!v) surerag::fail(surerag::ErrorCode::invalid_argument, std::string("unknown config key '") + key + "'");
        copy_out(*v, buf, cap, needed);
    });
}

sr_status sr_config_write(const sr_config* config, const char* path) {
    return guard([&] {
        require(config && path, "config and path must be non-null");
        config->config.to_kv().write(path);
    });
}

void sr_config_destroy(sr_config* config) { delete config; }

sr_status sr_run_stage(const sr_config* config, const char* stage) {
    return guard([&] {
        require(config && stage, "config and stage must be non-null");
        surerag::pipeline::run_stage(config->config, surerag::pipeline::parse_stage(stage));
    });
}

sr_status sr_run_pipeline(const sr_config* config) {
    return guard([&] {
        require(config != nullptr, "config is null");
        surerag::pipeline::run_pipeline(config->config);
    });
}

sr_status sr_run_multi_seed(const sr_config* config) {
    return guard([&] {
        require(config != nullptr, "config is null");
        surerag::pipeline::multi_seed(config->config);
    });
}

sr_status sr_write_synthetic_sources(const char* path, size_t n, uint64_t seed) {
    return guard([&] {
        require(path != nullptr, "path is null");
        require(n > 0, "n must be > 0");
        surerag::builder::write_sources(surerag::builder::make_scripted_sources(n, seed), path);
    });
}

sr_status sr_examples_read(const char* path, sr_examples** out) {
    return guard([&] {
        require(path && out, "path and out must be non-null");
        *out = nullptr;
        auto records = surerag::read_examples(path);
        *out = new sr_examples{std::move(records)};
    });
}

size_t sr_examples_count(const sr_examples* examples) { return examples ? examples->records.size() : 0; }

sr_status sr_examples_prefix_not_rate(const sr_examples* examples, double* out) {
    return guard([&] {
        require(examples && out, "examples and out must be non-null");
        *out = surerag::builder::audit_prefix_not(examples->records);
    });
}

void sr_examples_destroy(sr_examples* examples) { delete examples; }

sr_status sr_model_load(const char* path, sr_model** out) {
    return guard([&] {
        require(path && out, "path and out must be non-null");
        *out = nullptr;
        auto model = surerag::decision::SureModel::load(path);
        *out = new sr_model{std::move(model)};
    });
}

size_t sr_model_feature_count(const sr_model* model) { return model ? model->model.classifier.dim() : 0; }

sr_status sr_model_feature_name(const sr_model* model, size_t i, char* buf, size_t cap, size_t* needed) {
    return guard([&] {
        require(model != nullptr, "model is null");
        require(i < model->model.classifier.dim(), "feature index out of range");
        copy_out(model->model.classifier.feature_names[i], buf, cap, needed);
    });
}

sr_status sr_model_predict(const sr_model* model, const double* features, size_t n, int calibrated,
                           double pi_out[3]) {
    return guard([&] {
        require(model && features && pi_out, "model, features and pi_out must be non-null");
        const auto& m = model->model;
        const auto pi = surerag::decision::predict(m.classifier, std::span<const double>(features, n),
                                                   calibrated ? m.calibrated.temperature : m.raw.temperature);
        for (int i = 0; i < 3; ++i) pi_out[i] = pi[i];
    });
}

sr_status sr_model_decide(const sr_model* model, const double* features, size_t n, int calibrated,
                          sr_decision* out) {
    return guard([&] {
        require(model && features && out, "model, features and out must be non-null");
        const auto& m = model->model;
        const auto& config = calibrated ? m.calibrated : m.raw;
        const auto pi =
            surerag::decision::predict(m.classifier, std::span<const double>(features, n), config.temperature);
        const double u = surerag::decision::uncertainty_u(pi, vector_of(m.classifier, features), config.u_weights);
        fill(surerag::decision::decide("", pi, u, config), out);
    });
}

void sr_model_destroy(sr_model* model) { delete model; }

sr_status sr_decide(const double pi[3], double u, double beta, double tau, sr_decision* out) {
    return guard([&] {
        require(pi && out, "pi and out must be non-null");
        surerag::decision::SelectiveConfig config;
        config.beta = beta;
        config.tau = tau;
        surerag::decision::validate(config);
        fill(surerag::decision::decide("", {pi[0], pi[1], pi[2]}, u, config), out);
    });
}

sr_status sr_surrogate_distribution(const char* claim, const char* passage, double sharpness, double out[3]) {
    return guard([&] {
        require(claim && passage && out, "claim, passage and out must be non-null");
        require(sharpness > 0.0, "sharpness must be > 0");
        surerag::verifier::SurrogateParams params;
        params.sharpness = sharpness;
        const auto d = surerag::verifier::surrogate_distribution("", claim, passage, params);
        for (int i = 0; i < 3; ++i) out[i] = d[i];
    });
}

sr_status sr_aurc(const double* scores, const int* safe, size_t n, double* out) {
    return guard([&] {
        require(scores && safe && out, "scores, safe and out must be non-null");
        *out = surerag::metrics::aurc(std::span<const double>(scores, n), flags(safe, n));
    });
}

sr_status sr_binary_ece(const double* p_safe, const int* safe, size_t n, int bins, double* out) {
    return guard([&] {
        require(p_safe && safe && out, "p_safe, safe and out must be non-null");
        *out = surerag::metrics::binary_ece(std::span<const double>(p_safe, n), flags(safe, n), bins);
    });
}

sr_status sr_macro_f1(const int* gold, const int* pred, size_t n, double* macro, double per_class[3]) {
    return guard([&] {
        require(gold && pred && macro, "gold, pred and macro must be non-null");
        std::vector<surerag::Label> g, p;
        for (size_t i = 0; i < n; ++i) {
            g.push_back(label_of(gold[i]));
            p.push_back(label_of(pred[i]));
        }
        const auto r = surerag::metrics::macro_f1(g, p);
        *macro = r.macro;
        if (per_class)
            for (int i = 0; i < 3; ++i) per_class[i] = r.per_class[i];
    });
}

sr_status sr_artifact_ratio(double best_shortcut_macro, double model_macro, double* out) {
    return guard([&] {
        require(out != nullptr, "out is null");
        *out = surerag::diagnostics::artifact_ratio(best_shortcut_macro, model_macro).ratio;
    });
}

}  // extern "C"
