#include "surerag/pipeline.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "surerag/corpus.hpp"
#include "surerag/diagnostics.hpp"
#include "surerag/error.hpp"
#include "surerag/verifier.hpp"

namespace surerag::pipeline {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& value) {
    std::vector<std::uint64_t> out;
    for (const auto& s : kv::split_list(value)) {
        const auto v = kv::parse_int(s);
        if (v < 0) fail(ErrorCode::parse, "seed must be >= 0: '" + s + "'");
        out.push_back(static_cast<std::uint64_t>(v));
    }
    return out;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    const auto v = kv::parse_int(value);
    if (v < 0) fail(ErrorCode::parse, key + " must be >= 0");
    return static_cast<std::size_t>(v);
}

std::optional<fs::path> optional_path(const std::string& value) {
    if (value.empty()) return std::nullopt;
    return fs::path(value);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail(ErrorCode::parse, key + " must be true or false");
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
    std::string s;
    for (std::size_t i = 0; i < seeds.size(); ++i) s += (i ? "," : "") + std::to_string(seeds[i]);
    return s;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    auto& e = experiment;
    if (key == "seed") {
        const auto v = kv::parse_int(value);
        if (v < 0) fail(ErrorCode::parse, "seed must be >= 0");
        seed = static_cast<std::uint64_t>(v);
    } else if (key == "source") {
        source = optional_path(value);
    } else if (key == "examples") {
        examples = optional_path(value);
    } else if (key == "scores") {
        scores = optional_path(value);
    } else if (key == "out") {
        out = value;
    } else if (key == "split_ratios") {
        const auto r = kv::split_doubles(value);
        if (r.size() != 3) fail(ErrorCode::parse, "split_ratios needs three values");
        split_ratios = {r[0], r[1], r[2]};
    } else if (key == "evidence_k") {
        evidence_k = parse_count(key, value);
    } else if (key == "sharpness") {
        sharpness = kv::parse_double(value);
    } else if (key == "feature_mode") {
        e.feature_mode = features::parse_feature_mode(value);
    } else if (key == "pooling_k") {
        e.pooling_k = parse_count(key, value);
    } else if (key == "beta_grid") {
        e.beta_grid = kv::split_doubles(value);
    } else if (key == "tau_grid") {
        e.tau_grid = value == "auto" || value.empty() ? std::vector<double>{} : kv::split_doubles(value);
    } else if (key == "l2_lambda") {
        e.l2_lambda = kv::parse_double(value);
    } else if (key == "max_iters") {
        e.max_iters = parse_count(key, value);
    } else if (key == "ece_bins") {
        e.ece_bins = static_cast<int>(kv::parse_int(value));
    } else if (key == "coverage_points") {
        e.coverage_points = kv::split_doubles(value);
    } else if (key == "risk_points") {
        e.risk_points = value.empty() ? std::vector<double>{} : kv::split_doubles(value);
    } else if (key == "u_weights") {
        const auto w = kv::split_doubles(value);
        if (w.size() != 5) fail(ErrorCode::parse, "u_weights needs five values");
        std::copy(w.begin(), w.end(), e.u_weights.begin());
    } else if (key == "seeds") {
        seeds = parse_seeds(value);
    } else if (key == "resplit") {
        resplit = parse_bool(key, value);
    } else {
        fail(ErrorCode::invalid_argument, "unknown config key '" + key + "'");
    }
}

kv::Document RunConfig::to_kv() const {
    const auto& e = experiment;
    kv::Document d;
    d.set("seed", std::to_string(seed));
    d.set("source", source ? source->string() : "");
    d.set("examples", examples ? examples->string() : "");
    d.set("scores", scores ? scores->string() : "");
    d.set("out", out.string());
    d.set("split_ratios", kv::join_doubles({split_ratios.begin(), split_ratios.end()}));
    d.set("evidence_k", std::to_string(evidence_k));
    d.set("sharpness", kv::format_double(sharpness));
    d.set("feature_mode", std::string(features::to_string(e.feature_mode)));
    d.set("pooling_k", std::to_string(e.pooling_k));
    d.set("beta_grid", kv::join_doubles(e.beta_grid));
    d.set("tau_grid", e.tau_grid.empty() ? "auto" : kv::join_doubles(e.tau_grid));
    d.set("l2_lambda", kv::format_double(e.l2_lambda));
    d.set("max_iters", std::to_string(e.max_iters));
    d.set("ece_bins", std::to_string(e.ece_bins));
    d.set("coverage_points", kv::join_doubles(e.coverage_points));
    d.set("risk_points", kv::join_doubles(e.risk_points));
    d.set("u_weights", kv::join_doubles({e.u_weights.begin(), e.u_weights.end()}));
    d.set("seeds", join_seeds(seeds));
    d.set("resplit", resplit ? "true" : "false");
    return d;
}

RunConfig RunConfig::from_kv(const kv::Document& doc) {
    RunConfig c;
    for (const auto& [k, v] : doc.entries()) c.set(k, v);
    return c;
}

RunConfig RunConfig::load(const fs::path& path) { return from_kv(kv::Document::read(path)); }

void validate(const RunConfig& c) {
    double sum = 0.0;
    for (double r : c.split_ratios) {
        if (!(r >= 0.0)) fail(ErrorCode::invalid_argument, "split ratios must be >= 0");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-6) fail(ErrorCode::invalid_argument, "split ratios must sum to 1");
    if (!(c.sharpness > 0.0) || !std::isfinite(c.sharpness))
        fail(ErrorCode::invalid_argument, "sharpness must be > 0");
    if (c.seeds.empty()) fail(ErrorCode::invalid_argument, "seeds list is empty");
    if (c.out.empty()) fail(ErrorCode::invalid_argument, "output directory is empty");
    experiment::validate(c.experiment);
}

std::string_view to_string(Stage s) {
    switch (s) {
    case Stage::build: return "build";
    case Stage::score: return "score";
    case Stage::features: return "features";
    case Stage::train: return "train";
    case Stage::calibrate: return "calibrate";
    case Stage::tune: return "tune";
    case Stage::evaluate: return "evaluate";
    case Stage::diagnose: return "diagnose";
    }
    return "build";
}

Stage parse_stage(std::string_view s) {
    for (auto st : all_stages)
        if (to_string(st) == s) return st;
    fail(ErrorCode::invalid_argument, "unknown stage '" + std::string(s) + "'");
}

fs::path examples_path(const RunConfig& c) { return c.examples ? *c.examples : c.out / files::examples; }

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open '" + path.string() + "' for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        fail(ErrorCode::io, "sha256 initialisation failed");
    }
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

namespace {

constexpr const char* output_files[] = {
    files::examples,     files::pair_labels,     files::build_manifest,   files::scores,
    files::features,     files::model,           files::predictions,      files::metrics_text,
    files::metrics_json, files::diagnostics_text, files::diagnostics_json};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) fail(ErrorCode::io, "write failed for '" + path.string() + "'");
}

void write_manifest(const RunConfig& c, const std::string& stage) {
    kv::Document d;
    d.set("format", "surerag-manifest-v1");
    d.set("stage", stage);
    d.set("seed", std::to_string(c.seed));
    const auto config = c.to_kv();
    for (const auto& [k, v] : config.entries()) d.set("config." + k, v);
    auto hash_input = [&](const std::string& name, const std::optional<fs::path>& p) {
        if (p && fs::exists(*p)) d.set("input." + name + ".sha256", sha256_file(*p));
    };
    hash_input("source", c.source);
    hash_input("examples", c.examples);
    hash_input("scores", c.scores);
    for (const char* f : output_files)
        if (fs::exists(c.out / f)) d.set("output." + std::string(f) + ".sha256", sha256_file(c.out / f));
    d.write(c.out / files::manifest);
}

std::vector<ExampleRecord> load_blind(const RunConfig& c) {
    return experiment::redact_test_labels(read_examples(examples_path(c)));
}

ScoreMatrixSet load_matrices(const RunConfig& c, const std::vector<ExampleRecord>& examples) {
    return join_scores(examples, read_pair_scores(c.out / files::scores));
}

std::vector<std::string> stage_outputs(Stage s) {
    switch (s) {
    case Stage::build: return {files::examples, files::pair_labels, files::build_manifest};
    case Stage::score: return {files::scores};
    case Stage::features: return {files::features};
    case Stage::train:
    case Stage::calibrate:
    case Stage::tune: return {files::model};
    case Stage::evaluate: return {files::predictions, files::metrics_text, files::metrics_json};
    case Stage::diagnose: return {files::diagnostics_text, files::diagnostics_json};
    }
    return {};
}

std::string metrics_json(const std::vector<std::pair<std::string, double>>& flat) {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : flat) j[k] = v;
    return j.dump(2) + "\n";
}

void execute(const RunConfig& c, Stage stage) {
    const auto& opts = c.experiment;
    switch (stage) {
    case Stage::build: {
        if (!c.source) fail(ErrorCode::invalid_argument, "no source file configured");
        const auto sources = builder::read_sources(*c.source);
        builder::BuildOptions bo;
        bo.evidence_k = c.evidence_k;
        const auto result = builder::build_benchmark(sources, c.seed, c.split_ratios, bo);
        write_examples(result.examples, c.out / files::examples);
        write_pair_labels(result.pair_labels, c.out / files::pair_labels);
        builder::write_build_manifest(result, c.seed, c.split_ratios, c.out / files::build_manifest);
        break;
    }
    case Stage::score: {
        const auto examples = load_blind(c);
        verifier::SurrogateParams sp;
        sp.sharpness = c.sharpness;
        const auto v = c.scores ? verifier::PairVerifier::ingested(*c.scores) : verifier::PairVerifier::lexical(sp);
        write_pair_scores(verifier::score_pairs(v, examples), c.out / files::scores);
        break;
    }
    case Stage::features: {
        const auto examples = load_blind(c);
        const auto matrices = load_matrices(c, examples);
        features::write_features(experiment::compute_features(examples, matrices, opts.feature_mode),
                                 c.out / files::features);
        break;
    }
    case Stage::train: {
        const auto examples = load_blind(c);
        const auto rows = features::read_features(c.out / files::features);
        decision::SureModel model;
        model.classifier = experiment::train_stage(examples, rows, opts);
        model.raw.u_weights = opts.u_weights;
        model.calibrated.u_weights = opts.u_weights;
        model.save(c.out / files::model);
        break;
    }
    case Stage::calibrate: {
        const auto examples = load_blind(c);
        const auto rows = features::read_features(c.out / files::features);
        auto model = decision::SureModel::load(c.out / files::model);
        model.calibrated.temperature = experiment::calibrate_stage(model.classifier, examples, rows);
        model.save(c.out / files::model);
        break;
    }
    case Stage::tune: {
        const auto examples = load_blind(c);
        const auto rows = features::read_features(c.out / files::features);
        const auto model = decision::SureModel::load(c.out / files::model);
        experiment::tune_stage(model.classifier, model.calibrated.temperature, examples, rows, opts)
            .save(c.out / files::model);
        break;
    }
    case Stage::evaluate: {
        const auto examples = read_examples(examples_path(c));
        const auto rows = features::read_features(c.out / files::features);
        const auto model = decision::SureModel::load(c.out / files::model);
        const auto matrices = load_matrices(c, examples);
        write_predictions(experiment::predict(model, examples, rows, Split::test, true), c.out / files::predictions);
        const auto report = experiment::evaluate(model, examples, rows, matrices, opts);
        write_text(c.out / files::metrics_text, experiment::format_report(report));
        write_text(c.out / files::metrics_json, metrics_json(experiment::flatten(report)));
        break;
    }
    case Stage::diagnose: {
        const auto examples = read_examples(examples_path(c));
        const auto matrices = load_matrices(c, examples);
        const auto preds = read_predictions(c.out / files::predictions);
        std::vector<ExampleRecord> test;
        for (const auto& ex : examples)
            if (ex.split == Split::test) test.push_back(ex);
        std::unordered_map<std::string, Label> predicted;
        for (const auto& p : preds) predicted[p.example_id] = p.predicted_label;
        std::vector<Label> gold, pred;
        for (const auto& ex : test) {
            auto it = predicted.find(ex.example_id);
            if (it == predicted.end()) fail(ErrorCode::invariant, "no prediction for test example '" + ex.example_id + "'");
            gold.push_back(ex.label);
            pred.push_back(it->second);
        }
        const double model_macro = metrics::macro_f1(gold, pred).macro;
        const auto report = diagnostics::diagnose(examples, matrices, preds, model_macro, opts);
        write_text(c.out / files::diagnostics_text, diagnostics::format_report(report));
        write_text(c.out / files::diagnostics_json, diagnostics::to_json(report));
        break;
    }
    }
}

[[noreturn]] void rethrow_tagged(const std::string& stage) {
    try {
        throw;
    } catch (const Error& e) {
        throw Error(e.code(), "stage " + stage + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorCode::stage, "stage " + stage + ": " + e.what());
    }
}

void remove_files(const fs::path& dir, const std::vector<std::string>& names) {
    std::error_code ec;
    for (const auto& n : names) fs::remove(dir / n, ec);
}

}  // namespace

void run_stage(const RunConfig& config, Stage stage) {
    const std::string name(to_string(stage));
    try {
        validate(config);
        fs::create_directories(config.out);
    } catch (...) {
        rethrow_tagged(name);
    }
    try {
        execute(config, stage);
        write_manifest(config, name);
    } catch (...) {
        remove_files(config.out, stage_outputs(stage));
        remove_files(config.out, {files::manifest});
        rethrow_tagged(name);
    }
}

RunReport run_pipeline(const RunConfig& config) {
    std::vector<Stage> stages;
    if (config.source && !config.examples) stages.push_back(Stage::build);
    for (auto s : all_stages)
        if (s != Stage::build) stages.push_back(s);

    std::vector<std::string> written;
    for (auto s : stages) {
        try {
            run_stage(config, s);
        } catch (...) {
            remove_files(config.out, written);
            throw;
        }
        for (const auto& f : stage_outputs(s)) written.push_back(f);
    }
    write_manifest(config, "run");

    RunReport report;
    std::set<std::string> seen;
    for (const auto& f : written)
        if (seen.insert(f).second) report.outputs.push_back(config.out / f);
    report.manifest = config.out / files::manifest;
    const auto j = nlohmann::ordered_json::parse(std::ifstream(config.out / files::metrics_json));
    for (const auto& [k, v] : j.items()) report.metrics.emplace_back(k, v.get<double>());
    return report;
}

std::vector<SeedSummary> summarize_seeds(const std::vector<std::vector<std::pair<std::string, double>>>& runs) {
    if (runs.empty()) fail(ErrorCode::invalid_argument, "summarize_seeds: no runs");
    std::vector<SeedSummary> out;
    const auto& first = runs.front();
    for (std::size_t i = 0; i < first.size(); ++i) {
        double sum = 0.0;
        for (const auto& r : runs) {
            if (r.size() != first.size() || r[i].first != first[i].first)
                fail(ErrorCode::invariant, "summarize_seeds: runs report different metrics");
            sum += r[i].second;
        }
        const double n = static_cast<double>(runs.size());
        const double mean = sum / n;
        double var = 0.0;
        for (const auto& r : runs) var += (r[i].second - mean) * (r[i].second - mean);
        out.push_back({first[i].first, mean, std::sqrt(var / n)});
    }
    return out;
}

namespace {

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    // column widths count "±" as one character
    std::size_t visible = 0;
    for (unsigned char ch : s)
        if ((ch & 0xC0) != 0x80) ++visible;
    if (visible < width) s.append(width - visible, ' ');
    return s;
}

}  // namespace

std::string format_multi_seed(const std::vector<std::uint64_t>& seeds,
                              const std::vector<std::vector<std::pair<std::string, double>>>& runs) {
    const auto summary = summarize_seeds(runs);
    auto find = [&](const std::string& name) -> const SeedSummary* {
        for (const auto& s : summary)
            if (s.name == name) return &s;
        return nullptr;
    };
    std::string seed_list;
    for (std::size_t i = 0; i < seeds.size(); ++i) seed_list += (i ? ", " : "") + std::to_string(seeds[i]);

    std::string t = "Seeds: " + seed_list + "\n";
    t += "Macro-F1 is mean ± population standard deviation over seeds; per-class F1 values are means.\n\n";
    t += pad("Model", 22) + pad("n", 4) + pad("Macro-F1", 20) + pad("Supp.-F1", 10) + pad("Ref.-F1", 10) +
         "Insuff.-F1\n";
    const std::pair<const char*, const char*> models[] = {
        {"max-pool", "max_pool"},         {"mean-pool", "mean_pool"}, {"top-k pool", "top_k_pool"},
        {"SURE", "sure"},                 {"SURE calibrated", "sure_calibrated"}};
    const std::string n = std::to_string(runs.size());
    for (const auto& [label, key] : models) {
        const auto* m = find(std::string(key) + ".macro_f1");
        if (!m) continue;
        t += pad(label, 22) + pad(n, 4) + pad(fixed4(m->mean) + " ± " + fixed4(m->stddev), 20);
        const char* classes[] = {"Supported", "Refuted", "Insufficient"};
        for (int c = 0; c < 3; ++c) {
            const auto* f = find(std::string(key) + ".f1." + classes[c]);
            const std::string cell = f ? fixed4(f->mean) : "n/a";
            t += c < 2 ? pad(cell, 10) : cell;
        }
        t += "\n";
    }

    t += "\nPer-seed Macro-F1 (SURE calibrated)\n";
    for (std::size_t i = 0; i < runs.size() && i < seeds.size(); ++i)
        for (const auto& [k, v] : runs[i])
            if (k == "sure_calibrated.macro_f1") t += "  seed " + std::to_string(seeds[i]) + ": " + fixed4(v) + "\n";

    t += "\nAll metrics (mean ± population std)\n";
    for (const auto& s : summary) t += pad(s.name, 44) + fixed4(s.mean) + " ± " + fixed4(s.stddev) + "\n";
    return t;
}

fs::path multi_seed(const RunConfig& config) {
    try {
        validate(config);
    } catch (...) {
        rethrow_tagged("multi-seed");
    }
    fs::create_directories(config.out);
    std::vector<std::vector<std::pair<std::string, double>>> runs;
    kv::Document manifest;
    manifest.set("format", "surerag-manifest-v1");
    manifest.set("stage", "multi-seed");
    const auto config_kv = config.to_kv();
    for (const auto& [k, v] : config_kv.entries()) manifest.set("config." + k, v);

    for (auto seed : config.seeds) {
        RunConfig c = config;
        c.seed = seed;
        c.out = config.out / ("seed_" + std::to_string(seed));
        fs::create_directories(c.out);
        const bool builds = config.source && !config.examples;
        if (config.resplit && !builds) {
            try {
                auto examples = read_examples(examples_path(config));
                std::vector<std::string> groups;
                std::set<std::string> seen;
                for (const auto& ex : examples)
                    if (seen.insert(ex.group_id).second) groups.push_back(ex.group_id);
                const auto splits = builder::assign_splits(groups, config.split_ratios, seed);
                for (auto& ex : examples) ex.split = splits.at(ex.group_id);
                write_examples(examples, c.out / files::examples);
                c.examples = c.out / files::examples;
            } catch (...) {
                rethrow_tagged("multi-seed");
            }
        }
        runs.push_back(run_pipeline(c).metrics);
        manifest.set("seed_" + std::to_string(seed) + ".manifest.sha256", sha256_file(c.out / files::manifest));
    }
    const auto text_path = config.out / files::multi_seed_text;
    write_text(text_path, format_multi_seed(config.seeds, runs));
    nlohmann::ordered_json j;
    j["seeds"] = config.seeds;
    for (const auto& s : summarize_seeds(runs)) j["metrics"][s.name] = {{"mean", s.mean}, {"std", s.stddev}};
    write_text(config.out / files::multi_seed_json, j.dump(2) + "\n");
    manifest.set("output." + std::string(files::multi_seed_text) + ".sha256", sha256_file(text_path));
    manifest.set("output." + std::string(files::multi_seed_json) + ".sha256",
                 sha256_file(config.out / files::multi_seed_json));
    manifest.write(config.out / files::manifest);
    return text_path;
}

}  // namespace surerag::pipeline
