#pragma once

// Staged, file-based runs: build -> score -> features -> train -> calibrate
// -> tune -> evaluate -> diagnose, each reading and writing files in one
// output directory, plus multi-seed aggregation. Every stage rewrites
// manifest.txt with the config echo and SHA-256 hashes of inputs and outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "surerag/builder.hpp"
#include "surerag/experiment.hpp"
#include "surerag/kv.hpp"

namespace surerag::pipeline {

struct RunConfig {
    std::uint64_t seed = 13;
    std::optional<std::filesystem::path> source;    // source questions, enables the build stage
    std::optional<std::filesystem::path> examples;  // prebuilt examples; default <out>/examples.jsonl
    std::optional<std::filesystem::path> scores;    // pair scores to ingest; default lexical surrogate
    std::filesystem::path out = "run";
    builder::SplitRatios split_ratios = {0.7, 0.15, 0.15};
    std::size_t evidence_k = 0;
    double sharpness = 4.0;
    experiment::ExperimentOptions experiment;
    std::vector<std::uint64_t> seeds = {13, 21, 42};
    // multi-seed only: reassign group splits per seed when examples are given
    bool resplit = false;

    // Applies one "key = value" setting. Throws invalid_argument for unknown
    // keys and parse for malformed values.
    void set(const std::string& key, const std::string& value);
    kv::Document to_kv() const;
    static RunConfig from_kv(const kv::Document& doc);
    static RunConfig load(const std::filesystem::path& path);
};

void validate(const RunConfig& c);

enum class Stage { build, score, features, train, calibrate, tune, evaluate, diagnose };
inline constexpr Stage all_stages[] = {Stage::build, Stage::score,     Stage::features, Stage::train,
                                       Stage::calibrate, Stage::tune, Stage::evaluate, Stage::diagnose};
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

// File names inside the output directory.
namespace files {
inline constexpr const char* examples = "examples.jsonl";
inline constexpr const char* pair_labels = "pair_labels.jsonl";
inline constexpr const char* build_manifest = "build_manifest.txt";
inline constexpr const char* scores = "scores.jsonl";
inline constexpr const char* features = "features.jsonl";
inline constexpr const char* model = "model.txt";
inline constexpr const char* predictions = "predictions.jsonl";
inline constexpr const char* metrics_text = "metrics.txt";
inline constexpr const char* metrics_json = "metrics.json";
inline constexpr const char* diagnostics_text = "diagnostics.txt";
inline constexpr const char* diagnostics_json = "diagnostics.json";
inline constexpr const char* manifest = "manifest.txt";
inline constexpr const char* multi_seed_text = "multi_seed.txt";
inline constexpr const char* multi_seed_json = "multi_seed.json";
}  // namespace files

std::filesystem::path examples_path(const RunConfig& c);

// Runs one stage. Errors are rethrown with the stage name prefixed, after
// the files the stage was writing are removed.
void run_stage(const RunConfig& config, Stage stage);

struct RunReport {
    std::vector<std::filesystem::path> outputs;
    std::filesystem::path manifest;
    std::vector<std::pair<std::string, double>> metrics;
};

// Builds when a source is configured and no examples path is, then runs
// every remaining stage in order.
RunReport run_pipeline(const RunConfig& config);

struct SeedSummary {
    std::string name;
    double mean = 0.0;
    double stddev = 0.0;  // population
};

// Mean and population standard deviation of each metric over runs; every
// run must report the same metric names in the same order.
std::vector<SeedSummary> summarize_seeds(const std::vector<std::vector<std::pair<std::string, double>>>& runs);

std::string format_multi_seed(const std::vector<std::uint64_t>& seeds,
                              const std::vector<std::vector<std::pair<std::string, double>>>& runs);

// Runs the pipeline once per configured seed under <out>/seed_<n> and writes
// multi_seed.txt and multi_seed.json. Returns the text report path.
std::filesystem::path multi_seed(const RunConfig& config);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace surerag::pipeline
