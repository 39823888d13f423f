// Command-line front end. Talks to the toolkit only through the C API.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "surerag/surerag.h"

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string feature_mode;
    std::optional<double> beta;
    std::optional<double> tau;
    std::string out;
    std::string scores;
    std::string source;
    std::string examples;
    std::vector<std::string> sets;
};

struct ConfigHandle {
    sr_config* ptr = nullptr;
    ~ConfigHandle() { sr_config_destroy(ptr); }
};

int report_failure(sr_status status, const std::string& context) {
    std::cerr << "error: " << context << ": " << sr_last_error() << " (" << sr_status_string(status) << ")\n";
    return static_cast<int>(status);
}

std::string to_text(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

sr_status apply(sr_config* cfg, const Options& o) {
    std::vector<std::pair<std::string, std::string>> kv;
    if (o.seed) kv.emplace_back("seed", std::to_string(*o.seed));
    if (!o.feature_mode.empty()) kv.emplace_back("feature_mode", o.feature_mode);
    if (o.beta) kv.emplace_back("beta_grid", to_text(*o.beta));
    if (o.tau) kv.emplace_back("tau_grid", to_text(*o.tau));
    if (!o.out.empty()) kv.emplace_back("out", o.out);
    if (!o.scores.empty()) kv.emplace_back("scores", o.scores);
    if (!o.source.empty()) kv.emplace_back("source", o.source);
    if (!o.examples.empty()) kv.emplace_back("examples", o.examples);
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --set expects key=value, got '" << s << "'\n";
            return SR_INVALID_ARGUMENT;
        }
        kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [k, v] : kv) {
        const auto st = sr_config_set(cfg, k.c_str(), v.c_str());
        if (st != SR_OK) return st;
    }
    return SR_OK;
}

std::string config_value(const sr_config* cfg, const char* key) {
    size_t needed = 0;
    sr_config_get(cfg, key, nullptr, 0, &needed);
    std::string buf(needed, '\0');
    sr_config_get(cfg, key, buf.data(), buf.size(), &needed);
    buf.resize(needed ? needed - 1 : 0);
    return buf;
}

void print_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return;
    std::cout << in.rdbuf();
}

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "Run config file (key = value)");
    sub->add_option("--seed", o.seed, "Run seed");
    sub->add_option("--feature-mode", o.feature_mode, "with_retrieval, no_retrieval or bm25_retrieval");
    sub->add_option("--beta", o.beta, "Fix the uncertainty penalty instead of tuning it");
    sub->add_option("--tau", o.tau, "Fix the answer threshold instead of tuning it");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--scores", o.scores, "Pair-scores file to ingest instead of the lexical surrogate");
    sub->add_option("--source", o.source, "Source-question file for the build stage");
    sub->add_option("--examples", o.examples, "Prebuilt examples file");
    sub->add_option("--set", o.sets, "Any config key as key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selective evidence-sufficiency verification: build, score, train, tune, evaluate, diagnose"};
    app.require_subcommand(1);
    app.set_version_flag("--version", sr_version());

    Options o;
    const char* stages[] = {"build", "score", "features", "train", "calibrate", "tune", "evaluate", "diagnose"};
    std::vector<CLI::App*> stage_cmds;
    for (const char* s : stages) {
        auto* sub = app.add_subcommand(s, std::string("Run the ") + s + " stage");
        add_common(sub, o);
        stage_cmds.push_back(sub);
    }
    auto* run = app.add_subcommand("run", "Run every stage in order");
    add_common(run, o);
    auto* multi = app.add_subcommand("multi-seed", "Run the pipeline for each configured seed and aggregate");
    add_common(multi, o);
    std::vector<std::uint64_t> seeds;
    multi->add_option("--seeds", seeds, "Seeds (default 13 21 42)")->delimiter(',');

    auto* synth = app.add_subcommand("synth", "Write scripted source questions");
    std::string synth_out;
    std::size_t synth_n = 60;
    std::uint64_t synth_seed = 13;
    synth->add_option("--out", synth_out, "Output source file")->required();
    synth->add_option("-n,--count", synth_n, "Number of source questions");
    synth->add_option("--seed", synth_seed, "Seed");

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        const auto st = sr_write_synthetic_sources(synth_out.c_str(), synth_n, synth_seed);
        if (st != SR_OK) return report_failure(st, "synth");
        std::cout << "wrote " << synth_n << " source questions to " << synth_out << "\n";
        return 0;
    }

    ConfigHandle cfg;
    sr_status st = o.config.empty() ? sr_config_create(&cfg.ptr) : sr_config_load(o.config.c_str(), &cfg.ptr);
    if (st != SR_OK) return report_failure(st, "config");
    st = apply(cfg.ptr, o);
    if (st == SR_OK && !seeds.empty()) {
        std::string list;
        for (std::size_t i = 0; i < seeds.size(); ++i) list += (i ? "," : "") + std::to_string(seeds[i]);
        st = sr_config_set(cfg.ptr, "seeds", list.c_str());
    }
    if (st != SR_OK) return report_failure(st, "config");
    const std::filesystem::path out = config_value(cfg.ptr, "out");

    if (run->parsed()) {
        st = sr_run_pipeline(cfg.ptr);
        if (st != SR_OK) return report_failure(st, "run");
        print_file(out / "metrics.txt");
        std::cout << "\n";
        print_file(out / "diagnostics.txt");
        std::cout << "\nmanifest: " << (out / "manifest.txt").string() << "\n";
        return 0;
    }
    if (multi->parsed()) {
        st = sr_run_multi_seed(cfg.ptr);
        if (st != SR_OK) return report_failure(st, "multi-seed");
        print_file(out / "multi_seed.txt");
        return 0;
    }
    for (std::size_t i = 0; i < stage_cmds.size(); ++i) {
        if (!stage_cmds[i]->parsed()) continue;
        st = sr_run_stage(cfg.ptr, stages[i]);
        if (st != SR_OK) return report_failure(st, stages[i]);
        const std::string name = stages[i];
        if (name == "evaluate")
            print_file(out / "metrics.txt");
        else if (name == "diagnose")
            print_file(out / "diagnostics.txt");
        else
            std::cout << "stage " << name << " done; outputs in " << out.string() << "\n";
        return 0;
    }
    return 0;
}
