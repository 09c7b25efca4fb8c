// dendsom: train, evaluate and run experiments from the command line.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dendsom/error.hpp"
#include "dendsom/experiment.hpp"
#include "dendsom/log.hpp"
#include "dendsom/random.hpp"
#include "dendsom/snapshot.hpp"
#include "fetch.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace dendsom;

namespace {

// Config file plus overrides; the named flags are shorthands for --set.
struct ConfigArgs {
    std::string file;
    std::vector<std::string> sets;
    std::string dataset, model, bmu, scenario, data_dir, output;
    std::string trials, seed, workers;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", file, "Key=value config file")->check(CLI::ExistingFile);
        app->add_option("-s,--set", sets, "Override one key (key=value); repeatable");
        app->add_option("--dataset", dataset, "mnist|fashion|cifar10");
        app->add_option("--model", model, "som|dendsom");
        app->add_option("--bmu", bmu, "euclidean|cosine");
        app->add_option("--scenario", scenario, "classification|task-il|domain-il|class-il");
        app->add_option("--data-dir", data_dir, "Dataset root");
        app->add_option("--output", output, "Output directory");
        app->add_option("--trials", trials, "Number of trials");
        app->add_option("--seed", seed, "Base seed");
        app->add_option("--workers", workers, "Parallel trials");
    }

    ExperimentConfig resolve() const {
        Settings s;
        if (!file.empty()) s = read_settings_file(file);
        auto put = [&](const char* key, const std::string& v) {
            if (!v.empty()) s[key] = v;
        };
        put("dataset", dataset);
        put("model", model);
        put("bmu", bmu);
        put("scenario", scenario);
        put("data_dir", data_dir);
        put("output", output);
        put("trials", trials);
        put("seed", seed);
        put("workers", workers);
        for (const auto& a : sets) apply_override(s, a);
        if (!s.count("data_dir"))
            if (const char* env = std::getenv("DENDSOM_DATA_DIR")) s["data_dir"] = env;
        return resolve_config(s);
    }
};

std::string report_stem(const ExperimentConfig& c) {
    return std::string(to_string(c.dataset)) + "-" + std::string(to_string(c.model)) + "-" +
           std::string(to_string(c.bmu)) + "-" + std::string(to_string(c.scenario)) + "-" + c.hash();
}

void print_trial(const TrialRecord& t) {
    json j;
    j["trial"] = t.trial;
    j["seed"] = t.seed;
    j["accuracy"] = t.accuracy;
    j["seconds"] = t.seconds;
    std::cerr << j.dump() << std::endl;
}

int cmd_train(const ConfigArgs& args, const std::string& out) {
    const auto config = args.resolve();
    const auto train = load_dataset(config.dataset, Split::train, config.data_dir, config.grayscale);
    auto model = DendSomModel::create(config.model_spec(train.rows(), train.cols(),
                                                        static_cast<std::size_t>(train.n_labels())),
                                      config.seed);
    const SampleView stream = SampleView(train).shuffled(Rng::derive(config.seed, 999));
    const std::size_t n = config.max_train > 0 ? std::min(config.max_train, stream.size()) : stream.size();
    fit(model, stream, n);
    const fs::path path = out.empty() ? config.output_dir / (report_stem(config) + ".model") : fs::path(out);
    save_model(model, path);
    json j;
    j["model"] = path.string();
    j["samples"] = n;
    j["soms"] = model.som_count();
    j["config_hash"] = config.hash();
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_eval(const ConfigArgs& args, const std::string& model_path, const std::string& predictions,
             const std::string& format) {
    const auto config = args.resolve();
    const auto model = load_model(model_path);
    const auto test = load_dataset(config.dataset, Split::test, config.data_dir, config.grayscale);
    const std::size_t n = config.max_test > 0 ? std::min(config.max_test, test.size()) : test.size();
    const auto candidates = all_labels(model.n_labels());
    PredictOptions opts;
    opts.smoothing = config.smoothing;

    std::ofstream out;
    const bool as_json = parse_report_format(format) == ReportFormat::json;
    if (!predictions.empty()) {
        if (fs::path(predictions).has_parent_path()) fs::create_directories(fs::path(predictions).parent_path());
        out.open(predictions, std::ios::trunc);
        if (!out) throw IoError("cannot write '" + predictions + "'");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = predict(model, test.image(i), candidates, opts);
        if (p.label == test.label(i)) ++correct;
        if (!out.is_open()) continue;
        const auto rec = make_record(i, test.label(i), p, candidates);
        if (as_json) {
            out << (i == 0 ? "[\n" : ",\n") << to_json(rec);
        } else {
            if (i == 0) out << csv_header(rec) << "\n";
            out << to_csv_row(rec) << "\n";
        }
    }
    if (out.is_open() && as_json) out << (n == 0 ? "[]\n" : "\n]\n");
    json j;
    j["accuracy"] = n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
    j["samples"] = n;
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_scenario(const ConfigArgs& args, const std::string& format, const std::string& out) {
    const auto config = args.resolve();
    const auto fmt = parse_report_format(format);
    const auto report = run_experiment(config, print_trial);
    const std::string stem = report_stem(config);
    const fs::path path = out.empty() ? config.output_dir / (stem + "." + format) : fs::path(out);
    emit_results(report, fmt, path);
    if (config.scenario != Scenario::classification && config.curves)
        for (const auto& t : report.trials)
            write_text(path.parent_path() / (stem + "-curves-trial" + std::to_string(t.trial) + ".csv"),
                       format_curves_csv(config, t));
    json j;
    j["report"] = path.string();
    j["mean"] = report.mean;
    j["std"] = report.stddev;
    j["trials"] = report.trials.size();
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_sweep(const ConfigArgs& args, const std::string& param, const std::vector<std::string>& values,
              const std::string& out) {
    const auto config = args.resolve();
    const auto points = run_sweep(config, param, values, print_trial);
    const fs::path path =
        out.empty() ? config.output_dir / (report_stem(config) + "-sweep-" + param + ".csv") : fs::path(out);
    write_text(path, format_sweep_csv(config, param, points));
    for (const auto& p : points)
        emit_results(p.report, ReportFormat::json,
                     path.parent_path() / (report_stem(p.report.config) + ".json"));
    json j;
    j["sweep"] = path.string();
    json rows = json::array();
    for (const auto& p : points) rows.push_back({{"value", p.value}, {"mean", p.report.mean}, {"std", p.report.stddev}});
    j["points"] = rows;
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_fetch(const std::vector<std::string>& datasets, const std::string& data_dir, const std::string& base_url,
              const std::string& manifest, bool overwrite) {
    fetch::FetchOptions opts;
    opts.data_dir = data_dir;
    opts.base_url = base_url;
    opts.overwrite = overwrite;
    if (!manifest.empty()) {
        std::ifstream in(manifest);
        if (!in) throw IoError("cannot open manifest '" + manifest + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        opts.manifest = fetch::parse_manifest(ss.str());
    }
    json j = json::object();
    for (const auto& name : datasets) {
        const auto id = parse_dataset(name);
        const auto r = fetch::fetch_dataset(id, opts);
        json d;
        d["written"] = json::array();
        for (const auto& p : r.written) d["written"].push_back(p.string());
        d["skipped"] = json::array();
        for (const auto& p : r.skipped) d["skipped"].push_back(p.string());
        j[std::string(to_string(id))] = d;
    }
    std::cout << j.dump() << "\n";
    return 0;
}

int fail(const std::string& kind, const std::string& message, int code) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dendritic self-organizing maps: training, evaluation and experiments"};
    app.require_subcommand(1);
    std::string log_level = "warning";
    app.add_option("--log-level", log_level, "debug|info|warning|error|off");

    ConfigArgs train_args, eval_args, scenario_args, sweep_args;

    auto* train = app.add_subcommand("train", "Train one model and save a snapshot");
    train_args.attach(train);
    std::string train_out;
    train->add_option("-o,--out", train_out, "Snapshot path");

    auto* eval = app.add_subcommand("eval", "Evaluate a snapshot on the test split");
    eval_args.attach(eval);
    std::string model_path, predictions, pred_format = "csv";
    eval->add_option("-m,--model-file", model_path, "Snapshot path")->required()->check(CLI::ExistingFile);
    eval->add_option("-p,--predictions", predictions, "Write per-sample predictions here");
    eval->add_option("-f,--format", pred_format, "csv|json");

    auto* scenario = app.add_subcommand("scenario", "Run every trial of an experiment");
    scenario_args.attach(scenario);
    std::string report_format = "json", report_out;
    scenario->add_option("-f,--format", report_format, "csv|json");
    scenario->add_option("-o,--out", report_out, "Report path");

    auto* sweep = app.add_subcommand("sweep", "Run an experiment for each value of one parameter");
    sweep_args.attach(sweep);
    std::string param, sweep_out;
    std::vector<std::string> values;
    sweep->add_option("-P,--param", param, "alpha0|alpha_crit|r_exp|patch_size|units_per_map|lambda")->required();
    sweep->add_option("-V,--values", values, "Comma-separated values")->required()->delimiter(',');
    sweep->add_option("-o,--out", sweep_out, "Sweep CSV path");

    auto* fetch_cmd = app.add_subcommand("fetch-data", "Download and verify datasets");
    std::vector<std::string> datasets{"mnist", "fashion", "cifar10"};
    std::string fetch_dir = "data", base_url, manifest;
    bool overwrite = false;
    fetch_cmd->add_option("datasets", datasets, "Datasets to fetch");
    fetch_cmd->add_option("--data-dir", fetch_dir, "Destination root");
    fetch_cmd->add_option("--base-url", base_url, "Alternative host (http, https or file URL)");
    fetch_cmd->add_option("--manifest", manifest, "Extra '<sha256>  <file>' pins")->check(CLI::ExistingFile);
    fetch_cmd->add_flag("--overwrite", overwrite, "Replace existing files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    try {
        if (log_level == "debug") log::set_level(log::Level::debug);
        else if (log_level == "info") log::set_level(log::Level::info);
        else if (log_level == "warning") log::set_level(log::Level::warning);
        else if (log_level == "error") log::set_level(log::Level::error);
        else if (log_level == "off") log::set_level(log::Level::off);
        else throw ConfigError("unknown log level '" + log_level + "'");

        if (*train) return cmd_train(train_args, train_out);
        if (*eval) return cmd_eval(eval_args, model_path, predictions, pred_format);
        if (*scenario) return cmd_scenario(scenario_args, report_format, report_out);
        if (*sweep) return cmd_sweep(sweep_args, param, values, sweep_out);
        if (*fetch_cmd) return cmd_fetch(datasets, fetch_dir, base_url, manifest, overwrite);
    } catch (const Error& e) {
        return fail(e.kind(), e.what(), 1);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
    return 0;
}
