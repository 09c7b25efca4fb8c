#include "dendsom/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dendsom/error.hpp"
#include "dendsom/log.hpp"

namespace dendsom {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

ModelKind parse_model_kind(std::string_view name) {
    if (name == "som") return ModelKind::som;
    if (name == "dendsom") return ModelKind::dendsom;
    throw InvalidArgument("unknown model '" + std::string(name) + "' (expected som|dendsom)");
}

std::string_view to_string(ModelKind kind) { return kind == ModelKind::som ? "som" : "dendsom"; }

ReportFormat parse_report_format(std::string_view name) {
    if (name == "csv") return ReportFormat::csv;
    if (name == "json") return ReportFormat::json;
    throw InvalidArgument("unknown report format '" + std::string(name) + "' (expected csv|json)");
}

// ---------------------------------------------------------------------------
// Settings

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::pair<std::string, std::string> split_assignment(std::string_view line) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(line) + "'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("empty key in '" + std::string(line) + "'");
    return {std::string(key), std::string(trim(line.substr(eq + 1)))};
}

}  // namespace

Settings parse_settings(std::string_view text) {
    Settings out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (!line.empty()) {
            auto [k, v] = split_assignment(line);
            out[std::move(k)] = std::move(v);
        }
        pos = end + 1;
    }
    return out;
}

Settings read_settings_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_settings(ss.str());
}

void apply_override(Settings& settings, std::string_view assignment) {
    auto [k, v] = split_assignment(assignment);
    settings[std::move(k)] = std::move(v);
}

// ---------------------------------------------------------------------------
// Config resolution

namespace {

constexpr std::array<std::string_view, 25> kKeys = {
    "dataset",   "data_dir", "model",     "bmu",        "units",     "patch",
    "stride",    "alpha0",   "sigma0",    "lambda",     "alpha_crit", "r_exp",
    "scenario",  "trials",   "seed",      "output",     "workers",   "kernel",
    "smoothing", "grayscale", "task_il_normalization", "curves", "exclude_unseen", "max_train", "max_test"};

struct DatasetDefaults {
    double sigma0;
    std::size_t units;
    std::size_t patch;
    std::size_t stride;
    std::size_t som_units;
};

DatasetDefaults defaults_for(DatasetId id) {
    switch (id) {
        case DatasetId::mnist: return {4.0, 8, 10, 3, 21};
        case DatasetId::fashion: return {5.0, 10, 8, 4, 18};
        case DatasetId::cifar10: return {6.0, 12, 4, 2, 29};
    }
    return {4.0, 8, 10, 3, 21};
}

std::size_t image_side(DatasetId id) { return id == DatasetId::cifar10 ? 32 : 28; }

std::string format_real(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_real(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
    return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError("'" + std::string(key) + "' expects a non-negative integer, got '" + std::string(v) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("'" + std::string(key) + "' expects true|false, got '" + std::string(v) + "'");
}

ScoreNormalization parse_normalization(std::string_view v) {
    if (v == "global") return ScoreNormalization::global;
    if (v == "candidates") return ScoreNormalization::candidates;
    throw ConfigError("'task_il_normalization' expects global|candidates, got '" + std::string(v) + "'");
}

std::string_view to_string(ScoreNormalization n) {
    return n == ScoreNormalization::global ? "global" : "candidates";
}

// "8" or "8x8"
std::pair<std::size_t, std::size_t> parse_units(std::string_view v) {
    const auto x = v.find('x');
    if (x == std::string_view::npos) {
        const auto n = parse_uint("units", v);
        return {n, n};
    }
    return {parse_uint("units", v.substr(0, x)), parse_uint("units", v.substr(x + 1))};
}

// Rethrows library parse errors as ConfigError naming the key.
template <class F>
auto as_config(std::string_view key, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("'" + std::string(key) + "': " + e.what());
    }
}

}  // namespace

std::span<const std::string_view> config_keys() { return kKeys; }

ExperimentConfig resolve_config(const Settings& settings) {
    for (const auto& [k, v] : settings)
        if (std::find(kKeys.begin(), kKeys.end(), k) == kKeys.end())
            throw ConfigError("unknown config key '" + k + "'");

    auto get = [&](std::string_view key) -> const std::string* {
        const auto it = settings.find(key);
        return it == settings.end() ? nullptr : &it->second;
    };

    ExperimentConfig c;
    if (auto v = get("dataset")) c.dataset = as_config("dataset", [&] { return parse_dataset(*v); });
    if (auto v = get("model")) c.model = as_config("model", [&] { return parse_model_kind(*v); });
    if (auto v = get("scenario")) c.scenario = as_config("scenario", [&] { return parse_scenario(*v); });

    const auto d = defaults_for(c.dataset);
    c.unit_rows = c.unit_cols = c.model == ModelKind::som ? d.som_units : d.units;
    c.patch = d.patch;
    c.stride = d.stride;
    c.sigma0 = d.sigma0;

    if (auto v = get("data_dir")) c.data_dir = *v;
    if (auto v = get("bmu")) c.bmu = as_config("bmu", [&] { return parse_bmu_rule(*v); });
    if (auto v = get("units")) std::tie(c.unit_rows, c.unit_cols) = parse_units(*v);
    if (auto v = get("patch")) c.patch = parse_uint("patch", *v);
    if (auto v = get("stride")) c.stride = parse_uint("stride", *v);
    if (auto v = get("alpha0")) c.alpha0 = parse_real("alpha0", *v);
    if (auto v = get("sigma0")) {
        if (*v == "auto")
            c.sigma0.reset();
        else
            c.sigma0 = parse_real("sigma0", *v);
    }
    if (auto v = get("lambda")) c.lambda = parse_real("lambda", *v);
    if (auto v = get("alpha_crit")) c.alpha_crit = parse_real("alpha_crit", *v);
    if (auto v = get("r_exp"); v && *v != "auto") {
        const auto r = parse_uint("r_exp", *v);
        if (r == 0 || r > UINT32_MAX) throw ConfigError("'r_exp' must be a positive integer");
        c.r_exp = static_cast<std::uint32_t>(r);
    }
    if (auto v = get("trials")) c.trials = parse_uint("trials", *v);
    if (auto v = get("seed")) c.seed = parse_uint("seed", *v);
    if (auto v = get("output")) c.output_dir = *v;
    if (auto v = get("workers")) c.workers = parse_uint("workers", *v);
    if (auto v = get("kernel")) c.kernel = as_config("kernel", [&] { return parse_kernel(*v); });
    if (auto v = get("smoothing")) c.smoothing = parse_real("smoothing", *v);
    if (auto v = get("grayscale")) c.grayscale = as_config("grayscale", [&] { return parse_grayscale(*v); });
    if (auto v = get("task_il_normalization")) c.task_il_normalization = parse_normalization(*v);
    if (auto v = get("curves")) c.curves = parse_bool("curves", *v);
    if (auto v = get("exclude_unseen")) c.exclude_unseen = parse_bool("exclude_unseen", *v);
    if (auto v = get("max_train")) c.max_train = parse_uint("max_train", *v);
    if (auto v = get("max_test")) c.max_test = parse_uint("max_test", *v);

    if (c.unit_rows == 0 || c.unit_cols == 0) throw ConfigError("'units' must be positive");
    if (c.trials == 0) throw ConfigError("'trials' must be positive");
    if (c.workers == 0) throw ConfigError("'workers' must be positive");
    if (!(c.smoothing > 0.0)) throw ConfigError("'smoothing' must be positive");
    if (c.sigma0 && !(*c.sigma0 > 0.0)) throw ConfigError("'sigma0' must be positive");
    if (c.model == ModelKind::dendsom) {
        const std::size_t side = image_side(c.dataset);
        if (c.patch == 0 || c.patch > side)
            throw ConfigError("'patch' must lie in [1, " + std::to_string(side) + "]");
        if (c.stride == 0) throw ConfigError("'stride' must be positive");
    }
    // schedule validation (alpha0, lambda, alpha_crit)
    as_config("schedule", [&] {
        ScheduleParams p;
        p.alpha0 = c.alpha0;
        p.sigma0 = c.resolved_sigma0();
        p.lambda = c.lambda;
        p.alpha_crit = c.alpha_crit;
        p.r_exp = c.resolved_r_exp();
        return DecaySchedule(p);
    });
    return c;
}

double ExperimentConfig::resolved_sigma0() const {
    return sigma0 ? *sigma0 : auto_sigma0(unit_rows, unit_cols);
}

std::uint32_t ExperimentConfig::resolved_r_exp() const {
    if (r_exp) return *r_exp;
    return scenario == Scenario::classification ? 1 : 2;
}

ModelSpec ExperimentConfig::model_spec(std::size_t image_rows, std::size_t image_cols,
                                       std::size_t n_labels) const {
    ModelSpec spec;
    if (model == ModelKind::som)
        spec.tiling = {image_rows, image_cols, image_rows, image_cols, 1, 1};
    else
        spec.tiling = {image_rows, image_cols, patch, patch, stride, stride};
    spec.tiling.validate();
    spec.unit_rows = unit_rows;
    spec.unit_cols = unit_cols;
    spec.schedule.alpha0 = alpha0;
    spec.schedule.sigma0 = resolved_sigma0();
    spec.schedule.lambda = lambda;
    spec.schedule.alpha_crit = alpha_crit;
    spec.schedule.r_exp = resolved_r_exp();
    spec.n_labels = n_labels;
    spec.bmu = bmu;
    spec.kernel = kernel;
    return spec;
}

Settings ExperimentConfig::to_settings() const {
    Settings s;
    s["dataset"] = to_string(dataset);
    s["data_dir"] = data_dir.string();
    s["model"] = to_string(model);
    s["bmu"] = to_string(bmu);
    s["units"] = std::to_string(unit_rows) + "x" + std::to_string(unit_cols);
    s["patch"] = std::to_string(patch);
    s["stride"] = std::to_string(stride);
    s["alpha0"] = format_real(alpha0);
    s["sigma0"] = sigma0 ? format_real(*sigma0) : "auto";
    s["lambda"] = format_real(lambda);
    s["alpha_crit"] = format_real(alpha_crit);
    s["r_exp"] = r_exp ? std::to_string(*r_exp) : "auto";
    s["scenario"] = to_string(scenario);
    s["trials"] = std::to_string(trials);
    s["seed"] = std::to_string(seed);
    s["output"] = output_dir.string();
    s["workers"] = std::to_string(workers);
    s["kernel"] = to_string(kernel);
    s["smoothing"] = format_real(smoothing);
    s["grayscale"] = to_string(grayscale);
    s["task_il_normalization"] = to_string(task_il_normalization);
    s["curves"] = curves ? "true" : "false";
    s["exclude_unseen"] = exclude_unseen ? "true" : "false";
    s["max_train"] = std::to_string(max_train);
    s["max_test"] = std::to_string(max_test);
    return s;
}

std::string ExperimentConfig::to_text() const {
    const auto s = to_settings();
    std::string out;
    for (auto k : kKeys) {
        out += k;
        out += " = ";
        out += s.find(k)->second;
        out += '\n';
    }
    return out;
}

std::string ExperimentConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_text()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig ExperimentConfig::with(std::string_view key, std::string_view value) const {
    auto s = to_settings();
    s[std::string(key)] = std::string(value);
    return resolve_config(s);
}

// ---------------------------------------------------------------------------
// Statistics

double mean_of(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<double> TrialReport::accuracies() const {
    std::vector<double> out;
    for (const auto& t : trials) out.push_back(t.accuracy);
    return out;
}

namespace {

void finalize(TrialReport& report) {
    const auto acc = report.accuracies();
    report.mean = mean_of(acc);
    report.stddev = sample_stddev(acc);
}

}  // namespace

// ---------------------------------------------------------------------------
// Running

namespace {

LabeledDataset head(const LabeledDataset& data, std::size_t n) {
    if (n == 0 || n >= data.size()) return data;
    const auto px = data.pixels().first(n * data.image_size());
    const auto lb = data.labels().first(n);
    return LabeledDataset(data.name(), data.split(), data.rows(), data.cols(),
                          std::vector<double>(px.begin(), px.end()), std::vector<int>(lb.begin(), lb.end()),
                          data.n_labels());
}

TrialRecord run_trial(const ExperimentConfig& config, const LabeledDataset& train, const LabeledDataset& test,
                      std::size_t j) {
    TrialRecord rec;
    rec.trial = j;
    rec.seed = config.seed + j;
    const auto start = std::chrono::steady_clock::now();

    const ModelFactory factory = [&](std::size_t n_labels) {
        return DendSomModel::create(config.model_spec(train.rows(), train.cols(), n_labels), rec.seed);
    };
    ScenarioOptions opts;
    opts.seed = rec.seed;
    opts.predict.smoothing = config.smoothing;
    opts.predict.exclude_unseen = config.exclude_unseen;
    if (config.max_train > 0) opts.max_train_per_task = config.max_train;
    opts.track_curves = config.curves;

    if (config.scenario == Scenario::classification) {
        rec.result = run_classification(factory, SampleView(train), SampleView(test), opts);
    } else {
        if (config.scenario == Scenario::task_il) opts.predict.normalization = config.task_il_normalization;
        const auto train_tasks = make_split(train);
        const auto test_tasks = make_split(test);
        rec.result = run_scenario(factory, train_tasks, config.scenario, test_tasks, opts);
    }
    rec.accuracy = rec.result.final_accuracy;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

}  // namespace

TrialReport run_experiment(const ExperimentConfig& config, const TrialCallback& on_trial) {
    // load both splits before any training so missing files fail fast
    const auto train = load_dataset(config.dataset, Split::train, config.data_dir, config.grayscale);
    const auto test = load_dataset(config.dataset, Split::test, config.data_dir, config.grayscale);
    return run_experiment(config, train, test, on_trial);
}

TrialReport run_experiment(const ExperimentConfig& config, const LabeledDataset& train_full,
                           const LabeledDataset& test_full, const TrialCallback& on_trial) {
    if (train_full.rows() != test_full.rows() || train_full.cols() != test_full.cols())
        throw DimensionError("train and test images differ in size");
    const LabeledDataset test = head(test_full, config.max_test);
    config.model_spec(train_full.rows(), train_full.cols(), 10).tiling.validate();

    TrialReport report;
    report.config = config;
    report.config_hash = config.hash();
    report.trials.resize(config.trials);

    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= config.trials) return;
            {
                std::lock_guard lock(mu);
                if (failure) return;
            }
            try {
                auto rec = run_trial(config, train_full, test, j);
                std::lock_guard lock(mu);
                report.trials[j] = rec;
                if (on_trial) on_trial(rec);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const std::size_t n_workers = std::min(config.workers, config.trials);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    finalize(report);
    return report;
}

namespace {

constexpr std::array<std::string_view, 6> kSweepParams = {"alpha0",     "alpha_crit",     "r_exp",
                                                          "patch_size", "units_per_map", "lambda"};

}  // namespace

std::span<const std::string_view> sweep_parameters() { return kSweepParams; }

std::string_view sweep_key(std::string_view parameter) {
    if (parameter == "patch_size") return "patch";
    if (parameter == "units_per_map") return "units";
    if (std::find(kSweepParams.begin(), kSweepParams.end(), parameter) != kSweepParams.end()) return parameter;
    throw ConfigError("unknown sweep parameter '" + std::string(parameter) +
                      "' (expected alpha0|alpha_crit|r_exp|patch_size|units_per_map|lambda)");
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& config, std::string_view parameter,
                                  std::span<const std::string> values, const TrialCallback& on_trial) {
    sweep_key(parameter);
    const auto train = load_dataset(config.dataset, Split::train, config.data_dir, config.grayscale);
    const auto test = load_dataset(config.dataset, Split::test, config.data_dir, config.grayscale);
    return run_sweep(config, parameter, values, train, test, on_trial);
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& config, std::string_view parameter,
                                  std::span<const std::string> values, const LabeledDataset& train,
                                  const LabeledDataset& test, const TrialCallback& on_trial) {
    const auto key = sweep_key(parameter);
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    // resolve every point first so a bad value fails before any training
    std::vector<ExperimentConfig> configs;
    for (const auto& v : values) configs.push_back(config.with(key, v));
    std::vector<SweepPoint> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        log::info("sweep " + std::string(parameter) + " = " + values[i]);
        out.push_back({values[i], run_experiment(configs[i], train, test, on_trial)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Emission

namespace {

std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void config_comments(std::string& out, const ExperimentConfig& config) {
    const auto s = config.to_settings();
    for (auto k : kKeys) {
        out += "# ";
        out += k;
        out += " = ";
        out += s.find(k)->second;
        out += '\n';
    }
    out += "# config_hash = " + config.hash() + "\n";
}

ojson result_json(const ScenarioResult& r) {
    ojson j;
    j["scenario"] = to_string(r.scenario);
    j["per_task_accuracy"] = r.per_task_accuracy;
    j["accuracy_after_each_task"] = r.accuracy_after_each_task;
    j["final_accuracy"] = r.final_accuracy;
    return j;
}

ScenarioResult result_from_json(const ojson& j) {
    ScenarioResult r;
    r.scenario = parse_scenario(j.at("scenario").get<std::string>());
    r.per_task_accuracy = j.at("per_task_accuracy").get<std::vector<double>>();
    r.accuracy_after_each_task = j.at("accuracy_after_each_task").get<std::vector<std::vector<double>>>();
    r.final_accuracy = j.at("final_accuracy").get<double>();
    return r;
}

std::string report_json(const TrialReport& report) {
    const auto& c = report.config;
    ojson j;
    ojson cfg = ojson::object();
    const auto s = c.to_settings();
    for (auto k : kKeys) cfg[std::string(k)] = s.find(k)->second;
    j["config"] = cfg;
    j["config_hash"] = report.config_hash;
    j["resolved"] = {{"sigma0", c.resolved_sigma0()},
                     {"r_exp", c.resolved_r_exp()},
                     {"iter_crit", iter_crit(c.alpha0, c.alpha_crit, c.lambda)}};
    ojson trials = ojson::array();
    for (const auto& t : report.trials) {
        ojson tj;
        tj["trial"] = t.trial;
        tj["seed"] = t.seed;
        tj["accuracy"] = t.accuracy;
        tj["seconds"] = t.seconds;
        tj["result"] = result_json(t.result);
        trials.push_back(std::move(tj));
    }
    j["trials"] = std::move(trials);
    j["mean"] = report.mean;
    j["std"] = report.stddev;
    return j.dump(2) + "\n";
}

std::string report_csv(const TrialReport& report) {
    std::string out;
    config_comments(out, report.config);
    out += "trial,seed,accuracy,seconds\n";
    for (const auto& t : report.trials)
        out += std::to_string(t.trial) + "," + std::to_string(t.seed) + "," + exact(t.accuracy) + "," +
               exact(t.seconds) + "\n";
    return out;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    for (;;) {
        const auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? line.size() - pos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

TrialReport parse_csv_report(std::string_view text) {
    std::string comments;
    std::vector<std::string_view> rows;
    std::string hash;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto body = trim(line.substr(1));
            if (body.starts_with("config_hash")) {
                hash = std::string(trim(body.substr(body.find('=') + 1)));
                continue;
            }
            comments += body;
            comments += '\n';
        } else {
            rows.push_back(line);
        }
    }
    if (rows.empty() || rows.front() != "trial,seed,accuracy,seconds")
        throw InvalidArgument("report CSV lacks the header 'trial,seed,accuracy,seconds'");

    TrialReport report;
    report.config = resolve_config(parse_settings(comments));
    report.config_hash = hash.empty() ? report.config.hash() : hash;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = split_csv(rows[i]);
        if (f.size() != 4) throw InvalidArgument("report CSV row " + std::to_string(i) + " has " +
                                                 std::to_string(f.size()) + " fields, expected 4");
        TrialRecord t;
        t.trial = parse_uint("trial", f[0]);
        t.seed = parse_uint("seed", f[1]);
        t.accuracy = parse_real("accuracy", f[2]);
        t.seconds = parse_real("seconds", f[3]);
        t.result.scenario = report.config.scenario;
        t.result.final_accuracy = t.accuracy;
        report.trials.push_back(std::move(t));
    }
    finalize(report);
    return report;
}

TrialReport parse_json_report(std::string_view text) {
    const auto j = ojson::parse(text);
    Settings s;
    for (const auto& [k, v] : j.at("config").items()) s[k] = v.get<std::string>();
    TrialReport report;
    report.config = resolve_config(s);
    report.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& tj : j.at("trials")) {
        TrialRecord t;
        t.trial = tj.at("trial").get<std::size_t>();
        t.seed = tj.at("seed").get<std::uint64_t>();
        t.accuracy = tj.at("accuracy").get<double>();
        t.seconds = tj.at("seconds").get<double>();
        t.result = result_from_json(tj.at("result"));
        report.trials.push_back(std::move(t));
    }
    report.mean = j.at("mean").get<double>();
    report.stddev = j.at("std").get<double>();
    return report;
}

}  // namespace

std::string format_report(const TrialReport& report, ReportFormat format) {
    return format == ReportFormat::json ? report_json(report) : report_csv(report);
}

void write_text(const fs::path& path, std::string_view text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void emit_results(const TrialReport& report, ReportFormat format, const fs::path& path) {
    write_text(path, format_report(report, format));
}

TrialReport parse_report(std::string_view text, ReportFormat format) {
    try {
        return format == ReportFormat::json ? parse_json_report(text) : parse_csv_report(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed report JSON: ") + e.what());
    }
}

TrialReport read_report(const fs::path& path, ReportFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_report(ss.str(), format);
}

std::string format_curves_csv(const ExperimentConfig& config, const TrialRecord& trial) {
    std::string out;
    config_comments(out, config);
    out += "# trial = " + std::to_string(trial.trial) + "\n# trial_seed = " + std::to_string(trial.seed) + "\n";
    out += "trained_through_task,eval_task,accuracy\n";
    const auto& rows = trial.result.accuracy_after_each_task;
    // without tracked curves only the final row exists
    const std::size_t offset = trial.result.per_task_accuracy.size() - rows.size();
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            out += std::to_string(r + offset) + "," + std::to_string(c) + "," + exact(rows[r][c]) + "\n";
    return out;
}

std::string format_sweep_csv(const ExperimentConfig& config, std::string_view parameter,
                             std::span<const SweepPoint> points) {
    std::string out;
    config_comments(out, config);
    out += "# sweep = " + std::string(parameter) + "\n";
    out += std::string(parameter) + ",mean,std\n";
    for (const auto& p : points) out += p.value + "," + exact(p.report.mean) + "," + exact(p.report.stddev) + "\n";
    return out;
}

}  // namespace dendsom
