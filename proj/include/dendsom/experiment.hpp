#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dendsom/datasets.hpp"
#include "dendsom/model.hpp"
#include "dendsom/pmi.hpp"
#include "dendsom/protocols.hpp"

namespace dendsom {

enum class ModelKind { som, dendsom };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);

/// Raw key/value settings as read from a config file and `--set` overrides.
using Settings = std::map<std::string, std::string, std::less<>>;

/// Parses "key = value" lines; '#' starts a comment. Unknown keys are kept
/// here and rejected by resolve_config.
Settings parse_settings(std::string_view text);
Settings read_settings_file(const std::filesystem::path& path);
/// Applies one "key=value" override.
void apply_override(Settings& settings, std::string_view assignment);

/// Fully resolved experiment description. Dataset-dependent defaults follow
/// the published parameter tables:
///
///   dataset  sigma0  DendSOM units/patch/stride  SOM units
///   mnist    4       8x8 / 10 / 3                21x21
///   fashion  5       10x10 / 8 / 4               18x18
///   cifar10  6       12x12 / 4 / 2               29x29
///
/// with alpha0 = 0.95, lambda = 1000, alpha_crit = 0.005 everywhere and
/// r_exp = 1 for classification, 2 for the continual-learning scenarios.
struct ExperimentConfig {
    DatasetId dataset = DatasetId::mnist;
    std::filesystem::path data_dir = "data";
    ModelKind model = ModelKind::dendsom;
    BmuRule bmu = BmuRule::cosine;
    std::size_t unit_rows = 8;
    std::size_t unit_cols = 8;
    std::size_t patch = 10;  // DendSOM only; a SOM always covers the whole image
    std::size_t stride = 3;
    double alpha0 = 0.95;
    std::optional<double> sigma0;  // nullopt: max(unit_rows, unit_cols) / 2
    double lambda = 1000.0;
    double alpha_crit = 0.005;
    std::optional<std::uint32_t> r_exp;  // nullopt: 1 for classification, 2 otherwise
    Scenario scenario = Scenario::classification;
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "results";
    std::size_t workers = 1;
    NeighborhoodKernel kernel = NeighborhoodKernel::linear;
    double smoothing = kDefaultSmoothing;
    Grayscale grayscale = Grayscale::luma;
    ScoreNormalization task_il_normalization = ScoreNormalization::global;
    bool curves = true;
    bool exclude_unseen = false;  // see PredictOptions::exclude_unseen
    std::size_t max_train = 0;  // 0: all samples (per task in CL scenarios)
    std::size_t max_test = 0;   // 0: whole test set

    double resolved_sigma0() const;
    std::uint32_t resolved_r_exp() const;

    /// Model for images of the given size and label space.
    ModelSpec model_spec(std::size_t image_rows, std::size_t image_cols, std::size_t n_labels) const;

    /// Canonical key/value form; resolve_config(to_settings()) == *this.
    Settings to_settings() const;
    std::string to_text() const;
    /// FNV-1a 64 of to_text(), as 16 hex digits.
    std::string hash() const;

    /// Copy with one key overridden and defaults re-resolved.
    ExperimentConfig with(std::string_view key, std::string_view value) const;

    friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
        return a.to_text() == b.to_text();
    }
};

/// Recognized configuration keys.
std::span<const std::string_view> config_keys();

/// Applies dataset defaults for every key the settings leave out, then
/// validates. Throws ConfigError on unknown keys or bad values.
ExperimentConfig resolve_config(const Settings& settings);

struct TrialRecord {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double seconds = 0.0;
    ScenarioResult result;
};

struct TrialReport {
    ExperimentConfig config;
    std::string config_hash;
    std::vector<TrialRecord> trials;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation (N - 1)

    std::vector<double> accuracies() const;
};

double mean_of(std::span<const double> values);
/// Sample standard deviation; 0 for fewer than two values.
double sample_stddev(std::span<const double> values);

/// Called after each finished trial.
using TrialCallback = std::function<void(const TrialRecord&)>;

/// Loads the configured dataset and runs every trial. Trial j uses seed
/// base_seed + j for weight initialization and sample order.
TrialReport run_experiment(const ExperimentConfig& config, const TrialCallback& on_trial = {});

/// Same on already loaded data (train and test must come from one dataset).
TrialReport run_experiment(const ExperimentConfig& config, const LabeledDataset& train,
                           const LabeledDataset& test, const TrialCallback& on_trial = {});

/// Recognized sweep parameters and the config key each one drives.
std::span<const std::string_view> sweep_parameters();
std::string_view sweep_key(std::string_view parameter);

struct SweepPoint {
    std::string value;
    TrialReport report;
};

std::vector<SweepPoint> run_sweep(const ExperimentConfig& config, std::string_view parameter,
                                  std::span<const std::string> values, const TrialCallback& on_trial = {});
std::vector<SweepPoint> run_sweep(const ExperimentConfig& config, std::string_view parameter,
                                  std::span<const std::string> values, const LabeledDataset& train,
                                  const LabeledDataset& test, const TrialCallback& on_trial = {});

enum class ReportFormat { csv, json };

ReportFormat parse_report_format(std::string_view name);

/// CSV: '#'-prefixed "key = value" lines carrying the resolved config, then
/// the header "trial,seed,accuracy,seconds" and one row per trial.
/// JSON: config, config_hash, trials (with per-task results), mean, std.
/// Output carries no timestamps; equal reports give identical bytes.
std::string format_report(const TrialReport& report, ReportFormat format);
void emit_results(const TrialReport& report, ReportFormat format, const std::filesystem::path& path);

TrialReport parse_report(std::string_view text, ReportFormat format);
TrialReport read_report(const std::filesystem::path& path, ReportFormat format);

/// Header "trained_through_task,eval_task,accuracy", preceded by the config
/// and trial as '#' lines.
std::string format_curves_csv(const ExperimentConfig& config, const TrialRecord& trial);
/// Header "<parameter>,mean,std", preceded by the base config as '#' lines.
std::string format_sweep_csv(const ExperimentConfig& config, std::string_view parameter,
                             std::span<const SweepPoint> points);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace dendsom
