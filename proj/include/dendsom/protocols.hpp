#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "dendsom/datasets.hpp"
#include "dendsom/model.hpp"
#include "dendsom/pmi.hpp"

namespace dendsom {

enum class Scenario { classification, task_il, domain_il, class_il };

Scenario parse_scenario(std::string_view name);
std::string_view to_string(Scenario s);

using LabelPair = std::array<int, 2>;

/// (0,1), (2,3), (4,5), (6,7), (8,9)
std::vector<LabelPair> default_pairs();

/// One binary task of the split protocol.
struct SplitTask {
    std::size_t task_id = 0;
    LabelPair global_labels{};
    SampleView samples;

    /// Position of `global` in global_labels (0 or 1); -1 when absent.
    int local_label(int global) const {
        return global == global_labels[0] ? 0 : global == global_labels[1] ? 1 : -1;
    }
    /// Mapping from global label to within-task label, for SampleView::relabeled.
    std::vector<int> local_mapping(int n_labels) const;
};

/// Partitions `dataset` into one task per pair, keeping dataset order inside
/// each task. Pairs must be disjoint and cover every label present.
std::vector<SplitTask> make_split(const LabeledDataset& dataset,
                                  std::span<const LabelPair> pairs = default_pairs());

/// Fraction of samples whose predicted label (over `candidates`) equals the
/// view's label.
double evaluate(const DendSomModel& model, const SampleView& samples, std::span<const int> candidates,
                const PredictOptions& options = {});

struct ScenarioResult {
    Scenario scenario = Scenario::classification;
    std::vector<double> per_task_accuracy;
    /// Row r: accuracy on every test task after training through task r.
    std::vector<std::vector<double>> accuracy_after_each_task;
    double final_accuracy = 0.0;
};

/// Builds a fresh model for a label space of the given size.
using ModelFactory = std::function<DendSomModel(std::size_t n_labels)>;

struct ScenarioOptions {
    std::uint64_t seed = 0;
    PredictOptions predict;
    /// Train on at most this many samples per task (all when unset).
    std::size_t max_train_per_task = SIZE_MAX;
    /// Evaluate every test task after every training task. When off only the
    /// final row is computed.
    bool track_curves = true;
};

/// Sequential single-pass training over `train_tasks` (each shuffled by seed),
/// evaluated on `test_tasks` under the given scenario.
ScenarioResult run_scenario(const ModelFactory& factory, std::span<const SplitTask> train_tasks,
                            Scenario scenario, std::span<const SplitTask> test_tasks,
                            const ScenarioOptions& options = {});

/// Plain classification: one shuffled pass over `train`, accuracy on `test`
/// over all labels. Reported as a one-task ScenarioResult.
ScenarioResult run_classification(const ModelFactory& factory, const SampleView& train,
                                  const SampleView& test, const ScenarioOptions& options = {});

}  // namespace dendsom
