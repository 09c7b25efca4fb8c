#include "dendsom/protocols.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "dendsom/error.hpp"
#include "dendsom/random.hpp"

namespace dendsom {

Scenario parse_scenario(std::string_view name) {
    if (name == "classification") return Scenario::classification;
    if (name == "task-il") return Scenario::task_il;
    if (name == "domain-il") return Scenario::domain_il;
    if (name == "class-il") return Scenario::class_il;
    throw InvalidArgument("unknown scenario '" + std::string(name) +
                          "' (expected classification|task-il|domain-il|class-il)");
}

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::classification: return "classification";
        case Scenario::task_il: return "task-il";
        case Scenario::domain_il: return "domain-il";
        case Scenario::class_il: return "class-il";
    }
    return "?";
}

std::vector<LabelPair> default_pairs() { return {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}}; }

std::vector<int> SplitTask::local_mapping(int n_labels) const {
    std::vector<int> m(static_cast<std::size_t>(n_labels), -1);
    m[static_cast<std::size_t>(global_labels[0])] = 0;
    m[static_cast<std::size_t>(global_labels[1])] = 1;
    return m;
}

std::vector<SplitTask> make_split(const LabeledDataset& dataset, std::span<const LabelPair> pairs) {
    if (pairs.empty()) throw InvalidArgument("split needs at least one label pair");
    std::vector<int> task_of(static_cast<std::size_t>(dataset.n_labels()), -1);
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        for (int l : pairs[t]) {
            if (l < 0 || l >= dataset.n_labels())
                throw InvalidArgument("pair label " + std::to_string(l) + " outside the label space");
            if (task_of[l] != -1) throw InvalidArgument("label " + std::to_string(l) + " appears in two pairs");
            task_of[l] = static_cast<int>(t);
        }
        if (pairs[t][0] == pairs[t][1]) throw InvalidArgument("a pair must hold two distinct labels");
    }
    std::vector<std::vector<std::size_t>> members(pairs.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const int t = task_of[dataset.label(i)];
        if (t < 0)
            throw InvalidArgument("label " + std::to_string(dataset.label(i)) + " is not covered by any pair");
        members[t].push_back(i);
    }
    std::vector<SplitTask> tasks;
    for (std::size_t t = 0; t < pairs.size(); ++t)
        tasks.push_back(SplitTask{t, pairs[t], SampleView(dataset, std::move(members[t]))});
    return tasks;
}

double evaluate(const DendSomModel& model, const SampleView& samples, std::span<const int> candidates,
                const PredictOptions& options) {
    if (samples.empty()) throw InvalidArgument("cannot evaluate on an empty dataset");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (predict(model, samples.image(i), candidates, options).label == samples.label(i)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

namespace {

std::size_t label_space(std::span<const SplitTask> tasks) {
    int n = tasks.front().samples.dataset().n_labels();
    for (const auto& t : tasks) n = std::max({n, t.global_labels[0] + 1, t.global_labels[1] + 1});
    return static_cast<std::size_t>(n);
}

}  // namespace

ScenarioResult run_scenario(const ModelFactory& factory, std::span<const SplitTask> train_tasks,
                            Scenario scenario, std::span<const SplitTask> test_tasks,
                            const ScenarioOptions& options) {
    if (scenario == Scenario::classification)
        throw InvalidArgument("classification is not a continual-learning scenario; use run_classification");
    if (train_tasks.empty()) throw InvalidArgument("scenario needs at least one task");
    if (train_tasks.size() != test_tasks.size())
        throw InvalidArgument("train and test task lists differ in length");
    for (std::size_t t = 0; t < train_tasks.size(); ++t)
        if (train_tasks[t].global_labels != test_tasks[t].global_labels)
            throw InvalidArgument("train and test task " + std::to_string(t) + " use different label pairs");

    const std::size_t global_labels = label_space(train_tasks);
    const std::size_t n_labels = scenario == Scenario::domain_il ? 2 : global_labels;
    DendSomModel model = factory(n_labels);
    if (model.n_labels() != n_labels)
        throw InvalidArgument("scenario " + std::string(to_string(scenario)) + " needs a model with " +
                              std::to_string(n_labels) + " labels, factory built " +
                              std::to_string(model.n_labels()));

    const std::vector<int> everything = all_labels(global_labels);
    const std::vector<int> binary = {0, 1};

    auto task_accuracy = [&](const SplitTask& task) {
        switch (scenario) {
            case Scenario::task_il: {
                const std::vector<int> pair(task.global_labels.begin(), task.global_labels.end());
                return evaluate(model, task.samples, pair, options.predict);
            }
            case Scenario::domain_il:
                return evaluate(model, task.samples.relabeled(task.local_mapping(static_cast<int>(global_labels))),
                                binary, options.predict);
            default:
                return evaluate(model, task.samples, everything, options.predict);
        }
    };

    ScenarioResult result;
    result.scenario = scenario;
    const std::size_t n_tasks = train_tasks.size();
    for (std::size_t r = 0; r < n_tasks; ++r) {
        const SplitTask& task = train_tasks[r];
        SampleView stream = task.samples.shuffled(Rng::derive(options.seed, 1000 + r));
        if (scenario == Scenario::domain_il)
            stream = stream.relabeled(task.local_mapping(static_cast<int>(global_labels)));
        const std::size_t n = std::min(stream.size(), options.max_train_per_task);
        if (n > 0) fit(model, stream, n);

        if (options.track_curves || r + 1 == n_tasks) {
            std::vector<double> row;
            for (const auto& test : test_tasks) row.push_back(task_accuracy(test));
            result.accuracy_after_each_task.push_back(std::move(row));
        }
    }

    result.per_task_accuracy = result.accuracy_after_each_task.back();
    if (scenario == Scenario::class_il) {
        // pooled over the whole test set
        double correct = 0.0;
        std::size_t total = 0;
        for (std::size_t t = 0; t < n_tasks; ++t) {
            correct += result.per_task_accuracy[t] * static_cast<double>(test_tasks[t].samples.size());
            total += test_tasks[t].samples.size();
        }
        result.final_accuracy = correct / static_cast<double>(total);
    } else {
        double sum = 0.0;
        for (double a : result.per_task_accuracy) sum += a;
        result.final_accuracy = sum / static_cast<double>(n_tasks);
    }
    return result;
}

ScenarioResult run_classification(const ModelFactory& factory, const SampleView& train,
                                  const SampleView& test, const ScenarioOptions& options) {
    if (train.empty()) throw InvalidArgument("training set is empty");
    const auto n_labels = static_cast<std::size_t>(train.dataset().n_labels());
    DendSomModel model = factory(n_labels);
    if (model.n_labels() != n_labels)
        throw InvalidArgument("classification needs a model with " + std::to_string(n_labels) + " labels");
    const SampleView stream = train.shuffled(Rng::derive(options.seed, 999));
    const std::size_t n = std::min(stream.size(), options.max_train_per_task);
    if (n > 0) fit(model, stream, n);
    const double acc = evaluate(model, test, all_labels(n_labels), options.predict);

    ScenarioResult result;
    result.scenario = Scenario::classification;
    result.per_task_accuracy = {acc};
    result.accuracy_after_each_task = {{acc}};
    result.final_accuracy = acc;
    return result;
}

}  // namespace dendsom
