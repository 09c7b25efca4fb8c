#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "dendsom/error.hpp"
#include "dendsom/experiment.hpp"
#include "support.hpp"

using namespace dendsom;

namespace {

ExperimentConfig small(std::string_view scenario = "classification") {
    Settings s{{"units", "4"}, {"patch", "4"}, {"stride", "2"}, {"trials", "3"}, {"lambda", "200"},
               {"scenario", std::string(scenario)}, {"seed", "5"}};
    return resolve_config(s);
}

std::vector<std::string> data_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && line[0] != '#') out.push_back(line);
    return out;
}

const LabeledDataset& train_set() {
    static const auto d = testing::synthetic_digits(12, 1);
    return d;
}
const LabeledDataset& test_set() {
    static const auto d = testing::synthetic_digits(6, 2, 12, Split::test);
    return d;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("dataset defaults") {
    const auto mnist = resolve_config({});
    CHECK(mnist.unit_rows == 8);
    CHECK(mnist.patch == 10);
    CHECK(mnist.stride == 3);
    CHECK(mnist.resolved_sigma0() == 4.0);
    CHECK(mnist.resolved_r_exp() == 1);
    CHECK(mnist.alpha0 == 0.95);
    CHECK(mnist.lambda == 1000.0);
    CHECK(mnist.alpha_crit == 0.005);

    const auto fashion = resolve_config({{"dataset", "fashion"}});
    CHECK(fashion.unit_cols == 10);
    CHECK(fashion.patch == 8);
    CHECK(fashion.stride == 4);
    CHECK(fashion.resolved_sigma0() == 5.0);

    const auto cifar = resolve_config({{"dataset", "cifar10"}, {"scenario", "class-il"}});
    CHECK(cifar.unit_rows == 12);
    CHECK(cifar.patch == 4);
    CHECK(cifar.stride == 2);
    CHECK(cifar.resolved_sigma0() == 6.0);
    CHECK(cifar.resolved_r_exp() == 2);

    CHECK(resolve_config({{"model", "som"}}).unit_rows == 21);
    CHECK(resolve_config({{"model", "som"}, {"dataset", "fashion"}}).unit_rows == 18);
    CHECK(resolve_config({{"model", "som"}, {"dataset", "cifar10"}}).unit_rows == 29);
    const auto som = resolve_config({{"model", "som"}}).model_spec(28, 28, 10);
    CHECK(som.tiling.tiles() == 1);
    CHECK(som.tiling.patch_rows == 28);
}

TEST_CASE("auto sigma0 follows the map size") {
    // dataset tables pin sigma0 even for other map sizes
    CHECK(resolve_config({{"units", "9x5"}}).resolved_sigma0() == 4.0);
    CHECK(resolve_config({{"model", "som"}}).resolved_sigma0() == 4.0);
    CHECK(resolve_config({{"units", "9x5"}, {"sigma0", "auto"}}).resolved_sigma0() == 4.5);
    CHECK(resolve_config({{"units", "9"}, {"sigma0", "auto"}}).resolved_sigma0() == 4.5);
    CHECK(resolve_config({{"sigma0", "2.5"}}).resolved_sigma0() == 2.5);
}

TEST_CASE("bad settings are config errors") {
    CHECK_THROWS_AS(resolve_config({{"alpha", "0.5"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config({{"alpha0", "abc"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config({{"units", "0"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config({{"dataset", "svhn"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config({{"trials", "-1"}}), ConfigError);
    CHECK_THROWS_AS(resolve_config({{"alpha_crit", "2"}}), ConfigError);
    Settings s;
    CHECK_THROWS_AS(apply_override(s, "novalue"), ConfigError);
}

TEST_CASE("settings files and overrides") {
    auto s = parse_settings("# experiment\ndataset = fashion\n  alpha0=0.5  # tuned\n\n");
    CHECK(s.at("dataset") == "fashion");
    CHECK(s.at("alpha0") == "0.5");
    apply_override(s, "alpha0=0.25");
    const auto c = resolve_config(s);
    CHECK(c.alpha0 == 0.25);
    CHECK(c.dataset == DatasetId::fashion);
}

TEST_CASE("canonical text round trips and hashes") {
    const auto c = resolve_config({{"dataset", "cifar10"}, {"alpha0", "0.1"}, {"workers", "2"}});
    CHECK(resolve_config(c.to_settings()) == c);
    CHECK(resolve_config(parse_settings(c.to_text())) == c);
    CHECK(c.hash().size() == 16);
    CHECK(c.hash() == resolve_config(c.to_settings()).hash());
    CHECK(c.hash() != c.with("alpha0", "0.2").hash());
    CHECK(c.with("alpha0", "0.1") == c);
    // with() keeps every other resolved key
    CHECK(c.with("dataset", "mnist").dataset == DatasetId::mnist);
    CHECK(c.with("dataset", "mnist").patch == 4);
    std::size_t keys = 0;
    std::istringstream in(c.to_text());
    for (std::string line; std::getline(in, line);) ++keys;
    CHECK(keys == config_keys().size());
}

TEST_CASE("statistics") {
    const std::vector<double> v{0.9, 0.92, 0.94};
    CHECK(mean_of(v) == doctest::Approx(0.92).epsilon(1e-15));
    CHECK(sample_stddev(v) == doctest::Approx(0.02).epsilon(1e-12));
    const std::vector<double> one{0.5};
    CHECK(sample_stddev(one) == 0.0);
}

TEST_CASE("experiments are deterministic and worker-count independent") {
    auto c = small();
    const auto a = run_experiment(c, train_set(), test_set());
    const auto b = run_experiment(c, train_set(), test_set());
    REQUIRE(a.trials.size() == 3);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(a.trials[j].seed == 5 + j);
        CHECK(a.trials[j].accuracy == b.trials[j].accuracy);
    }
    CHECK(a.mean == mean_of(a.accuracies()));
    CHECK(a.stddev == sample_stddev(a.accuracies()));
    CHECK(a.config_hash == c.hash());

    c.workers = 2;
    const auto p = run_experiment(c, train_set(), test_set());
    for (std::size_t j = 0; j < 3; ++j) CHECK(p.trials[j].accuracy == a.trials[j].accuracy);
    CHECK(p.mean == a.mean);

    std::vector<std::size_t> seen;
    c.workers = 1;
    run_experiment(c, train_set(), test_set(), [&](const TrialRecord& t) { seen.push_back(t.trial); });
    CHECK(seen == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("reports round trip") {
    const auto c = small("class-il");
    auto report = run_experiment(c, train_set(), test_set());
    for (auto& t : report.trials) t.seconds = 0.25;

    for (auto format : {ReportFormat::csv, ReportFormat::json}) {
        const auto text = format_report(report, format);
        CHECK(format_report(report, format) == text);
        const auto back = parse_report(text, format);
        CHECK(back.config == c);
        CHECK(back.config_hash == report.config_hash);
        REQUIRE(back.trials.size() == 3);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(back.trials[j].accuracy == report.trials[j].accuracy);
            CHECK(back.trials[j].seed == report.trials[j].seed);
        }
        CHECK(std::abs(back.mean - mean_of(back.accuracies())) <= 1e-12);
        CHECK(std::abs(back.stddev - sample_stddev(back.accuracies())) <= 1e-12);
        if (format == ReportFormat::csv) {
            const auto rows = data_lines(text);
            CHECK(rows.size() == 4);
            CHECK(rows[0] == "trial,seed,accuracy,seconds");
        } else {
            CHECK(back.trials[1].result.per_task_accuracy == report.trials[1].result.per_task_accuracy);
        }
    }

    testing::TempDir dir("report");
    emit_results(report, ReportFormat::json, dir / "r.json");
    emit_results(report, ReportFormat::json, dir / "r2.json");
    CHECK(testing::read_bytes(dir / "r.json") == testing::read_bytes(dir / "r2.json"));
    CHECK(read_report(dir / "r.json", ReportFormat::json).mean == report.mean);
    CHECK_THROWS_AS(parse_report("trial,seed\n1,2\n", ReportFormat::csv), Error);
    CHECK_THROWS_AS(parse_report_format("xml"), Error);

    const auto curves = format_curves_csv(c, report.trials[0]);
    const auto rows = data_lines(curves);
    CHECK(rows[0] == "trained_through_task,eval_task,accuracy");
    CHECK(rows.size() == 1 + 25);
}

TEST_CASE("sweeps") {
    const auto c = small();
    CHECK(sweep_key("patch_size") == "patch");
    CHECK(sweep_key("units_per_map") == "units");
    CHECK(sweep_key("alpha0") == "alpha0");
    CHECK_THROWS_AS(sweep_key("momentum"), ConfigError);
    CHECK(sweep_parameters().size() == 6);

    const std::vector<std::string> values{"2", "4"};
    const auto points = run_sweep(c.with("trials", "2"), "patch_size", values, train_set(), test_set());
    REQUIRE(points.size() == 2);
    CHECK(points[0].report.config.patch == 2);
    CHECK(points[1].report.config.patch == 4);
    CHECK(points[1].report.trials.size() == 2);
    const auto csv = format_sweep_csv(c, "patch_size", points);
    const auto rows = data_lines(csv);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "patch_size,mean,std");
    CHECK(rows[1].starts_with("2,"));
}

TEST_CASE("max_test and max_train limit the run") {
    auto c = small();
    c = c.with("max_test", "7").with("max_train", "3").with("trials", "1");
    const auto r = run_experiment(c, train_set(), test_set());
    const double scaled = r.trials[0].accuracy * 7;
    CHECK(std::abs(scaled - std::round(scaled)) < 1e-9);
}

}
