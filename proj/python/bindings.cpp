#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "dendsom/datasets.hpp"
#include "dendsom/error.hpp"
#include "dendsom/experiment.hpp"
#include "dendsom/model.hpp"
#include "dendsom/pmi.hpp"
#include "dendsom/snapshot.hpp"
#include "dendsom/som.hpp"

namespace py = pybind11;
using namespace dendsom;

namespace {

using Images = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Labels = py::array_t<int, py::array::c_style | py::array::forcecast>;

// (n, rows, cols) or (n, rows*cols) with explicit rows/cols
LabeledDataset to_dataset(const Images& images, const Labels& labels, std::size_t n_labels = 10) {
    if (images.ndim() != 3) throw InvalidArgument("images must have shape (n, rows, cols)");
    if (labels.ndim() != 1 || labels.shape(0) != images.shape(0))
        throw CountMismatch("labels must have shape (n,) matching the images");
    const auto n = static_cast<std::size_t>(images.shape(0));
    const auto rows = static_cast<std::size_t>(images.shape(1));
    const auto cols = static_cast<std::size_t>(images.shape(2));
    std::vector<double> px(images.data(), images.data() + n * rows * cols);
    std::vector<int> lb(labels.data(), labels.data() + n);
    return LabeledDataset("array", Split::train, rows, cols, std::move(px), std::move(lb), static_cast<int>(n_labels));
}

py::tuple to_arrays(const LabeledDataset& d) {
    Images images({d.size(), d.rows(), d.cols()});
    std::copy(d.pixels().begin(), d.pixels().end(), images.mutable_data());
    Labels labels(static_cast<py::ssize_t>(d.size()));
    std::copy(d.labels().begin(), d.labels().end(), labels.mutable_data());
    return py::make_tuple(images, labels);
}

std::span<const double> row_of(const Images& images, py::ssize_t i) {
    const auto len = static_cast<std::size_t>(images.shape(1) * images.shape(2));
    const auto view = images.unchecked<3>();
    return {&view(i, 0, 0), len};
}

SomGrid grid_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& w) {
    if (w.ndim() != 3) throw InvalidArgument("weights must have shape (rows, cols, dim)");
    SomGrid g(w.shape(0), w.shape(1), w.shape(2));
    g.set_weights(std::vector<double>(w.data(), w.data() + w.size()));
    return g;
}

py::dict report_dict(const TrialReport& r) {
    py::dict d;
    d["config"] = r.config.to_settings();
    d["config_hash"] = r.config_hash;
    d["accuracies"] = r.accuracies();
    d["mean"] = r.mean;
    d["std"] = r.stddev;
    py::list trials;
    for (const auto& t : r.trials) {
        py::dict e;
        e["trial"] = t.trial;
        e["seed"] = t.seed;
        e["accuracy"] = t.accuracy;
        e["seconds"] = t.seconds;
        e["per_task_accuracy"] = t.result.per_task_accuracy;
        e["accuracy_after_each_task"] = t.result.accuracy_after_each_task;
        trials.append(e);
    }
    d["trials"] = trials;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "DendSOM core bindings";
    py::register_exception<Error>(m, "DendsomError", PyExc_ValueError);

    m.def("tile_count", &tile_count, py::arg("n"), py::arg("patch"), py::arg("stride"));
    m.def("iter_crit", &dendsom::iter_crit, py::arg("alpha0"), py::arg("alpha_crit"), py::arg("lam"));
    m.def("auto_sigma0", &auto_sigma0, py::arg("rows"), py::arg("cols"));

    m.def(
        "bmu",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& weights,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& patch, const std::string& rule) {
            const auto g = grid_from(weights);
            const std::span<const double> x(patch.data(), static_cast<std::size_t>(patch.size()));
            const auto u = find_bmu(x, g, parse_bmu_rule(rule));
            return py::make_tuple(u.row, u.col);
        },
        py::arg("weights"), py::arg("patch"), py::arg("rule") = "cosine",
        "BMU (row, col) of `patch` on a grid with weights of shape (rows, cols, dim).");

    m.def(
        "extract_receptive_fields",
        [](const Images& image, std::size_t patch, std::size_t stride) {
            if (image.ndim() != 2) throw InvalidArgument("image must be 2-D");
            const auto t = TilingSpec{static_cast<std::size_t>(image.shape(0)), static_cast<std::size_t>(image.shape(1)),
                                      patch, patch, stride, stride};
            const std::span<const double> x(image.data(), static_cast<std::size_t>(image.size()));
            Images out({t.tiles(), t.patch_length()});
            extract_receptive_fields_into(x, t, std::span<double>(out.mutable_data(), out.size()));
            return out;
        },
        py::arg("image"), py::arg("patch"), py::arg("stride"));

    m.def(
        "load_dataset",
        [](const std::string& name, const std::string& split, const std::filesystem::path& data_dir,
           const std::string& grayscale) {
            const auto s = split == "train" ? Split::train : split == "test" ? Split::test
                                                                              : throw InvalidArgument("split must be train|test");
            return to_arrays(load_dataset(parse_dataset(name), s, data_dir, parse_grayscale(grayscale)));
        },
        py::arg("name"), py::arg("split"), py::arg("data_dir") = "data", py::arg("grayscale") = "luma",
        "(images[n, rows, cols] in [0, 1], labels[n]) for mnist, fashion or cifar10.");

    py::class_<DendSomModel>(m, "Model")
        .def(py::init([](std::size_t image_rows, std::size_t image_cols, std::size_t patch, std::size_t stride,
                         std::size_t units, std::size_t n_labels, const std::string& bmu, double alpha0,
                         std::optional<double> sigma0, double lam, double alpha_crit, std::uint32_t r_exp,
                         const std::string& kernel, std::uint64_t seed) {
                 ModelSpec s;
                 s.tiling = TilingSpec{image_rows, image_cols, patch, patch, stride, stride};
                 s.unit_rows = s.unit_cols = units;
                 s.n_labels = n_labels;
                 s.bmu = parse_bmu_rule(bmu);
                 s.kernel = parse_kernel(kernel);
                 s.schedule.alpha0 = alpha0;
                 s.schedule.sigma0 = sigma0.value_or(auto_sigma0(units, units));
                 s.schedule.lambda = lam;
                 s.schedule.alpha_crit = alpha_crit;
                 s.schedule.r_exp = r_exp;
                 return DendSomModel::create(s, seed);
             }),
             py::arg("image_rows") = 28, py::arg("image_cols") = 28, py::arg("patch") = 10, py::arg("stride") = 3,
             py::arg("units") = 8, py::arg("n_labels") = 10, py::arg("bmu") = "cosine", py::arg("alpha0") = 0.95,
             py::arg("sigma0") = py::none(), py::arg("lam") = 1000.0, py::arg("alpha_crit") = 0.005,
             py::arg("r_exp") = 1, py::arg("kernel") = "linear", py::arg("seed") = 0)
        .def_property_readonly("som_count", &DendSomModel::som_count)
        .def_property_readonly("n_labels", &DendSomModel::n_labels)
        .def_property_readonly("samples_seen", &DendSomModel::samples_seen)
        .def_property_readonly("t", [](const DendSomModel& mo) { return mo.schedule().t(); })
        .def(
            "fit",
            [](DendSomModel& mo, const Images& images, const Labels& labels) {
                const auto d = to_dataset(images, labels, mo.n_labels());
                py::gil_scoped_release release;
                fit(mo, SampleView(d));
            },
            py::arg("images"), py::arg("labels"), "One pass over the samples in the given order.")
        .def(
            "predict",
            [](const DendSomModel& mo, const Images& images, std::optional<std::vector<int>> candidates,
               bool exclude_unseen) {
                if (images.ndim() != 3) throw InvalidArgument("images must have shape (n, rows, cols)");
                const auto c = candidates.value_or(all_labels(mo.n_labels()));
                PredictOptions o;
                o.exclude_unseen = exclude_unseen;
                std::vector<int> out(static_cast<std::size_t>(images.shape(0)));
                for (py::ssize_t i = 0; i < images.shape(0); ++i)
                    out[static_cast<std::size_t>(i)] = predict(mo, row_of(images, i), c, o).label;
                return Labels(static_cast<py::ssize_t>(out.size()), out.data());
            },
            py::arg("images"), py::arg("candidates") = py::none(), py::arg("exclude_unseen") = false)
        .def(
            "scores",
            [](const DendSomModel& mo, const Images& image) {
                const std::span<const double> x(image.data(), static_cast<std::size_t>(image.size()));
                return predict(mo, x, all_labels(mo.n_labels())).scores;
            },
            py::arg("image"), "Summed PMI per label for one image.")
        .def(
            "hits",
            [](const DendSomModel& mo, std::size_t som) {
                const auto& h = mo.hits().at(som);
                py::array_t<std::uint64_t> out({h.n_labels(), h.units()});
                std::copy(h.counts().begin(), h.counts().end(), out.mutable_data());
                return out;
            },
            py::arg("som"))
        .def("save", [](const DendSomModel& mo, const std::filesystem::path& p) { save_model(mo, p); })
        .def_static("load", [](const std::filesystem::path& p) { return load_model(p); })
        .def("__eq__", [](const DendSomModel& a, const DendSomModel& b) { return a == b; });

    m.def(
        "resolve_config",
        [](const Settings& settings) { return resolve_config(settings).to_settings(); },
        py::arg("settings") = Settings{}, "Fully resolved configuration as a dict of strings.");
    m.def(
        "config_hash", [](const Settings& settings) { return resolve_config(settings).hash(); },
        py::arg("settings") = Settings{});
    m.def(
        "run_experiment",
        [](const Settings& settings) {
            const auto c = resolve_config(settings);
            TrialReport r;
            {
                py::gil_scoped_release release;
                r = run_experiment(c);
            }
            return report_dict(r);
        },
        py::arg("settings"), "Runs every trial of the configured experiment on the dataset files.");
    m.def(
        "run_experiment_arrays",
        [](const Settings& settings, const Images& train_x, const Labels& train_y, const Images& test_x,
           const Labels& test_y) {
            const auto c = resolve_config(settings);
            const auto train = to_dataset(train_x, train_y);
            const auto test = to_dataset(test_x, test_y);
            TrialReport r;
            {
                py::gil_scoped_release release;
                r = run_experiment(c, train, test);
            }
            return report_dict(r);
        },
        py::arg("settings"), py::arg("train_images"), py::arg("train_labels"), py::arg("test_images"),
        py::arg("test_labels"));
}
