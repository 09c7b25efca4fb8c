#include "dendsom/pmi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "dendsom/error.hpp"
#include "dendsom/log.hpp"

namespace dendsom {

namespace {

inline double smoothed(std::uint64_t num, std::uint64_t den, double eps, std::size_t n) {
    return (static_cast<double>(num) + eps) / (static_cast<double>(den) + eps * static_cast<double>(n));
}

void check_indices(const HitMatrix& hits, std::size_t unit, std::size_t label) {
    if (label >= hits.n_labels()) throw InvalidArgument("label index out of range");
    if (unit >= hits.units()) throw InvalidArgument("unit index out of range");
}

void warn_if_empty(const HitMatrix& hits) {
    if (hits.total() == 0)
        log::warn_once("empty-prior", "hit matrix is empty; prior falls back to uniform");
}

inline double pmi_unchecked(const HitMatrix& h, std::size_t unit, std::size_t label, double eps) {
    const double post = smoothed(h.count(label, unit), h.col_sum(unit), eps, h.n_labels());
    const double pri = smoothed(h.row_sum(label), h.total(), eps, h.n_labels());
    return std::log(post / pri);
}

}  // namespace

double posterior(const HitMatrix& hits, std::size_t unit, std::size_t label, double eps) {
    check_indices(hits, unit, label);
    return smoothed(hits.count(label, unit), hits.col_sum(unit), eps, hits.n_labels());
}

double prior(const HitMatrix& hits, std::size_t label, double eps) {
    if (label >= hits.n_labels()) throw InvalidArgument("label index out of range");
    warn_if_empty(hits);
    return smoothed(hits.row_sum(label), hits.total(), eps, hits.n_labels());
}

double pmi(const HitMatrix& hits, std::size_t unit, std::size_t label, double eps) {
    check_indices(hits, unit, label);
    warn_if_empty(hits);
    return pmi_unchecked(hits, unit, label, eps);
}

LabelDistribution label_distribution(const HitMatrix& hits, std::size_t unit, double eps) {
    LabelDistribution d;
    for (std::size_t l = 0; l < hits.n_labels(); ++l) {
        d.posterior.push_back(posterior(hits, unit, l, eps));
        d.prior.push_back(prior(hits, l, eps));
    }
    return d;
}

std::vector<int> all_labels(std::size_t n) {
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<int>(i);
    return out;
}

Prediction predict_from_bmus(const DendSomModel& model, std::span<const UnitIndex> bmus,
                             std::span<const int> candidates, const PredictOptions& options) {
    if (candidates.empty()) throw InvalidArgument("candidate label set is empty");
    for (int c : candidates)
        if (c < 0 || static_cast<std::size_t>(c) >= model.n_labels())
            throw InvalidArgument("candidate label " + std::to_string(c) + " outside the model's label space");
    if (bmus.size() != model.som_count()) throw DimensionError("one BMU per SOM required");
    if (!model.trained()) {
        if (!options.allow_untrained) throw UntrainedModel("model has not seen any training sample");
        log::warn_once("untrained-predict", "scoring an untrained model; every PMI is zero");
    }

    const double eps = options.smoothing;
    const std::size_t n_labels = model.n_labels();
    Prediction out;

    if (options.normalization == ScoreNormalization::global) {
        out.scores.assign(n_labels, 0.0);
        for (std::size_t j = 0; j < bmus.size(); ++j) {
            const HitMatrix& h = model.hits()[j];
            const std::size_t u = bmus[j].linear;
            for (std::size_t l = 0; l < n_labels; ++l) out.scores[l] += pmi_unchecked(h, u, l, eps);
        }
    } else {
        out.scores.assign(n_labels, -std::numeric_limits<double>::infinity());
        for (int c : candidates) out.scores[c] = 0.0;
        const double n_cand = static_cast<double>(candidates.size());
        for (std::size_t j = 0; j < bmus.size(); ++j) {
            const HitMatrix& h = model.hits()[j];
            const std::size_t u = bmus[j].linear;
            std::uint64_t col = 0, total = 0;
            for (int c : candidates) {
                col += h.count(c, u);
                total += h.row_sum(c);
            }
            for (int c : candidates) {
                const double post = (static_cast<double>(h.count(c, u)) + eps) / (static_cast<double>(col) + eps * n_cand);
                const double pri = (static_cast<double>(h.row_sum(c)) + eps) / (static_cast<double>(total) + eps * n_cand);
                out.scores[c] += std::log(post / pri);
            }
        }
    }

    // labels with no training sample score ln(total / col) under smoothing,
    // which outranks every seen label; optionally drop them
    bool any_seen = false;
    if (options.exclude_unseen)
        for (int c : candidates) any_seen = any_seen || model.hits().front().row_sum(c) > 0;
    for (int c : candidates) {
        if (any_seen && model.hits().front().row_sum(c) == 0) continue;
        if (out.label < 0 || out.scores[c] > out.scores[out.label] ||
            (out.scores[c] == out.scores[out.label] && c < out.label))
            out.label = c;
    }
    return out;
}

Prediction predict(const DendSomModel& model, std::span<const double> image,
                   std::span<const int> candidates, const PredictOptions& options) {
    const auto bmus = identify_bmus(model, image);
    return predict_from_bmus(model, bmus, candidates, options);
}

// ---------------------------------------------------------------------------
// Records

PredictionRecord make_record(std::size_t sample_id, int true_label, const Prediction& prediction,
                             std::span<const int> candidates) {
    PredictionRecord r;
    r.sample_id = sample_id;
    r.true_label = true_label;
    r.predicted_label = prediction.label;
    r.candidates.assign(candidates.begin(), candidates.end());
    for (int c : candidates) r.scores.push_back(prediction.scores.at(static_cast<std::size_t>(c)));
    return r;
}

namespace {
std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace

std::string csv_header(const PredictionRecord& record) {
    std::string s = "sample_id,true_label,predicted_label";
    for (int c : record.candidates) s += ",score_" + std::to_string(c);
    return s;
}

std::string to_csv_row(const PredictionRecord& record) {
    std::string s = std::to_string(record.sample_id) + "," + std::to_string(record.true_label) + "," +
                    std::to_string(record.predicted_label);
    for (double v : record.scores) s += "," + fmt_double(v);
    return s;
}

std::string to_json(const PredictionRecord& record) {
    nlohmann::ordered_json j;
    j["sample_id"] = record.sample_id;
    j["true_label"] = record.true_label;
    j["predicted_label"] = record.predicted_label;
    nlohmann::ordered_json scores = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < record.candidates.size(); ++i)
        scores[std::to_string(record.candidates[i])] = record.scores[i];
    j["scores"] = std::move(scores);
    return j.dump();
}

}  // namespace dendsom
