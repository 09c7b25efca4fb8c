#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dendsom/model.hpp"

namespace dendsom {

/// Additive smoothing applied to every count. Keeps log-ratios finite and is
/// negligible next to real counts.
inline constexpr double kDefaultSmoothing = 1e-9;

/// (H[l,u] + eps) / (sum_i H[i,u] + eps * n_labels)
double posterior(const HitMatrix& hits, std::size_t unit, std::size_t label,
                 double eps = kDefaultSmoothing);

/// (sum_u H[l,u] + eps) / (sum_u sum_i H[i,u] + eps * n_labels). An empty
/// matrix yields the uniform prior and logs a warning.
double prior(const HitMatrix& hits, std::size_t label, double eps = kDefaultSmoothing);

/// ln(posterior / prior)
double pmi(const HitMatrix& hits, std::size_t unit, std::size_t label, double eps = kDefaultSmoothing);

struct LabelDistribution {
    std::vector<double> posterior;  // P(l | unit)
    std::vector<double> prior;      // P(l)
};

LabelDistribution label_distribution(const HitMatrix& hits, std::size_t unit,
                                     double eps = kDefaultSmoothing);

/// How probabilities are normalized when scoring.
/// `global` uses every label row of each hit matrix; `candidates` renormalizes
/// over the candidate rows only (per-task hit matrices, an ablation for Task-IL).
enum class ScoreNormalization { global, candidates };

struct PredictOptions {
    double smoothing = kDefaultSmoothing;
    ScoreNormalization normalization = ScoreNormalization::global;
    /// Score an empty model (all PMI zero) instead of rejecting it.
    bool allow_untrained = false;
    /// Skip candidates that never occurred in training (unless none did).
    bool exclude_unseen = false;
};

struct Prediction {
    int label = -1;
    /// Summed PMI per label, indexed by label. Under global normalization every
    /// label is scored regardless of the candidate set; under candidate
    /// normalization non-candidates hold -infinity.
    std::vector<double> scores;
};

/// argmax over candidates of sum_j PMI(l; bmu_j), ties to the smallest label.
Prediction predict(const DendSomModel& model, std::span<const double> image,
                   std::span<const int> candidates, const PredictOptions& options = {});

/// Scoring step alone, given one BMU per SOM.
Prediction predict_from_bmus(const DendSomModel& model, std::span<const UnitIndex> bmus,
                             std::span<const int> candidates, const PredictOptions& options = {});

/// 0, 1, ..., n-1
std::vector<int> all_labels(std::size_t n);

/// One scored sample, as written by `eval`.
struct PredictionRecord {
    std::size_t sample_id = 0;
    int true_label = 0;
    int predicted_label = 0;
    std::vector<int> candidates;
    std::vector<double> scores;  // one per candidate, in candidate order
};

PredictionRecord make_record(std::size_t sample_id, int true_label, const Prediction& prediction,
                             std::span<const int> candidates);

std::string csv_header(const PredictionRecord& record);
std::string to_csv_row(const PredictionRecord& record);
std::string to_json(const PredictionRecord& record);

}  // namespace dendsom
