#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dendsom/datasets.hpp"
#include "dendsom/som.hpp"

namespace dendsom {

/// floor((n - p) / s) + 1 windows along one axis.
std::size_t tile_count(std::size_t n, std::size_t p, std::size_t s);

/// How an N1 x N2 image is cut into strided P1 x P2 receptive fields.
struct TilingSpec {
    std::size_t image_rows = 0;
    std::size_t image_cols = 0;
    std::size_t patch_rows = 0;
    std::size_t patch_cols = 0;
    std::size_t stride_rows = 1;
    std::size_t stride_cols = 1;

    /// Square images, square patches, equal strides.
    static TilingSpec square(std::size_t image, std::size_t patch, std::size_t stride) {
        return {image, image, patch, patch, stride, stride};
    }

    /// Throws InvalidArgument when a patch exceeds the image or a field is zero.
    void validate() const;

    std::size_t tiles_rows() const { return tile_count(image_rows, patch_rows, stride_rows); }
    std::size_t tiles_cols() const { return tile_count(image_cols, patch_cols, stride_cols); }
    std::size_t tiles() const { return tiles_rows() * tiles_cols(); }
    std::size_t patch_length() const { return patch_rows * patch_cols; }
    std::size_t image_size() const { return image_rows * image_cols; }

    friend bool operator==(const TilingSpec&, const TilingSpec&) = default;
};

/// Patch (a, b) is the window whose top-left pixel is (a*s1, b*s2), flattened
/// row-major; patches are ordered row-major over (a, b).
std::vector<std::vector<double>> extract_receptive_fields(std::span<const double> image,
                                                          const TilingSpec& tiling);

/// Same as above into a caller-owned buffer of tiles()*patch_length() values.
void extract_receptive_fields_into(std::span<const double> image, const TilingSpec& tiling,
                                   std::span<double> out);

/// Counts of (label, unit) BMU co-occurrences for one SOM, with row, column
/// and grand totals maintained alongside.
class HitMatrix {
public:
    HitMatrix() = default;
    HitMatrix(std::size_t n_labels, std::size_t units);
    /// Row-major n_labels x units counts.
    HitMatrix(std::size_t n_labels, std::size_t units, std::vector<std::uint64_t> counts);

    std::size_t n_labels() const noexcept { return n_labels_; }
    std::size_t units() const noexcept { return units_; }
    std::uint64_t count(std::size_t label, std::size_t unit) const { return counts_[label * units_ + unit]; }
    std::uint64_t row_sum(std::size_t label) const { return row_sums_[label]; }
    std::uint64_t col_sum(std::size_t unit) const { return col_sums_[unit]; }
    std::uint64_t total() const noexcept { return total_; }
    std::span<const std::uint64_t> counts() const noexcept { return counts_; }

    void increment(std::size_t label, std::size_t unit);

    /// Every count multiplied by `factor`.
    HitMatrix scaled(std::uint64_t factor) const;

    friend bool operator==(const HitMatrix& a, const HitMatrix& b) {
        return a.n_labels_ == b.n_labels_ && a.units_ == b.units_ && a.counts_ == b.counts_;
    }

private:
    std::size_t n_labels_ = 0;
    std::size_t units_ = 0;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> row_sums_;
    std::vector<std::uint64_t> col_sums_;
    std::uint64_t total_ = 0;
};

/// Everything needed to build a fresh model.
struct ModelSpec {
    TilingSpec tiling;
    std::size_t unit_rows = 8;
    std::size_t unit_cols = 8;
    ScheduleParams schedule;
    std::size_t n_labels = 10;
    BmuRule bmu = BmuRule::cosine;
    NeighborhoodKernel kernel = NeighborhoodKernel::linear;
};

/// A single layer of independent SOMs, one per receptive field, each with its
/// own hit matrix, sharing one decay schedule. A classical SOM is the special
/// case of a single receptive field covering the whole image.
class DendSomModel {
public:
    /// Fresh model with random weights and zero hit matrices.
    static DendSomModel create(const ModelSpec& spec, std::uint64_t seed);

    /// Assembles a model from parts (used by snapshots); validates invariants.
    DendSomModel(TilingSpec tiling, std::vector<SomGrid> grids, std::vector<HitMatrix> hits,
                 DecaySchedule schedule, std::size_t n_labels, BmuRule bmu, NeighborhoodKernel kernel);

    const TilingSpec& tiling() const noexcept { return tiling_; }
    const std::vector<SomGrid>& grids() const noexcept { return grids_; }
    const std::vector<HitMatrix>& hits() const noexcept { return hits_; }
    const DecaySchedule& schedule() const noexcept { return schedule_; }
    std::size_t n_labels() const noexcept { return n_labels_; }
    BmuRule bmu_rule() const noexcept { return bmu_; }
    NeighborhoodKernel kernel() const noexcept { return kernel_; }
    std::size_t som_count() const noexcept { return grids_.size(); }
    std::size_t unit_rows() const { return grids_.front().rows(); }
    std::size_t unit_cols() const { return grids_.front().cols(); }

    /// Samples presented so far (the common total of every hit matrix).
    std::uint64_t samples_seen() const { return hits_.front().total(); }
    bool trained() const { return samples_seen() > 0; }

    /// Replaces every hit matrix; shapes must match.
    void set_hits(std::vector<HitMatrix> hits);

    friend bool operator==(const DendSomModel&, const DendSomModel&) = default;

private:
    friend void train_step(DendSomModel&, std::span<const double>, int);
    friend void maybe_rewind_schedule(DendSomModel&, std::uint64_t);

    DendSomModel() = default;

    TilingSpec tiling_;
    std::vector<SomGrid> grids_;
    std::vector<HitMatrix> hits_;
    DecaySchedule schedule_;
    std::size_t n_labels_ = 0;
    BmuRule bmu_ = BmuRule::cosine;
    NeighborhoodKernel kernel_ = NeighborhoodKernel::linear;
};

/// BMU of every receptive field under the model's rule, in tile order.
std::vector<UnitIndex> identify_bmus(const DendSomModel& model, std::span<const double> image);

/// One sample: BMUs per SOM, weight updates at the current clock, hit
/// increments with the pre-update BMUs, then the clock advances by one.
void train_step(DendSomModel& model, std::span<const double> image, int label);

/// When step_index is a multiple of iter_crit, t <- floor(t / r_exp).
void maybe_rewind_schedule(DendSomModel& model, std::uint64_t step_index);

/// Single pass over the first n_iter samples in order: train_step then
/// maybe_rewind_schedule with the model's lifetime sample count as step index.
/// For a fresh model that index runs 1..n_iter.
void fit(DendSomModel& model, const SampleView& stream, std::size_t n_iter);
void fit(DendSomModel& model, const SampleView& stream);

}  // namespace dendsom
