#include "dendsom/model.hpp"

#include <cmath>
#include <string>

#include "dendsom/error.hpp"

namespace dendsom {

std::size_t tile_count(std::size_t n, std::size_t p, std::size_t s) {
    if (n == 0 || p == 0 || s == 0) throw InvalidArgument("tile_count needs positive n, p and s");
    if (p > n)
        throw InvalidArgument("patch size " + std::to_string(p) + " exceeds image size " + std::to_string(n));
    return (n - p) / s + 1;
}

void TilingSpec::validate() const {
    tile_count(image_rows, patch_rows, stride_rows);
    tile_count(image_cols, patch_cols, stride_cols);
}

void extract_receptive_fields_into(std::span<const double> image, const TilingSpec& tiling,
                                   std::span<double> out) {
    if (image.size() != tiling.image_size())
        throw DimensionError("image has " + std::to_string(image.size()) + " pixels, tiling expects " +
                             std::to_string(tiling.image_rows) + "x" + std::to_string(tiling.image_cols));
    const std::size_t sr = tiling.tiles_rows();
    const std::size_t sc = tiling.tiles_cols();
    const std::size_t k = tiling.patch_length();
    if (out.size() != sr * sc * k) throw DimensionError("receptive-field buffer has the wrong size");

    double* dst = out.data();
    for (std::size_t a = 0; a < sr; ++a) {
        for (std::size_t b = 0; b < sc; ++b) {
            const std::size_t top = a * tiling.stride_rows;
            const std::size_t left = b * tiling.stride_cols;
            for (std::size_t r = 0; r < tiling.patch_rows; ++r) {
                const double* src = image.data() + (top + r) * tiling.image_cols + left;
                for (std::size_t c = 0; c < tiling.patch_cols; ++c) *dst++ = src[c];
            }
        }
    }
}

std::vector<std::vector<double>> extract_receptive_fields(std::span<const double> image,
                                                          const TilingSpec& tiling) {
    tiling.validate();
    std::vector<double> flat(tiling.tiles() * tiling.patch_length());
    extract_receptive_fields_into(image, tiling, flat);
    std::vector<std::vector<double>> patches(tiling.tiles());
    const std::size_t k = tiling.patch_length();
    for (std::size_t j = 0; j < patches.size(); ++j)
        patches[j].assign(flat.begin() + static_cast<std::ptrdiff_t>(j * k),
                          flat.begin() + static_cast<std::ptrdiff_t>((j + 1) * k));
    return patches;
}

// ---------------------------------------------------------------------------
// HitMatrix

HitMatrix::HitMatrix(std::size_t n_labels, std::size_t units)
    : n_labels_(n_labels),
      units_(units),
      counts_(n_labels * units, 0),
      row_sums_(n_labels, 0),
      col_sums_(units, 0) {
    if (n_labels == 0 || units == 0) throw InvalidArgument("hit matrix needs labels and units");
}

HitMatrix::HitMatrix(std::size_t n_labels, std::size_t units, std::vector<std::uint64_t> counts)
    : HitMatrix(n_labels, units) {
    if (counts.size() != n_labels * units)
        throw DimensionError("hit matrix expects " + std::to_string(n_labels * units) + " counts");
    counts_ = std::move(counts);
    for (std::size_t l = 0; l < n_labels; ++l) {
        for (std::size_t u = 0; u < units; ++u) {
            const auto c = counts_[l * units + u];
            row_sums_[l] += c;
            col_sums_[u] += c;
            total_ += c;
        }
    }
}

void HitMatrix::increment(std::size_t label, std::size_t unit) {
    if (label >= n_labels_ || unit >= units_) throw InvalidArgument("hit matrix index out of range");
    ++counts_[label * units_ + unit];
    ++row_sums_[label];
    ++col_sums_[unit];
    ++total_;
}

HitMatrix HitMatrix::scaled(std::uint64_t factor) const {
    std::vector<std::uint64_t> c = counts_;
    for (auto& v : c) v *= factor;
    return HitMatrix(n_labels_, units_, std::move(c));
}

// ---------------------------------------------------------------------------
// DendSomModel

DendSomModel DendSomModel::create(const ModelSpec& spec, std::uint64_t seed) {
    spec.tiling.validate();
    if (spec.n_labels == 0) throw InvalidArgument("model needs at least one label");
    DendSomModel model;
    model.tiling_ = spec.tiling;
    model.schedule_ = DecaySchedule(spec.schedule);
    model.n_labels_ = spec.n_labels;
    model.bmu_ = spec.bmu;
    model.kernel_ = spec.kernel;
    Rng rng(Rng::derive(seed, 1));
    const std::size_t n = spec.tiling.tiles();
    model.grids_.reserve(n);
    model.hits_.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        model.grids_.push_back(
            SomGrid::random(spec.unit_rows, spec.unit_cols, spec.tiling.patch_length(), rng));
        model.hits_.emplace_back(spec.n_labels, spec.unit_rows * spec.unit_cols);
    }
    return model;
}

DendSomModel::DendSomModel(TilingSpec tiling, std::vector<SomGrid> grids, std::vector<HitMatrix> hits,
                           DecaySchedule schedule, std::size_t n_labels, BmuRule bmu,
                           NeighborhoodKernel kernel)
    : tiling_(tiling),
      grids_(std::move(grids)),
      schedule_(schedule),
      n_labels_(n_labels),
      bmu_(bmu),
      kernel_(kernel) {
    tiling_.validate();
    if (grids_.size() != tiling_.tiles())
        throw DimensionError("model needs " + std::to_string(tiling_.tiles()) + " grids, got " +
                             std::to_string(grids_.size()));
    for (const auto& g : grids_) {
        if (g.dim() != tiling_.patch_length()) throw DimensionError("grid dim differs from patch length");
        if (g.rows() != grids_.front().rows() || g.cols() != grids_.front().cols())
            throw DimensionError("all grids must share one lattice shape");
    }
    set_hits(std::move(hits));
}

void DendSomModel::set_hits(std::vector<HitMatrix> hits) {
    if (hits.size() != grids_.size()) throw DimensionError("one hit matrix per grid required");
    for (const auto& h : hits) {
        if (h.n_labels() != n_labels_ || h.units() != grids_.front().unit_count())
            throw DimensionError("hit matrix shape does not match the model");
        if (h.total() != hits.front().total())
            throw InvalidArgument("hit matrices must carry identical totals");
    }
    hits_ = std::move(hits);
}

std::vector<UnitIndex> identify_bmus(const DendSomModel& model, std::span<const double> image) {
    const auto& tiling = model.tiling();
    const std::size_t k = tiling.patch_length();
    std::vector<double> patches(tiling.tiles() * k);
    extract_receptive_fields_into(image, tiling, patches);
    std::vector<UnitIndex> bmus;
    bmus.reserve(model.som_count());
    const std::span<const double> all(patches);
    for (std::size_t j = 0; j < model.som_count(); ++j)
        bmus.push_back(find_bmu(all.subspan(j * k, k), model.grids()[j], model.bmu_rule()));
    return bmus;
}

void train_step(DendSomModel& model, std::span<const double> image, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= model.n_labels_)
        throw InvalidArgument("label " + std::to_string(label) + " outside [0, " +
                              std::to_string(model.n_labels_) + ")");
    for (double p : image)
        if (!std::isfinite(p)) throw NumericError("image contains a non-finite pixel");

    const auto& tiling = model.tiling_;
    const std::size_t k = tiling.patch_length();
    thread_local std::vector<double> patches;
    patches.resize(tiling.tiles() * k);
    extract_receptive_fields_into(image, tiling, patches);

    const double alpha = learning_rate(model.schedule_);
    const NeighborhoodTable table(neighborhood_radius(model.schedule_), model.kernel_,
                                  max_lattice_d2(model.unit_rows(), model.unit_cols()));
    const std::span<const double> all(patches);
    // Each SOM touches only its own grid, hit matrix and patch.
    for (std::size_t j = 0; j < model.grids_.size(); ++j) {
        const auto patch = all.subspan(j * k, k);
        const UnitIndex bmu = find_bmu(patch, model.grids_[j], model.bmu_);
        apply_update(model.grids_[j], patch, bmu, alpha, table);
        model.hits_[j].increment(static_cast<std::size_t>(label), bmu.linear);
    }
    model.schedule_.advance();
}

void maybe_rewind_schedule(DendSomModel& model, std::uint64_t step_index) {
    if (step_index == 0) throw InvalidArgument("step index starts at 1");
    auto& sched = model.schedule_;
    if (step_index % sched.iter_crit() == 0) sched.set_t(sched.t() / sched.params().r_exp);
}

void fit(DendSomModel& model, const SampleView& stream, std::size_t n_iter) {
    if (stream.empty()) throw InvalidArgument("cannot fit on an empty stream");
    if (n_iter > stream.size())
        throw InvalidArgument("n_iter " + std::to_string(n_iter) + " exceeds stream length " +
                              std::to_string(stream.size()));
    // The step index is the lifetime sample count, so consecutive calls (one
    // per task) continue a single training loop.
    for (std::size_t i = 0; i < n_iter; ++i) {
        train_step(model, stream.image(i), stream.label(i));
        maybe_rewind_schedule(model, model.samples_seen());
    }
}

void fit(DendSomModel& model, const SampleView& stream) { fit(model, stream, stream.size()); }

}  // namespace dendsom
