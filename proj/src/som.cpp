#include "dendsom/som.hpp"

#include <cmath>
#include <string>

#include "dendsom/error.hpp"
#include "kernels.hpp"

namespace dendsom {

BmuRule parse_bmu_rule(std::string_view name) {
    if (name == "cosine") return BmuRule::cosine;
    if (name == "euclidean") return BmuRule::euclidean;
    throw InvalidArgument("unknown BMU rule '" + std::string(name) + "' (expected cosine|euclidean)");
}

std::string_view to_string(BmuRule rule) {
    return rule == BmuRule::cosine ? "cosine" : "euclidean";
}

NeighborhoodKernel parse_kernel(std::string_view name) {
    if (name == "linear") return NeighborhoodKernel::linear;
    if (name == "gaussian") return NeighborhoodKernel::gaussian;
    throw InvalidArgument("unknown neighborhood kernel '" + std::string(name) +
                          "' (expected linear|gaussian)");
}

std::string_view to_string(NeighborhoodKernel kernel) {
    return kernel == NeighborhoodKernel::linear ? "linear" : "gaussian";
}

// ---------------------------------------------------------------------------
// SomGrid

SomGrid::SomGrid(std::size_t rows, std::size_t cols, std::size_t dim)
    : rows_(rows), cols_(cols), dim_(dim), weights_(rows * cols * dim, 0.0), norms_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0 || dim == 0)
        throw InvalidArgument("SOM grid needs positive rows, cols and dim");
}

SomGrid SomGrid::random(std::size_t rows, std::size_t cols, std::size_t dim, Rng& rng) {
    SomGrid grid(rows, cols, dim);
    for (double& w : grid.weights_) w = 0.1 * rng.uniform01();
    for (std::size_t u = 0; u < grid.unit_count(); ++u) grid.refresh_norm(u);
    return grid;
}

UnitIndex SomGrid::unit(std::size_t linear) const {
    if (linear >= unit_count())
        throw InvalidArgument("unit index " + std::to_string(linear) + " out of range");
    return UnitIndex::from_linear(linear, cols_);
}

void SomGrid::set_weight(std::size_t unit, std::span<const double> w) {
    if (unit >= unit_count()) throw InvalidArgument("unit index out of range");
    if (w.size() != dim_)
        throw DimensionError("weight length " + std::to_string(w.size()) + " != grid dim " +
                             std::to_string(dim_));
    for (std::size_t j = 0; j < dim_; ++j) {
        if (!std::isfinite(w[j])) throw NumericError("non-finite weight entry");
        weights_[unit * dim_ + j] = w[j];
    }
    refresh_norm(unit);
}

void SomGrid::set_weights(std::span<const double> all) {
    if (all.size() != weights_.size())
        throw DimensionError("expected " + std::to_string(weights_.size()) + " weight entries, got " +
                             std::to_string(all.size()));
    for (std::size_t u = 0; u < unit_count(); ++u) set_weight(u, all.subspan(u * dim_, dim_));
}

void SomGrid::refresh_norm(std::size_t unit) {
    const auto w = weight(unit);
    norms_[unit] = std::sqrt(detail::dot(w.data(), w.data(), dim_));
}

// ---------------------------------------------------------------------------
// Schedules

std::uint64_t iter_crit(double alpha0, double alpha_crit, double lambda) {
    if (!(alpha0 > 0.0) || !(alpha_crit > 0.0) || !(lambda > 0.0) || !(alpha_crit < alpha0))
        throw InvalidArgument("iter_crit needs 0 < alpha_crit < alpha0 and lambda > 0");
    const double value = std::floor(lambda * std::log(alpha0 / alpha_crit));
    if (!(value >= 1.0) || !std::isfinite(value))
        throw InvalidArgument("iter_crit must be a positive integer, got " + std::to_string(value));
    return static_cast<std::uint64_t>(value);
}

double auto_sigma0(std::size_t rows, std::size_t cols) {
    return static_cast<double>(std::max(rows, cols)) / 2.0;
}

DecaySchedule::DecaySchedule(const ScheduleParams& params, std::uint64_t t) : params_(params), t_(t) {
    if (!(params.alpha0 > 0.0 && params.alpha0 <= 1.0))
        throw InvalidArgument("alpha0 must lie in (0, 1]");
    if (!(params.sigma0 > 0.0) || !std::isfinite(params.sigma0))
        throw InvalidArgument("sigma0 must be positive");
    if (!(params.lambda > 0.0) || !std::isfinite(params.lambda))
        throw InvalidArgument("lambda must be positive");
    if (params.r_exp == 0) throw InvalidArgument("r_exp must be a positive integer");
    iter_crit_ = dendsom::iter_crit(params.alpha0, params.alpha_crit, params.lambda);
}

double learning_rate(const DecaySchedule& sched) {
    return sched.params().alpha0 * std::exp(-static_cast<double>(sched.t()) / sched.params().lambda);
}

double neighborhood_radius(const DecaySchedule& sched) {
    return sched.params().sigma0 * std::exp(-static_cast<double>(sched.t()) / sched.params().lambda);
}

namespace {

double kernel_value(std::size_t d2, double sigma, NeighborhoodKernel kernel) {
    const double denom = kernel == NeighborhoodKernel::linear ? 2.0 * sigma : 2.0 * sigma * sigma;
    return std::exp(-static_cast<double>(d2) / denom);
}

std::size_t lattice_d2(const UnitIndex& a, const UnitIndex& b) {
    const std::size_t dr = a.row > b.row ? a.row - b.row : b.row - a.row;
    const std::size_t dc = a.col > b.col ? a.col - b.col : b.col - a.col;
    return dr * dr + dc * dc;
}

void check_patch(std::span<const double> patch, const SomGrid& grid) {
    if (patch.size() != grid.dim())
        throw DimensionError("patch length " + std::to_string(patch.size()) + " != grid dim " +
                             std::to_string(grid.dim()));
}

}  // namespace

double neighborhood_weight(const UnitIndex& unit, const UnitIndex& bmu, double sigma,
                           NeighborhoodKernel kernel) {
    return kernel_value(lattice_d2(unit, bmu), sigma, kernel);
}

NeighborhoodTable::NeighborhoodTable(double sigma, NeighborhoodKernel kernel, std::size_t max_d2) {
    values_.reserve(max_d2 + 1);
    for (std::size_t d2 = 0; d2 <= max_d2; ++d2) {
        const double h = kernel_value(d2, sigma, kernel);
        if (h == 0.0) break;
        values_.push_back(h);
    }
}

// ---------------------------------------------------------------------------
// BMU selection

UnitIndex bmu_euclidean(std::span<const double> patch, const SomGrid& grid) {
    check_patch(patch, grid);
    const std::size_t k = grid.dim();
    const double* w = grid.weights().data();
    std::size_t best = 0;
    double best_d = detail::squared_distance(patch.data(), w, k);
    for (std::size_t u = 1; u < grid.unit_count(); ++u) {
        const double d = detail::squared_distance(patch.data(), w + u * k, k);
        if (d < best_d) {
            best_d = d;
            best = u;
        }
    }
    return UnitIndex::from_linear(best, grid.cols());
}

UnitIndex bmu_cosine(std::span<const double> patch, const SomGrid& grid) {
    check_patch(patch, grid);
    const std::size_t k = grid.dim();
    const double patch_norm = std::sqrt(detail::dot(patch.data(), patch.data(), k));
    if (patch_norm == 0.0) return UnitIndex::from_linear(0, grid.cols());
    const double* w = grid.weights().data();
    std::size_t best = 0;
    double best_s = 0.0;
    for (std::size_t u = 0; u < grid.unit_count(); ++u) {
        const double wn = grid.weight_norm(u);
        const double s = wn == 0.0 ? 0.0 : detail::dot(patch.data(), w + u * k, k) / (patch_norm * wn);
        if (u == 0 || s > best_s) {
            best_s = s;
            best = u;
        }
    }
    return UnitIndex::from_linear(best, grid.cols());
}

UnitIndex find_bmu(std::span<const double> patch, const SomGrid& grid, BmuRule rule) {
    return rule == BmuRule::cosine ? bmu_cosine(patch, grid) : bmu_euclidean(patch, grid);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("cosine_similarity: length mismatch");
    const double na = std::sqrt(detail::dot(a.data(), a.data(), a.size()));
    const double nb = std::sqrt(detail::dot(b.data(), b.data(), b.size()));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return detail::dot(a.data(), b.data(), a.size()) / (na * nb);
}

// ---------------------------------------------------------------------------
// Weight update

void apply_update(SomGrid& grid, std::span<const double> patch, const UnitIndex& bmu, double alpha,
                  const NeighborhoodTable& table) {
    check_patch(patch, grid);
    if (bmu.linear >= grid.unit_count()) throw InvalidArgument("BMU index out of range");
    if (!std::isfinite(alpha)) throw NumericError("non-finite learning rate");
    for (double x : patch)
        if (!std::isfinite(x)) throw NumericError("non-finite patch entry");

    const std::size_t k = grid.dim();
    const std::size_t cols = grid.cols();
    for (std::size_t u = 0; u < grid.unit_count(); ++u) {
        const UnitIndex unit = UnitIndex::from_linear(u, cols);
        const double coef = alpha * table(lattice_d2(unit, bmu));
        if (coef == 0.0) continue;
        if (!std::isfinite(coef)) throw NumericError("non-finite update coefficient");
        double* w = grid.weights_.data() + u * k;
        for (std::size_t j = 0; j < k; ++j) w[j] += coef * (patch[j] - w[j]);
        grid.refresh_norm(u);
    }
}

void update_weights(SomGrid& grid, std::span<const double> patch, const UnitIndex& bmu,
                    const DecaySchedule& sched, NeighborhoodKernel kernel) {
    const NeighborhoodTable table(neighborhood_radius(sched), kernel,
                                  max_lattice_d2(grid.rows(), grid.cols()));
    apply_update(grid, patch, bmu, learning_rate(sched), table);
}

}  // namespace dendsom
