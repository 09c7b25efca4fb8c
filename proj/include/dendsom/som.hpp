#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dendsom/random.hpp"

namespace dendsom {

enum class BmuRule { euclidean, cosine };

/// Denominator used inside the neighborhood exponent.
/// `linear` divides the squared lattice distance by 2*sigma; `gaussian` uses
/// the conventional 2*sigma^2 and exists for ablation only.
enum class NeighborhoodKernel { linear, gaussian };

BmuRule parse_bmu_rule(std::string_view name);
std::string_view to_string(BmuRule rule);
NeighborhoodKernel parse_kernel(std::string_view name);
std::string_view to_string(NeighborhoodKernel kernel);

class NeighborhoodTable;

/// Address of one lattice unit. `linear == row * cols + col`.
struct UnitIndex {
    std::size_t linear = 0;
    std::size_t row = 0;
    std::size_t col = 0;

    static UnitIndex from_linear(std::size_t linear, std::size_t cols) {
        return {linear, linear / cols, linear % cols};
    }
    static UnitIndex from_position(std::size_t row, std::size_t col, std::size_t cols) {
        return {row * cols + col, row, col};
    }

    friend bool operator==(const UnitIndex&, const UnitIndex&) = default;
};

/// One self-organizing map: a rows x cols lattice with a weight vector of
/// length `dim` per unit, stored row-major. Weight norms are cached for the
/// cosine rule and kept in sync by every mutation.
class SomGrid {
public:
    SomGrid() = default;
    SomGrid(std::size_t rows, std::size_t cols, std::size_t dim);

    /// Weights drawn i.i.d. uniform on [0, 0.1).
    static SomGrid random(std::size_t rows, std::size_t cols, std::size_t dim, Rng& rng);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t unit_count() const noexcept { return rows_ * cols_; }

    UnitIndex unit(std::size_t linear) const;

    std::span<const double> weight(std::size_t unit) const {
        return {weights_.data() + unit * dim_, dim_};
    }
    std::span<const double> weights() const noexcept { return weights_; }
    double weight_norm(std::size_t unit) const { return norms_[unit]; }

    void set_weight(std::size_t unit, std::span<const double> w);
    void set_weights(std::span<const double> all);

    friend bool operator==(const SomGrid& a, const SomGrid& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.dim_ == b.dim_ &&
               a.weights_ == b.weights_;
    }

private:
    friend void apply_update(SomGrid&, std::span<const double>, const UnitIndex&, double,
                             const NeighborhoodTable&);

    void refresh_norm(std::size_t unit);

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> weights_;
    std::vector<double> norms_;
};

struct ScheduleParams {
    double alpha0 = 0.95;
    double sigma0 = 4.0;
    double lambda = 1000.0;
    double alpha_crit = 0.005;
    std::uint32_t r_exp = 1;
};

/// Shared training clock plus the exponential decay parameters.
class DecaySchedule {
public:
    DecaySchedule() : DecaySchedule(ScheduleParams{}) {}
    explicit DecaySchedule(const ScheduleParams& params, std::uint64_t t = 0);

    const ScheduleParams& params() const noexcept { return params_; }
    std::uint64_t t() const noexcept { return t_; }
    void set_t(std::uint64_t t) noexcept { t_ = t; }
    void advance() noexcept { ++t_; }
    std::uint64_t iter_crit() const noexcept { return iter_crit_; }

    friend bool operator==(const DecaySchedule& a, const DecaySchedule& b) {
        return a.t_ == b.t_ && a.params_.alpha0 == b.params_.alpha0 &&
               a.params_.sigma0 == b.params_.sigma0 && a.params_.lambda == b.params_.lambda &&
               a.params_.alpha_crit == b.params_.alpha_crit && a.params_.r_exp == b.params_.r_exp;
    }

private:
    ScheduleParams params_;
    std::uint64_t t_ = 0;
    std::uint64_t iter_crit_ = 0;
};

/// floor(lambda * ln(alpha0 / alpha_crit)); throws unless the result is >= 1.
std::uint64_t iter_crit(double alpha0, double alpha_crit, double lambda);

/// max(rows, cols) / 2
double auto_sigma0(std::size_t rows, std::size_t cols);

double learning_rate(const DecaySchedule& sched);
double neighborhood_radius(const DecaySchedule& sched);

/// exp(-d^2 / (2 sigma)) for the linear kernel, exp(-d^2 / (2 sigma^2)) for
/// the gaussian one, with d the lattice distance between the two units.
double neighborhood_weight(const UnitIndex& unit, const UnitIndex& bmu, double sigma,
                           NeighborhoodKernel kernel = NeighborhoodKernel::linear);

UnitIndex bmu_euclidean(std::span<const double> patch, const SomGrid& grid);
UnitIndex bmu_cosine(std::span<const double> patch, const SomGrid& grid);
UnitIndex find_bmu(std::span<const double> patch, const SomGrid& grid, BmuRule rule);

/// Cosine similarity with the zero-norm convention (similarity 0).
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Neighborhood weights tabulated by squared lattice distance for one sigma.
/// Values are bit-identical to `neighborhood_weight`. Entries past the first
/// exact zero are zero as well and are not stored.
class NeighborhoodTable {
public:
    NeighborhoodTable(double sigma, NeighborhoodKernel kernel, std::size_t max_d2);

    double operator()(std::size_t d2) const { return d2 < values_.size() ? values_[d2] : 0.0; }

private:
    std::vector<double> values_;
};

/// w_i += alpha * h(i, bmu) * (patch - w_i) for every unit with a non-zero
/// coefficient. Throws NumericError on non-finite patch or coefficients.
void apply_update(SomGrid& grid, std::span<const double> patch, const UnitIndex& bmu, double alpha,
                  const NeighborhoodTable& table);

void update_weights(SomGrid& grid, std::span<const double> patch, const UnitIndex& bmu,
                    const DecaySchedule& sched,
                    NeighborhoodKernel kernel = NeighborhoodKernel::linear);

/// Largest squared lattice distance on a rows x cols grid.
inline std::size_t max_lattice_d2(std::size_t rows, std::size_t cols) {
    return (rows - 1) * (rows - 1) + (cols - 1) * (cols - 1);
}

}  // namespace dendsom
