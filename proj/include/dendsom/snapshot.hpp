#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dendsom/model.hpp"
#include "dendsom/som.hpp"

namespace dendsom {

/// Binary snapshots. Every file starts with the 8-byte magic "DENDSOM1"
/// followed by a little-endian u32 record kind; all integers are little-endian
/// u64 and all reals IEEE-754 binary64.
///
/// kind 1 (grid):  rows, cols, dim, schedule, weights[rows*cols*dim]
/// kind 2 (model): tiling[6], n_labels, bmu(u8), kernel(u8), schedule,
///                 unit_rows, unit_cols, n_grids,
///                 weights[n_grids][units*dim], hits[n_grids][n_labels*units]
/// schedule:       alpha0, sigma0, lambda, alpha_crit (f64), r_exp (u32), t (u64)
inline constexpr char kSnapshotMagic[8] = {'D', 'E', 'N', 'D', 'S', 'O', 'M', '1'};

struct GridSnapshot {
    SomGrid grid;
    DecaySchedule schedule;
};

std::vector<std::uint8_t> encode_grid(const SomGrid& grid, const DecaySchedule& schedule);
GridSnapshot decode_grid(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_model(const DendSomModel& model);
DendSomModel decode_model(std::span<const std::uint8_t> bytes);

void save_grid(const SomGrid& grid, const DecaySchedule& schedule, const std::filesystem::path& path);
GridSnapshot load_grid(const std::filesystem::path& path);

void save_model(const DendSomModel& model, const std::filesystem::path& path);
DendSomModel load_model(const std::filesystem::path& path);

}  // namespace dendsom
