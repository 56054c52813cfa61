#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fiberpinn/mlp.hpp"
#include "fiberpinn/ssfm.hpp"
#include "fiberpinn/units.hpp"

namespace fiberpinn {

/// Denormalized network field on a (distance x time) grid. Queries outside
/// [0, l_max] x [-t_max, t_max] throw std::out_of_range.
SolutionSurface predict_surface(const MlpModel& model, const NormalizationFrame& frame,
                                std::span<const double> distances, std::span<const double> times,
                                const KernelOptions& opts = {});

/// Same for a 4-output network; px/py are the per-polarization normalization powers.
ManakovSurface predict_manakov(const MlpModel& model, const NormalizationFrame& frame, double px, double py,
                               std::span<const double> distances, std::span<const double> times,
                               const KernelOptions& opts = {});

struct NrmseResult {
  std::vector<double> per_snapshot;
  double aggregate = 0.0;  // mean over snapshots
};

/// ||pred - ref|| / ||ref|| per snapshot over complex samples. Grids must match;
/// a zero-norm reference snapshot throws std::invalid_argument.
NrmseResult nrmse(const SolutionSurface& pred, const SolutionSurface& ref);

/// Power folded into 2-symbol traces with a 1-symbol stride.
struct EyeDiagram {
  double t_s = 0.0;
  std::size_t samples_per_symbol = 0;
  std::vector<std::vector<double>> traces;  // W, each 2 * samples_per_symbol long
  // histogram[time bin][power bin]; one time bin per trace sample
  std::vector<std::vector<std::uint64_t>> histogram;
  double power_max = 0.0;  // upper edge of the last power bin

  std::size_t trace_length() const { return 2 * samples_per_symbol; }
};

/// The grid must hold a whole number (>= 4) of symbols of `samples_per_symbol`
/// samples each, with dt * samples_per_symbol == t_s.
EyeDiagram eye_diagram(const FieldGrid& field, double t_s, std::size_t samples_per_symbol,
                       std::size_t power_bins = 64);

/// Lowest mid-symbol power among 1-symbols minus the highest among 0-symbols;
/// bits[k] is the symbol starting at trace k's first half.
double eye_opening(const EyeDiagram& eye, std::span<const std::uint8_t> bits);

/// Samples of `field` with times in [t_begin, t_end), edges rounded to the nearest sample.
FieldGrid crop(const FieldGrid& field, double t_begin, double t_end);

}  // namespace fiberpinn
