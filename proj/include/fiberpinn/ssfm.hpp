#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fiberpinn/errors.hpp"
#include "fiberpinn/launch.hpp"
#include "fiberpinn/units.hpp"

namespace fiberpinn {

/// Uniform periodic time grid T_j = -t_max + j dT, dT = 2 t_max / n (t_max excluded).
struct FieldGrid {
  std::vector<double> times;
  std::vector<cplx> values;

  std::size_t size() const { return times.size(); }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  double energy() const;  // integral of |psi|^2 dT, J
};

/// n must be a power of two >= 64.
std::vector<double> make_time_grid(std::size_t n, double t_max);
FieldGrid sample_launch(const LaunchProfile& profile, std::size_t n, double t_max);
FieldGrid sample_launch_x(const PolarizedLaunch& launch, std::size_t n, double t_max);
FieldGrid sample_launch_y(const PolarizedLaunch& launch, std::size_t n, double t_max);

/// Snapshots of the field along z; distances[0] == 0 holds the launch.
struct SolutionSurface {
  std::vector<double> times;
  std::vector<double> distances;
  std::vector<std::vector<cplx>> fields;  // fields[i][j] at (distances[i], times[j])

  std::size_t n_snapshots() const { return distances.size(); }
  FieldGrid snapshot(std::size_t i) const { return {times, fields.at(i)}; }
};

struct ManakovSurface {
  SolutionSurface x;
  SolutionSurface y;
};

/// Switches for the higher-order terms; attenuation, beta2 and Kerr are always on.
struct GnlseTerms {
  bool third_order = true;
  bool self_steepening = true;
  bool raman = true;  // effective only when tau > 0
};

/// Boundary magnitude must stay below this fraction of the peak magnitude.
inline constexpr double kWindowTolerance = 1e-6;

/// Symmetrized split-step for
///   dpsi/dz = -(alpha/2) psi - i (b2/2) psi_TT + (b3/6) psi_TTT
///             + i gamma (|psi|^2 psi + (i/w0) d(|psi|^2 psi)/dT - tau psi d|psi|^2/dT).
/// Steps are subdivided so every requested snapshot lands on a step boundary.
/// Throws WindowError naming the first snapshot whose boundary is not quiet.
SolutionSurface propagate_gnlse(const FieldGrid& launch, const FiberParams& fiber,
                                const DerivedParams& derived, double l_max, int n_steps,
                                std::span<const double> snapshots, GnlseTerms terms = {});

/// Constant-birefringence Manakov pair: walk-off +-(delta_beta1/2) d/dT, 2/3 cross-phase.
/// No third-order dispersion, self-steepening or Raman terms.
ManakovSurface propagate_manakov(const FieldGrid& launch_x, const FieldGrid& launch_y,
                                 const FiberParams& fiber, const DerivedParams& derived,
                                 double l_max, int n_steps, std::span<const double> snapshots);

inline constexpr int kMaxAutoSteps = 1 << 20;

template <class Surface>
struct AutoStepResult {
  Surface surface;
  int n_steps = 0;
  double last_change = 0.0;
};

namespace detail {
double max_relative_change(const SolutionSurface& coarse, const SolutionSurface& fine);
double max_relative_change(const ManakovSurface& coarse, const ManakovSurface& fine);
}  // namespace detail

/// Doubles the step count until the final snapshot changes by less than rel_tol
/// (max |fine - coarse| / max |fine|) and returns the finer run.
template <class Propagate>
auto auto_step(Propagate&& propagate, double rel_tol, int n_start = 8) {
  using Surface = decltype(propagate(n_start));
  if (!(rel_tol > 0.0)) throw std::invalid_argument("auto_step: rel_tol must be > 0");
  int n = std::max(1, n_start);
  Surface coarse = propagate(n);
  while (true) {
    if (n > kMaxAutoSteps / 2) throw NumericalError("auto_step: refinement cap of 2^20 steps exceeded");
    n *= 2;
    Surface fine = propagate(n);
    const double change = detail::max_relative_change(coarse, fine);
    if (change < rel_tol) return AutoStepResult<Surface>{std::move(fine), n, change};
    coarse = std::move(fine);
  }
}

}  // namespace fiberpinn
