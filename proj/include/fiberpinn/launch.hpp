#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fiberpinn/units.hpp"

namespace fiberpinn {

enum class PulseShape { Gaussian, Sech, SuperGaussian };

/// Seedable 64-bit generator used wherever reproducible bits are needed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();  // [0, 1), 53-bit resolution

 private:
  std::uint64_t state_;
};

/// Initial complex envelope psi(0, T) in sqrt(W). Built by the make_* functions.
struct LaunchProfile {
  enum class Kind { Pulse, PulseTrain, Ook };

  Kind kind = Kind::Pulse;
  PulseShape shape = PulseShape::Gaussian;
  double t0 = 0.0;       // pulse width T0, or symbol period Ts for OOK
  double p_peak = 0.0;   // W
  double center = 0.0;   // s, single pulses only
  int order = 2;         // super-Gaussian order m
  int count = 1;
  double spacing = 0.0;  // s, pulse trains only
  std::vector<std::uint8_t> bits;
  double rise_fraction = 0.25;

  cplx operator()(double time) const;
  std::vector<cplx> sample(std::span<const double> times) const;

  double symbol_period() const { return kind == Kind::Ook ? t0 : 0.0; }
  /// Half-width of the occupied support: pulses out to 8 T0, symbols to the last edge.
  double support_half_width() const;

 private:
  double unit_pulse(double offset) const;
};

/// Throws std::invalid_argument for non-positive width/power or order < 1.
LaunchProfile make_pulse(PulseShape shape, double t0, double p_peak, double center = 0.0,
                         int order = 2);

/// `count` copies of one pulse, centred symmetrically about T = 0.
LaunchProfile make_pulse_train(PulseShape shape, double t0, double p_peak, int count,
                               double spacing, int order = 2);

/// Uniform i.i.d. bits: SplitMix64 over `seed`, bit = top bit of each draw.
std::vector<std::uint8_t> ook_bits(std::uint64_t seed, int n_symbols);

/// NRZ OOK with raised-cosine transitions lasting rise_fraction * Ts.
LaunchProfile make_ook(double baud, int n_symbols, std::uint64_t seed, double p_max,
                       double rise_fraction = 0.25);
LaunchProfile make_ook_pattern(double baud, std::vector<std::uint8_t> bits, double p_max,
                               double rise_fraction = 0.25);

struct PolarizedLaunch {
  LaunchProfile profile;
  double theta = 0.0;
  double cos_theta = 1.0;
  double sin_theta = 0.0;

  cplx x(double time) const { return cos_theta * profile(time); }
  cplx y(double time) const { return sin_theta * profile(time); }
  double p0x() const { return cos_theta * cos_theta * profile.p_peak; }
  double p0y() const { return sin_theta * sin_theta * profile.p_peak; }
};

PolarizedLaunch polarize(LaunchProfile profile, double theta);

}  // namespace fiberpinn
