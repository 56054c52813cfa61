#include "fiberpinn/launch.hpp"

#include <cmath>
#include <stdexcept>

namespace fiberpinn {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double LaunchProfile::unit_pulse(double x) const {
  const double r = x / t0;
  switch (shape) {
    case PulseShape::Gaussian:
      return std::exp(-0.5 * r * r);
    case PulseShape::Sech:
      // cosh overflows near |r| = 710
      return std::abs(r) > 350.0 ? 0.0 : 1.0 / std::cosh(r);
    case PulseShape::SuperGaussian:
      return std::exp(-0.5 * std::pow(r * r, order));
  }
  return 0.0;
}

cplx LaunchProfile::operator()(double time) const {
  const double amp = std::sqrt(p_peak);
  switch (kind) {
    case Kind::Pulse:
      return amp * unit_pulse(time - center);
    case Kind::PulseTrain: {
      double sum = 0.0;
      for (int k = 0; k < count; ++k) {
        const double c = (k - 0.5 * (count - 1)) * spacing;
        sum += unit_pulse(time - c);
      }
      return amp * sum;
    }
    case Kind::Ook: {
      // Symbol k occupies [start + k Ts, start + (k+1) Ts]; each edge is a
      // raised-cosine ramp of width r Ts centred on the boundary.
      const double ts = t0;
      const int n = static_cast<int>(bits.size());
      const double start = -0.5 * n * ts;
      const double half_ramp = 0.5 * rise_fraction * ts;
      const double pos = (time - start) / ts;
      const int k0 = static_cast<int>(std::floor(pos));
      double level = 0.0;
      for (int k = k0 - 1; k <= k0 + 1; ++k) {
        if (k < 0 || k >= n || bits[k] == 0) continue;
        const double mid = start + (k + 0.5) * ts;
        const double d = std::abs(time - mid) - 0.5 * ts;  // signed distance past the edge
        if (d <= -half_ramp) {
          level += 1.0;
        } else if (d < half_ramp) {
          level += 0.5 * (1.0 - std::sin(kPi * d / (2.0 * half_ramp)));
        }
      }
      return amp * level;
    }
  }
  return 0.0;
}

std::vector<cplx> LaunchProfile::sample(std::span<const double> times) const {
  std::vector<cplx> out(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) out[i] = (*this)(times[i]);
  return out;
}

double LaunchProfile::support_half_width() const {
  switch (kind) {
    case Kind::Pulse:
      return std::abs(center) + 8.0 * t0;
    case Kind::PulseTrain:
      return 0.5 * (count - 1) * spacing + 8.0 * t0;
    case Kind::Ook:
      return 0.5 * static_cast<double>(bits.size()) * t0;
  }
  return 0.0;
}

LaunchProfile make_pulse(PulseShape shape, double t0, double p_peak, double center, int order) {
  if (!(t0 > 0.0)) throw std::invalid_argument("pulse: width must be > 0");
  if (!(p_peak > 0.0)) throw std::invalid_argument("pulse: peak power must be > 0");
  if (shape == PulseShape::SuperGaussian && order < 1)
    throw std::invalid_argument("pulse: super-Gaussian order must be >= 1");
  LaunchProfile p;
  p.kind = LaunchProfile::Kind::Pulse;
  p.shape = shape;
  p.t0 = t0;
  p.p_peak = p_peak;
  p.center = center;
  p.order = order;
  return p;
}

LaunchProfile make_pulse_train(PulseShape shape, double t0, double p_peak, int count,
                               double spacing, int order) {
  if (count < 1) throw std::invalid_argument("pulse train: count must be >= 1");
  if (!(spacing > 0.0)) throw std::invalid_argument("pulse train: spacing must be > 0");
  LaunchProfile p = make_pulse(shape, t0, p_peak, 0.0, order);
  if (count == 1) return p;
  p.kind = LaunchProfile::Kind::PulseTrain;
  p.count = count;
  p.spacing = spacing;
  return p;
}

std::vector<std::uint8_t> ook_bits(std::uint64_t seed, int n_symbols) {
  if (n_symbols < 1) throw std::invalid_argument("ook: n_symbols must be >= 1");
  SplitMix64 rng(seed);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n_symbols));
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next() >> 63);
  return bits;
}

LaunchProfile make_ook_pattern(double baud, std::vector<std::uint8_t> bits, double p_max,
                               double rise_fraction) {
  if (!(baud > 0.0)) throw std::invalid_argument("ook: baud must be > 0");
  if (!(p_max > 0.0)) throw std::invalid_argument("ook: p_max must be > 0");
  if (!(rise_fraction > 0.0 && rise_fraction <= 0.5))
    throw std::invalid_argument("ook: rise_fraction must be in (0, 0.5]");
  if (bits.empty()) throw std::invalid_argument("ook: empty bit pattern");
  LaunchProfile p;
  p.kind = LaunchProfile::Kind::Ook;
  p.t0 = 1.0 / baud;
  p.p_peak = p_max;
  p.bits = std::move(bits);
  p.rise_fraction = rise_fraction;
  return p;
}

LaunchProfile make_ook(double baud, int n_symbols, std::uint64_t seed, double p_max,
                       double rise_fraction) {
  return make_ook_pattern(baud, ook_bits(seed, n_symbols), p_max, rise_fraction);
}

PolarizedLaunch polarize(LaunchProfile profile, double theta) {
  PolarizedLaunch pl;
  pl.profile = std::move(profile);
  pl.theta = theta;
  pl.cos_theta = std::cos(theta);
  pl.sin_theta = std::sin(theta);
  // cos(pi/2) and sin(pi) are 1e-16 in floating point; axis launches stay exact.
  if (std::abs(pl.cos_theta) < 1e-15) pl.cos_theta = 0.0;
  if (std::abs(pl.sin_theta) < 1e-15) pl.sin_theta = 0.0;
  return pl;
}

}  // namespace fiberpinn
