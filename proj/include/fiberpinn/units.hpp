#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>

namespace fiberpinn {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

// Table-I style units <-> SI. Only the config boundary uses these.
inline constexpr double ps_nm_km_to_si(double d) { return d * 1e-6; }    // -> s/m^2
inline constexpr double si_to_ps_nm_km(double d) { return d * 1e6; }
inline constexpr double ps_nm2_km_to_si(double s) { return s * 1e3; }    // -> s/m^3
inline constexpr double si_to_ps_nm2_km(double s) { return s * 1e-3; }

/// Physical fiber constants, SI throughout.
struct FiberParams {
  double alpha = 0.0;        // power attenuation, 1/m
  double lambda0 = 1.55e-6;  // m
  double dispersion = 0.0;   // D, s/m^2
  double slope = 0.0;        // S, s/m^3
  double gamma = 0.0;        // 1/(W m)
  double tau = 0.0;          // delayed Raman response, s
  double a_eff = 8e-11;      // m^2, carried for config fidelity only
  std::optional<double> delta_beta1;  // s/m, birefringent walk-off

  /// Throws std::invalid_argument when a physical bound is violated.
  void validate() const;
};

/// The three parameter columns used by the pulse, signal and birefringence tasks.
FiberParams pulse_task_fiber();
FiberParams signal_task_fiber();
FiberParams birefringence_task_fiber(double delta_beta1 = 2e-14);

struct DerivedParams {
  double beta2 = 0.0;   // s^2/m
  double beta3 = 0.0;   // s^3/m
  double omega0 = 0.0;  // rad/s
};

// beta2 = -D lambda^2 / (2 pi c), beta3 = (S + 2D/lambda) lambda^4 / (4 pi^2 c^2)
DerivedParams derive_secondary_params(const FiberParams& fiber);

/// Maps physical (T, z, psi) onto the unit domain zeta in [0,1], t in [-1,1].
struct NormalizationFrame {
  double t_ref = 0.0;  // T0 (pulses) or Ts (signals), s
  double p_ref = 0.0;  // W
  double l_d = 0.0;    // dispersion length, m
  double l_nl = 0.0;   // nonlinear length, m (infinite when gamma == 0)
  double l_max = 0.0;  // m
  double t_max = 0.0;  // s
  double k1 = 0.0;     // l_max / l_d
  double k2 = 0.0;     // t_max / t_ref

  /// Same geometry, different field scale (per-polarization powers).
  NormalizationFrame with_power(double p) const;
};

/// Throws std::invalid_argument on non-positive inputs or beta2 == 0.
NormalizationFrame make_frame(double t_ref, double p_ref, double l_max, double t_max,
                              const DerivedParams& derived, const FiberParams& fiber);

enum class CoeffKind { PulseA, SignalB, ManakovA };

/// Dimensionless coefficients of the normalized equations, stored 1-based
/// through a(i): seven for PulseA/SignalB, five for ManakovA.
struct PdeCoeffs {
  CoeffKind kind = CoeffKind::PulseA;
  std::array<double, 7> values{};

  std::size_t size() const { return kind == CoeffKind::ManakovA ? 5 : 7; }
  double a(std::size_t i) const { return values.at(i - 1); }
};

PdeCoeffs pde_coeffs(const NormalizationFrame& frame, const FiberParams& fiber,
                     const DerivedParams& derived, CoeffKind kind);

struct PhysicalSample {
  double time = 0.0;      // T, s
  double distance = 0.0;  // z, m
  cplx field{};           // psi, sqrt(W)
};

struct NormalizedSample {
  double t = 0.0;
  double zeta = 0.0;
  cplx u{};
};

NormalizedSample normalize(const NormalizationFrame& frame, const PhysicalSample& s);
PhysicalSample denormalize(const NormalizationFrame& frame, const NormalizedSample& s);

}  // namespace fiberpinn
