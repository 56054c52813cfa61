#include "fiberpinn/units.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fiberpinn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

FiberParams table_column(double d_ps_nm_km, double s_ps_nm2_km, double tau) {
  FiberParams f;
  f.alpha = 4.605e-5;
  f.lambda0 = 1.55e-6;
  f.dispersion = ps_nm_km_to_si(d_ps_nm_km);
  f.slope = ps_nm2_km_to_si(s_ps_nm2_km);
  f.gamma = 0.0013;
  f.tau = tau;
  f.a_eff = 8e-11;
  return f;
}

}  // namespace

void FiberParams::validate() const {
  require(std::isfinite(alpha) && alpha >= 0.0, "fiber: alpha must be >= 0");
  require(std::isfinite(lambda0) && lambda0 > 0.0, "fiber: lambda0 must be > 0");
  require(std::isfinite(dispersion), "fiber: dispersion must be finite");
  require(std::isfinite(slope), "fiber: slope must be finite");
  require(std::isfinite(gamma) && gamma >= 0.0, "fiber: gamma must be >= 0");
  require(std::isfinite(tau) && tau >= 0.0, "fiber: tau must be >= 0");
  require(std::isfinite(a_eff) && a_eff > 0.0, "fiber: a_eff must be > 0");
  if (delta_beta1) require(std::isfinite(*delta_beta1), "fiber: delta_beta1 must be finite");
}

FiberParams pulse_task_fiber() { return table_column(15.6916, -0.12332, 2.6e-15); }

FiberParams signal_task_fiber() { return table_column(17.0, 0.056, 2.6e-15); }

FiberParams birefringence_task_fiber(double delta_beta1) {
  FiberParams f = table_column(17.0, 0.0, 0.0);
  f.delta_beta1 = delta_beta1;
  return f;
}

DerivedParams derive_secondary_params(const FiberParams& fiber) {
  if (!(fiber.lambda0 > 0.0)) throw std::invalid_argument("fiber: lambda0 must be > 0");
  const double c = kSpeedOfLight;
  const double l = fiber.lambda0;
  DerivedParams d;
  d.beta2 = -fiber.dispersion * l * l / (2.0 * kPi * c);
  d.beta3 = (fiber.slope + 2.0 * fiber.dispersion / l) * (l * l * l * l) / (4.0 * kPi * kPi * c * c);
  d.omega0 = 2.0 * kPi * c / l;
  return d;
}

NormalizationFrame NormalizationFrame::with_power(double p) const {
  NormalizationFrame f = *this;
  f.p_ref = p;
  return f;
}

NormalizationFrame make_frame(double t_ref, double p_ref, double l_max, double t_max,
                              const DerivedParams& derived, const FiberParams& fiber) {
  require(t_ref > 0.0 && p_ref > 0.0 && l_max > 0.0 && t_max > 0.0,
          "frame: t_ref, p_ref, l_max and t_max must be positive");
  require(std::abs(derived.beta2) > 0.0, "frame: beta2 == 0, dispersion length undefined");
  NormalizationFrame f;
  f.t_ref = t_ref;
  f.p_ref = p_ref;
  f.l_max = l_max;
  f.t_max = t_max;
  f.l_d = t_ref * t_ref / std::abs(derived.beta2);
  f.l_nl = fiber.gamma > 0.0 ? 1.0 / (fiber.gamma * p_ref) : std::numeric_limits<double>::infinity();
  f.k1 = l_max / f.l_d;
  f.k2 = t_max / t_ref;
  return f;
}

PdeCoeffs pde_coeffs(const NormalizationFrame& frame, const FiberParams& fiber,
                     const DerivedParams& derived, CoeffKind kind) {
  PdeCoeffs c;
  c.kind = kind;
  const double ld = frame.l_d;
  const double t0 = frame.t_ref;
  const double s2 = sign_of(derived.beta2);
  if (kind == CoeffKind::ManakovA) {
    if (!fiber.delta_beta1) throw std::invalid_argument("coeffs: ManakovA needs delta_beta1");
    c.values = {1.0,
                fiber.alpha * ld / 2.0,
                *fiber.delta_beta1 * ld / (2.0 * t0),
                -s2 / 2.0,
                fiber.gamma * ld,
                0.0,
                0.0};
    return c;
  }
  // PulseA and SignalB share one form; only the reference time/power differ.
  const double gp = fiber.gamma * frame.p_ref;
  c.values = {1.0,
              fiber.alpha * ld / 2.0,
              -s2 / 2.0,
              -derived.beta3 * ld / (6.0 * t0 * t0 * t0),
              gp * ld,
              gp * ld / (derived.omega0 * t0),
              -gp * ld * fiber.tau / t0};
  return c;
}

NormalizedSample normalize(const NormalizationFrame& frame, const PhysicalSample& s) {
  return {s.time / frame.t_max, s.distance / frame.l_max, s.field / std::sqrt(frame.p_ref)};
}

PhysicalSample denormalize(const NormalizationFrame& frame, const NormalizedSample& s) {
  return {s.t * frame.t_max, s.zeta * frame.l_max, s.u * std::sqrt(frame.p_ref)};
}

}  // namespace fiberpinn
