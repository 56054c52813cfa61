#include "doctest.h"

#include <cmath>

#include "fiberpinn/launch.hpp"
#include "fiberpinn/units.hpp"

using namespace fiberpinn;

namespace {
double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }
}  // namespace

TEST_CASE("derived parameters") {
  SUBCASE("zero dispersion") {
    FiberParams f = pulse_task_fiber();
    f.dispersion = 0.0;
    f.slope = 0.0;
    const auto d = derive_secondary_params(f);
    CHECK(d.beta2 == 0.0);
    CHECK(d.beta3 == 0.0);
  }
  SUBCASE("17 ps/nm/km at 1550 nm") {
    const auto d = derive_secondary_params(signal_task_fiber());
    CHECK(rel(d.beta2, -2.1682619391414894e-26) < 1e-12);
    CHECK(d.omega0 == 2.0 * kPi * kSpeedOfLight / 1.55e-6);
  }
  SUBCASE("pulse task column") {
    const auto d = derive_secondary_params(pulse_task_fiber());
    CHECK(rel(d.beta2, -2.0013822967195644e-26) < 1e-12);
    CHECK(rel(d.beta3, -1.6767550202555322e-40) < 1e-12);
  }
  SUBCASE("beta2 sign opposes D") {
    FiberParams f = pulse_task_fiber();
    f.dispersion = -f.dispersion;
    CHECK(derive_secondary_params(f).beta2 > 0.0);
  }
}

TEST_CASE("table units round-trip") {
  for (const auto& f : {pulse_task_fiber(), signal_task_fiber(), birefringence_task_fiber()}) {
    const double d = si_to_ps_nm_km(f.dispersion);
    CHECK(std::abs(ps_nm_km_to_si(d) - f.dispersion) <= 1e-12 * std::abs(f.dispersion));
    const double s = si_to_ps_nm2_km(f.slope);
    CHECK(std::abs(ps_nm2_km_to_si(s) - f.slope) <= 1e-12 * std::abs(f.slope));
    CHECK_NOTHROW(f.validate());
  }
  CHECK(rel(si_to_ps_nm_km(pulse_task_fiber().dispersion), 15.6916) < 1e-12);
  CHECK(rel(si_to_ps_nm2_km(signal_task_fiber().slope), 0.056) < 1e-12);
}

TEST_CASE("fiber validation") {
  FiberParams f = pulse_task_fiber();
  f.alpha = -1.0;
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);
  f = pulse_task_fiber();
  f.a_eff = 0.0;
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);
}

TEST_CASE("make_frame") {
  const FiberParams f = pulse_task_fiber();
  DerivedParams d;
  d.beta2 = -2.0e-26;
  const auto fr = make_frame(50e-12, 1e-3, 100e3, 400e-12, d, f);
  CHECK(rel(fr.l_d, 125e3) < 1e-12);
  CHECK(rel(fr.k1, 0.8) < 1e-12);
  CHECK(rel(fr.l_nl, 769230.76923076923) < 1e-12);
  CHECK(fr.k2 == doctest::Approx(8.0).epsilon(1e-15));

  CHECK(make_frame(50e-12, 1e-3, 100e3, 50e-12, d, f).k2 == 1.0);
  CHECK(make_frame(50e-12, 1e-3, 125e3, 50e-12, d, f).k1 == doctest::Approx(1.0).epsilon(1e-15));

  DerivedParams flat;
  CHECK_THROWS_AS(make_frame(50e-12, 1e-3, 100e3, 400e-12, flat, f), std::invalid_argument);
  CHECK_THROWS_AS(make_frame(-1.0, 1e-3, 100e3, 400e-12, d, f), std::invalid_argument);
}

TEST_CASE("pde coefficients") {
  const FiberParams f = pulse_task_fiber();
  const auto d = derive_secondary_params(f);
  const auto fr = make_frame(50e-12, 1e-3, 100e3, 400e-12, d, f);
  const auto c = pde_coeffs(fr, f, d, CoeffKind::PulseA);
  CHECK(c.size() == 7);
  CHECK(c.a(1) == 1.0);
  CHECK(rel(c.a(2), 2.8761371625176173) < 1e-12);
  CHECK(c.a(3) == 0.5);
  CHECK(rel(c.a(4), 2.7926615569713594e-5) < 1e-11);
  CHECK(rel(c.a(5), 0.16238776596190673) < 1e-12);
  CHECK(rel(c.a(6), 2.6724797898855274e-6) < 1e-12);
  CHECK(rel(c.a(7), -8.4441638300191499e-6) < 1e-12);

  SUBCASE("gamma = 0 switches off the nonlinear coefficients") {
    FiberParams lin = f;
    lin.gamma = 0.0;
    const auto fl = make_frame(50e-12, 1e-3, 100e3, 400e-12, d, lin);
    const auto cl = pde_coeffs(fl, lin, d, CoeffKind::SignalB);
    CHECK(cl.a(5) == 0.0);
    CHECK(cl.a(6) == 0.0);
    CHECK(cl.a(7) == 0.0);
    CHECK(cl.a(1) == 1.0);
  }
  SUBCASE("a3 flips with the sign of D") {
    FiberParams neg = f;
    neg.dispersion = -neg.dispersion;
    const auto dn = derive_secondary_params(neg);
    const auto fn = make_frame(50e-12, 1e-3, 100e3, 400e-12, dn, neg);
    CHECK(pde_coeffs(fn, neg, dn, CoeffKind::PulseA).a(3) == -0.5);
  }
  SUBCASE("Manakov") {
    const FiberParams b = birefringence_task_fiber(2e-14);
    const auto db = derive_secondary_params(b);
    const auto fb = make_frame(50e-12, 1e-3, 20e3, 600e-12, db, b);
    const auto cm = pde_coeffs(fb, b, db, CoeffKind::ManakovA);
    CHECK(cm.size() == 5);
    CHECK(cm.a(1) == 1.0);
    CHECK(rel(cm.a(3), 23.059944510116341) < 1e-12);
    CHECK(cm.a(4) == 0.5);
    CHECK(rel(cm.a(5), 149.88963931575621) < 1e-12);
    CHECK_THROWS_AS(pde_coeffs(fb, f, db, CoeffKind::ManakovA), std::invalid_argument);
  }
  SUBCASE("deterministic") {
    const auto again = pde_coeffs(make_frame(50e-12, 1e-3, 100e3, 400e-12, derive_secondary_params(f), f), f,
                                  derive_secondary_params(f), CoeffKind::PulseA);
    CHECK(again.values == c.values);
  }
}

TEST_CASE("normalize / denormalize") {
  const FiberParams f = pulse_task_fiber();
  const auto d = derive_secondary_params(f);
  const auto fr = make_frame(50e-12, 1e-3, 100e3, 400e-12, d, f);

  const auto origin = normalize(fr, {0.0, 0.0, 0.0});
  CHECK(origin.t == 0.0);
  CHECK(origin.zeta == 0.0);
  CHECK(origin.u == cplx{});

  const auto corner = normalize(fr, {fr.t_max, fr.l_max, std::sqrt(fr.p_ref)});
  CHECK(corner.t == 1.0);
  CHECK(corner.zeta == 1.0);
  CHECK(corner.u == cplx(1.0, 0.0));

  SplitMix64 rng(7);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const PhysicalSample s{(2.0 * rng.uniform() - 1.0) * fr.t_max, rng.uniform() * fr.l_max,
                           cplx(rng.uniform() - 0.5, rng.uniform() - 0.5) * 0.1};
    const auto back = denormalize(fr, normalize(fr, s));
    worst = std::max(worst, std::abs(back.time - s.time) / fr.t_max);
    worst = std::max(worst, std::abs(back.distance - s.distance) / fr.l_max);
    worst = std::max(worst, std::abs(back.field - s.field) / std::abs(s.field));
    CHECK(std::norm(normalize(fr, s).u) == doctest::Approx(std::norm(s.field) / fr.p_ref).epsilon(1e-14));
  }
  CHECK(worst < 1e-14);

  SUBCASE("linear in the field") {
    const PhysicalSample a{1e-11, 2e4, cplx(0.01, -0.02)};
    const PhysicalSample b{1e-11, 2e4, cplx(-0.03, 0.005)};
    const PhysicalSample sum{1e-11, 2e4, a.field + 2.5 * b.field};
    const auto lhs = normalize(fr, sum).u;
    const auto rhs = normalize(fr, a).u + 2.5 * normalize(fr, b).u;
    CHECK(std::abs(lhs - rhs) < 1e-15);
  }
}
