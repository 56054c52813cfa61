#include "fiberpinn/ssfm.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fiberpinn/fft.hpp"

namespace fiberpinn {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Step boundaries: the uniform grid k*dz merged with snapshot distances.
std::vector<double> breakpoints(double l_max, int n_steps, const std::vector<double>& snaps) {
  const double dz = l_max / n_steps;
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(n_steps) + snaps.size() + 1);
  for (int k = 0; k <= n_steps; ++k) pts.push_back(k == n_steps ? l_max : k * dz);
  for (double s : snaps) pts.push_back(s);
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  const double eps = 1e-9 * dz;
  for (double p : pts) {
    if (out.empty() || p - out.back() > eps) {
      out.push_back(p);
    } else if (std::find(snaps.begin(), snaps.end(), p) != snaps.end()) {
      out.back() = p;  // snapshots win over nearby grid points
    }
  }
  return out;
}

std::vector<double> checked_snapshots(double l_max, int n_steps, std::span<const double> requested) {
  if (n_steps < 1) throw std::invalid_argument("ssfm: n_steps must be >= 1");
  if (!(l_max > 0.0)) throw std::invalid_argument("ssfm: l_max must be > 0");
  std::vector<double> snaps(requested.begin(), requested.end());
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    if (snaps[i] < 0.0 || snaps[i] > l_max)
      throw std::invalid_argument("ssfm: snapshot distance outside [0, l_max]");
    if (i > 0 && !(snaps[i] > snaps[i - 1]))
      throw std::invalid_argument("ssfm: snapshot distances must be strictly increasing");
  }
  if (snaps.empty() || snaps.front() != 0.0) snaps.insert(snaps.begin(), 0.0);
  return snaps;
}

void check_grid(const FieldGrid& g) {
  if (!is_power_of_two(g.size()) || g.size() < 64)
    throw std::invalid_argument("ssfm: grid size must be a power of two >= 64");
  if (g.values.size() != g.size()) throw std::invalid_argument("ssfm: grid/value size mismatch");
}

void check_window(std::span<const cplx> v, double z) {
  double peak = 0.0;
  for (const auto& c : v) peak = std::max(peak, std::abs(c));
  if (peak == 0.0) return;
  const double edge = std::max(std::abs(v.front()), std::abs(v.back()));
  if (edge >= kWindowTolerance * peak) {
    std::ostringstream os;
    os << "ssfm: time window too narrow at snapshot z = " << z << " m (boundary/peak = "
       << edge / peak << ")";
    throw WindowError(os.str(), z);
  }
}

// Caches exp(L(w) h) for the most recently used step lengths.
class LinearPropagator {
 public:
  explicit LinearPropagator(std::vector<cplx> generator) : gen_(std::move(generator)) {}

  const std::vector<cplx>& factors(double h) {
    for (auto& e : cache_)
      if (e.h == h) return e.f;
    Entry& e = cache_[next_];
    next_ = (next_ + 1) % cache_.size();
    e.h = h;
    e.f.resize(gen_.size());
    for (std::size_t k = 0; k < gen_.size(); ++k) e.f[k] = std::exp(gen_[k] * h);
    return e.f;
  }

 private:
  struct Entry {
    double h = -1.0;
    std::vector<cplx> f;
  };
  std::vector<cplx> gen_;
  std::array<Entry, 3> cache_{};
  std::size_t next_ = 0;
};

void apply_linear(const Fft& fft, LinearPropagator& lin, std::vector<cplx>& psi, double h) {
  fft.forward(psi);
  const auto& f = lin.factors(h);
  for (std::size_t k = 0; k < psi.size(); ++k) psi[k] *= f[k];
  fft.inverse(psi);
}

std::vector<cplx> linear_generator(const std::vector<double>& omega, double alpha, double beta1,
                                   double beta2, double beta3) {
  // d/dT -> i w under the Fft sign convention.
  std::vector<cplx> g(omega.size());
  for (std::size_t k = 0; k < omega.size(); ++k) {
    const double w = omega[k];
    g[k] = cplx(-0.5 * alpha, -beta1 * w + 0.5 * beta2 * w * w - beta3 * w * w * w / 6.0);
  }
  return g;
}

struct ScalarNonlinear {
  const Fft& fft;
  const std::vector<double>& omega;
  double gamma;
  double steep;  // gamma / w0, zero when disabled
  double raman;  // gamma * tau, zero when disabled

  bool has_correction() const { return steep != 0.0 || raman != 0.0; }

  // Q(psi) = -(gamma/w0) d(|psi|^2 psi)/dT - i gamma tau psi d|psi|^2/dT
  std::vector<cplx> correction(const std::vector<cplx>& psi) const {
    const std::size_t n = psi.size();
    std::vector<cplx> p2psi(n), p2(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double p = std::norm(psi[j]);
      p2psi[j] = p * psi[j];
      p2[j] = p;
    }
    std::vector<cplx> q(n, cplx{});
    if (steep != 0.0) {
      auto d = spectral_derivative(fft, omega, p2psi, 1);
      for (std::size_t j = 0; j < n; ++j) q[j] -= steep * d[j];
    }
    if (raman != 0.0) {
      auto d = spectral_derivative(fft, omega, p2, 1);
      for (std::size_t j = 0; j < n; ++j) q[j] -= cplx(0.0, raman * d[j].real()) * psi[j];
    }
    return q;
  }

  void step(std::vector<cplx>& psi, double h) const {
    const std::size_t n = psi.size();
    if (!has_correction()) {
      for (auto& v : psi) v *= std::polar(1.0, gamma * std::norm(v) * h);
      return;
    }
    // Kerr rotation split around an explicit midpoint for the derivative terms:
    //   m   = e^{h/2 K(psi)} psi + h/2 Q(psi)
    //   out = e^{h/2 K(m)} (e^{h/2 K(m)} psi + h Q(m)),   K = i gamma |.|^2
    const auto q0 = correction(psi);
    std::vector<cplx> mid(n);
    for (std::size_t j = 0; j < n; ++j)
      mid[j] = std::polar(1.0, 0.5 * h * gamma * std::norm(psi[j])) * psi[j] + 0.5 * h * q0[j];
    const auto qm = correction(mid);
    for (std::size_t j = 0; j < n; ++j) {
      const cplx rot = std::polar(1.0, 0.5 * h * gamma * std::norm(mid[j]));
      psi[j] = rot * (rot * psi[j] + h * qm[j]);
    }
  }
};

template <class Step, class Record>
void march(double l_max, int n_steps, const std::vector<double>& snaps, Step&& step,
           Record&& record) {
  const auto pts = breakpoints(l_max, n_steps, snaps);
  std::size_t next_snap = 0;
  if (snaps[0] == 0.0) record(next_snap++, 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    step(pts[i] - pts[i - 1]);
    if (next_snap < snaps.size() && pts[i] == snaps[next_snap]) record(next_snap++, pts[i]);
  }
}

}  // namespace

double FieldGrid::energy() const {
  double e = 0.0;
  for (const auto& v : values) e += std::norm(v);
  return e * dt();
}

std::vector<double> make_time_grid(std::size_t n, double t_max) {
  if (!is_power_of_two(n) || n < 64) throw std::invalid_argument("grid: n must be a power of two >= 64");
  if (!(t_max > 0.0)) throw std::invalid_argument("grid: t_max must be > 0");
  std::vector<double> t(n);
  const double dt = 2.0 * t_max / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) t[j] = -t_max + static_cast<double>(j) * dt;
  return t;
}

FieldGrid sample_launch(const LaunchProfile& profile, std::size_t n, double t_max) {
  FieldGrid g;
  g.times = make_time_grid(n, t_max);
  g.values = profile.sample(g.times);
  return g;
}

FieldGrid sample_launch_x(const PolarizedLaunch& launch, std::size_t n, double t_max) {
  FieldGrid g = sample_launch(launch.profile, n, t_max);
  for (auto& v : g.values) v *= launch.cos_theta;
  return g;
}

FieldGrid sample_launch_y(const PolarizedLaunch& launch, std::size_t n, double t_max) {
  FieldGrid g = sample_launch(launch.profile, n, t_max);
  for (auto& v : g.values) v *= launch.sin_theta;
  return g;
}

SolutionSurface propagate_gnlse(const FieldGrid& launch, const FiberParams& fiber,
                                const DerivedParams& derived, double l_max, int n_steps,
                                std::span<const double> snapshots, GnlseTerms terms) {
  check_grid(launch);
  const auto snaps = checked_snapshots(l_max, n_steps, snapshots);
  const Fft fft(launch.size());
  const auto omega = angular_frequencies(launch.size(), launch.dt());
  LinearPropagator lin(linear_generator(omega, fiber.alpha, 0.0, derived.beta2,
                                        terms.third_order ? derived.beta3 : 0.0));
  const ScalarNonlinear nl{fft, omega, fiber.gamma,
                           terms.self_steepening ? fiber.gamma / derived.omega0 : 0.0,
                           terms.raman ? fiber.gamma * fiber.tau : 0.0};

  SolutionSurface out;
  out.times = launch.times;
  out.distances = snaps;
  out.fields.resize(snaps.size());
  std::vector<cplx> psi = launch.values;
  march(
      l_max, n_steps, snaps,
      [&](double h) {
        apply_linear(fft, lin, psi, 0.5 * h);
        nl.step(psi, h);
        apply_linear(fft, lin, psi, 0.5 * h);
      },
      [&](std::size_t i, double z) {
        check_window(psi, z);
        out.fields[i] = psi;
      });
  return out;
}

ManakovSurface propagate_manakov(const FieldGrid& launch_x, const FieldGrid& launch_y,
                                 const FiberParams& fiber, const DerivedParams& derived,
                                 double l_max, int n_steps, std::span<const double> snapshots) {
  check_grid(launch_x);
  check_grid(launch_y);
  if (launch_x.times != launch_y.times)
    throw std::invalid_argument("manakov: x and y launches must share one time grid");
  const auto snaps = checked_snapshots(l_max, n_steps, snapshots);
  const Fft fft(launch_x.size());
  const auto omega = angular_frequencies(launch_x.size(), launch_x.dt());
  const double half_db1 = 0.5 * fiber.delta_beta1.value_or(0.0);
  LinearPropagator lin_x(linear_generator(omega, fiber.alpha, +half_db1, derived.beta2, 0.0));
  LinearPropagator lin_y(linear_generator(omega, fiber.alpha, -half_db1, derived.beta2, 0.0));
  const double g = fiber.gamma;

  ManakovSurface out;
  for (auto* s : {&out.x, &out.y}) {
    s->times = launch_x.times;
    s->distances = snaps;
    s->fields.resize(snaps.size());
  }
  std::vector<cplx> px = launch_x.values;
  std::vector<cplx> py = launch_y.values;
  march(
      l_max, n_steps, snaps,
      [&](double h) {
        apply_linear(fft, lin_x, px, 0.5 * h);
        apply_linear(fft, lin_y, py, 0.5 * h);
        // |psi_x| and |psi_y| are invariant under the nonlinear flow: exact rotation.
        for (std::size_t j = 0; j < px.size(); ++j) {
          const double ax = std::norm(px[j]);
          const double ay = std::norm(py[j]);
          px[j] *= std::polar(1.0, g * (ax + (2.0 / 3.0) * ay) * h);
          py[j] *= std::polar(1.0, g * (ay + (2.0 / 3.0) * ax) * h);
        }
        apply_linear(fft, lin_x, px, 0.5 * h);
        apply_linear(fft, lin_y, py, 0.5 * h);
      },
      [&](std::size_t i, double z) {
        check_window(px, z);
        check_window(py, z);
        out.x.fields[i] = px;
        out.y.fields[i] = py;
      });
  return out;
}

namespace detail {

namespace {
void accumulate_change(const std::vector<cplx>& a, const std::vector<cplx>& b, double& diff,
                       double& scale) {
  if (a.size() != b.size()) throw std::invalid_argument("auto_step: grid mismatch");
  for (std::size_t j = 0; j < a.size(); ++j) {
    diff = std::max(diff, std::abs(a[j] - b[j]));
    scale = std::max(scale, std::abs(b[j]));
  }
}
}  // namespace

double max_relative_change(const SolutionSurface& coarse, const SolutionSurface& fine) {
  double diff = 0.0, scale = 0.0;
  accumulate_change(coarse.fields.back(), fine.fields.back(), diff, scale);
  return scale > 0.0 ? diff / scale : diff;
}

double max_relative_change(const ManakovSurface& coarse, const ManakovSurface& fine) {
  double diff = 0.0, scale = 0.0;
  accumulate_change(coarse.x.fields.back(), fine.x.fields.back(), diff, scale);
  accumulate_change(coarse.y.fields.back(), fine.y.fields.back(), diff, scale);
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace detail

}  // namespace fiberpinn
