#include "fiberpinn/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>
#include <utility>

namespace fiberpinn {

namespace {
// The FFTW planner is not reentrant; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Fft::Fft(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("fft: zero length");
  std::vector<cplx> scratch(n);
  auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
  std::lock_guard lock(planner_mutex());
  const int len = static_cast<int>(n);
  fwd_ = fftw_plan_dft_1d(len, p, p, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  bwd_ = fftw_plan_dft_1d(len, p, p, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!fwd_ || !bwd_) throw std::runtime_error("fft: plan creation failed");
}

Fft::~Fft() {
  if (!fwd_ && !bwd_) return;
  std::lock_guard lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(fwd_);
  if (bwd_) fftw_destroy_plan(bwd_);
}

Fft::Fft(Fft&& other) noexcept
    : n_(other.n_), fwd_(std::exchange(other.fwd_, nullptr)), bwd_(std::exchange(other.bwd_, nullptr)) {}

Fft& Fft::operator=(Fft&& other) noexcept {
  std::swap(n_, other.n_);
  std::swap(fwd_, other.fwd_);
  std::swap(bwd_, other.bwd_);
  return *this;
}

void Fft::forward(std::span<cplx> data) const {
  if (data.size() != n_) throw std::invalid_argument("fft: length mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(fwd_, p, p);
}

void Fft::inverse(std::span<cplx> data) const {
  if (data.size() != n_) throw std::invalid_argument("fft: length mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(bwd_, p, p);
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& v : data) v *= scale;
}

std::vector<double> angular_frequencies(std::size_t n, double dt) {
  std::vector<double> w(n);
  const double base = 2.0 * kPi / (static_cast<double>(n) * dt);
  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<long long>(k);
    const auto nn = static_cast<long long>(n);
    w[k] = base * static_cast<double>(k < n / 2 ? kk : kk - nn);
  }
  return w;
}

std::vector<cplx> spectral_derivative(const Fft& fft, std::span<const double> omega,
                                      std::span<const cplx> values, int order) {
  std::vector<cplx> buf(values.begin(), values.end());
  fft.forward(buf);
  const std::size_t n = buf.size();
  for (std::size_t k = 0; k < n; ++k) {
    cplx factor = 1.0;
    for (int o = 0; o < order; ++o) factor *= cplx(0.0, omega[k]);
    // The Nyquist bin has no sign; odd derivatives drop it to keep real data real.
    if (n % 2 == 0 && k == n / 2 && order % 2 == 1) factor = 0.0;
    buf[k] *= factor;
  }
  fft.inverse(buf);
  return buf;
}

}  // namespace fiberpinn
