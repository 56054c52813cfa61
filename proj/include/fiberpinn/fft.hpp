#pragma once

#include <span>
#include <vector>

#include "fiberpinn/units.hpp"

typedef struct fftw_plan_s* fftw_plan;

namespace fiberpinn {

/// Owning 1-D complex FFT of fixed length (FFTW backed). Unnormalized
/// forward transform X_k = sum_n x_n e^{-2 pi i k n / N}; inverse() divides by N.
/// Plans are per-instance; instances are not shared between threads.
class Fft {
 public:
  explicit Fft(std::size_t n);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&& other) noexcept;
  Fft& operator=(Fft&& other) noexcept;

  std::size_t size() const { return n_; }
  void forward(std::span<cplx> data) const;
  void inverse(std::span<cplx> data) const;

 private:
  std::size_t n_ = 0;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

/// Angular frequencies matching Fft bin order for sample spacing dt.
std::vector<double> angular_frequencies(std::size_t n, double dt);

/// d^order/dT^order of a periodic sampled signal, computed spectrally.
std::vector<cplx> spectral_derivative(const Fft& fft, std::span<const double> omega,
                                      std::span<const cplx> values, int order);

}  // namespace fiberpinn
