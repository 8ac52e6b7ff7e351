#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <stdexcept>
#include <algorithm>

#include <fftw3.h>

namespace b2p::dsp {

namespace detail {
// FFTW's planner is not reentrant.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

// Real-to-complex / complex-to-real transforms of one fixed length, owning
// the FFTW plans and buffers. FFTW_ESTIMATE keeps the chosen algorithm, and
// therefore the output bits, independent of machine load.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("RealFft: length must be positive");
    std::lock_guard lock(detail::planner_mutex());
    // fftw_alloc_* gives SIMD alignment, so the planner's choice never
    // depends on where the buffers happen to land.
    real_ = fftw_alloc_real(n);
    spectrum_ = fftw_alloc_complex(n / 2 + 1);
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spectrum_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spectrum_, real_, FFTW_ESTIMATE);
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  ~RealFft() {
    std::lock_guard lock(detail::planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(spectrum_);
  }

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // Unnormalized DFT of `x` (length n); returns n/2+1 bins.
  std::span<const std::complex<double>> forward(std::span<const double> x) {
    std::copy(x.begin(), x.end(), real_);
    fftw_execute(forward_);
    return {reinterpret_cast<const std::complex<double>*>(spectrum_), bins()};
  }

  // Unnormalized inverse of a half spectrum; the result is n times the signal.
  std::span<const double> inverse(std::span<const std::complex<double>> half) {
    std::copy(half.begin(), half.end(), reinterpret_cast<std::complex<double>*>(spectrum_));
    fftw_execute(inverse_);
    return {real_, n_};
  }

 private:
  std::size_t n_;
  double* real_ = nullptr;
  fftw_complex* spectrum_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace b2p::dsp
