#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "b2p/dsp/fft.hpp"
#include "b2p/error.hpp"
#include "b2p/matrix.hpp"

namespace b2p::dsp {

enum class Taper { Hann, Rectangular };

struct WelchOptions {
  std::size_t segment_len = 250;
  double overlap_fraction = 0.5;
  Taper taper = Taper::Hann;
};

// One-sided power spectral density, µV²/Hz, one row per channel.
struct PsdEstimate {
  std::vector<double> freqs_hz;
  Matrix power;
  double df_hz = 0.0;
  double sampling_rate_hz = 0.0;
};

inline std::vector<double> make_window(Taper taper, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (taper == Taper::Hann)
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

// Averaged tapered periodograms. Scaling is density-preserving: summing the
// one-sided PSD times df reproduces the window-weighted mean square of the
// input (exactly the mean power for a rectangular single segment).
// Reuses one FFT plan, so keep an instance per stream.
class WelchEstimator {
 public:
  WelchEstimator(double sampling_rate_hz, WelchOptions opt)
      : fs_(sampling_rate_hz), opt_(opt), window_(make_window(opt.taper, opt.segment_len)) {
    if (opt.segment_len == 0) throw Error(ErrorCode::SegmentTooLong, "segment length must be positive");
    if (!(opt.overlap_fraction >= 0.0 && opt.overlap_fraction < 1.0))
      throw Error(ErrorCode::SegmentTooLong, "overlap fraction must be in [0, 1)");
    fft_ = std::make_unique<RealFft>(opt.segment_len);
    for (double v : window_) window_power_ += v * v;
    const std::size_t overlap = static_cast<std::size_t>(std::floor(opt.overlap_fraction * opt.segment_len));
    hop_ = opt.segment_len - overlap;
    buffer_.resize(opt.segment_len);
  }

  std::size_t bins() const { return opt_.segment_len / 2 + 1; }
  double df() const { return fs_ / static_cast<double>(opt_.segment_len); }
  const WelchOptions& options() const { return opt_; }

  std::vector<double> freqs() const {
    std::vector<double> f(bins());
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = static_cast<double>(k) * df();
    return f;
  }

  // PSD of one channel into `out` (bins() values).
  void estimate(std::span<const double> x, std::span<double> out) {
    const std::size_t n = opt_.segment_len;
    if (x.size() < n)
      throw Error(ErrorCode::SegmentTooLong,
                  "segment of " + std::to_string(n) + " frames exceeds signal of " + std::to_string(x.size()));
    std::fill(out.begin(), out.end(), 0.0);
    std::size_t segments = 0;
    const double scale = 1.0 / (fs_ * window_power_);
    for (std::size_t start = 0; start + n <= x.size(); start += hop_) {
      for (std::size_t i = 0; i < n; ++i) buffer_[i] = x[start + i] * window_[i];
      auto spec = fft_->forward(buffer_);
      for (std::size_t k = 0; k < spec.size(); ++k) {
        const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
        out[k] += std::norm(spec[k]) * scale * (unpaired ? 1.0 : 2.0);
      }
      ++segments;
    }
    for (double& v : out) v /= static_cast<double>(segments);
  }

  PsdEstimate estimate(const Matrix& channels) {
    PsdEstimate psd;
    psd.freqs_hz = freqs();
    psd.df_hz = df();
    psd.sampling_rate_hz = fs_;
    psd.power = Matrix(channels.rows, bins());
    for (std::size_t c = 0; c < channels.rows; ++c) estimate(channels.row(c), psd.power.row(c));
    return psd;
  }

 private:
  double fs_;
  WelchOptions opt_;
  std::vector<double> window_;
  double window_power_ = 0.0;
  std::size_t hop_ = 1;
  std::unique_ptr<RealFft> fft_;
  std::vector<double> buffer_;
};

inline PsdEstimate welch_psd(const Matrix& channels, double sampling_rate_hz, const WelchOptions& opt) {
  WelchEstimator est(sampling_rate_hz, opt);
  return est.estimate(channels);
}

// Sum of PSD * df over all bins: the discrete Parseval total.
inline std::vector<double> total_power(const PsdEstimate& psd) {
  std::vector<double> out(psd.power.rows, 0.0);
  for (std::size_t c = 0; c < psd.power.rows; ++c)
    for (double v : psd.power.row(c)) out[c] += v * psd.df_hz;
  return out;
}

// Trapezoidal integral of the piecewise-linear PSD over [f_low, f_high].
inline double integrate_band(std::span<const double> freqs, std::span<const double> power, double f_low,
                             double f_high) {
  auto value_at = [&](double f) {
    // freqs are uniformly spaced from 0
    const double df = freqs[1] - freqs[0];
    const auto k = std::min(static_cast<std::size_t>(f / df), freqs.size() - 2);
    const double t = (f - freqs[k]) / df;
    return power[k] + t * (power[k + 1] - power[k]);
  };
  double acc = 0.0;
  double prev_f = f_low;
  double prev_p = value_at(f_low);
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    if (freqs[k] <= f_low) continue;
    if (freqs[k] >= f_high) break;
    acc += 0.5 * (prev_p + power[k]) * (freqs[k] - prev_f);
    prev_f = freqs[k];
    prev_p = power[k];
  }
  acc += 0.5 * (prev_p + value_at(f_high)) * (f_high - prev_f);
  return acc;
}

inline std::vector<double> band_power(const PsdEstimate& psd, double f_low_hz, double f_high_hz) {
  const double top = psd.freqs_hz.empty() ? 0.0 : psd.freqs_hz.back();
  if (psd.freqs_hz.size() < 2 || !(f_low_hz >= 0.0) || !(f_low_hz < f_high_hz) || f_high_hz > top + 1e-9)
    throw Error(ErrorCode::BandOutOfRange, "band [" + std::to_string(f_low_hz) + ", " + std::to_string(f_high_hz) +
                                               "] Hz outside PSD range [0, " + std::to_string(top) + "]");
  std::vector<double> out(psd.power.rows);
  for (std::size_t c = 0; c < psd.power.rows; ++c)
    out[c] = std::max(0.0, integrate_band(psd.freqs_hz, psd.power.row(c), f_low_hz, std::min(f_high_hz, top)));
  return out;
}

}  // namespace b2p::dsp
