#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "b2p/error.hpp"

namespace b2p::dsp {

// Second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

// Cascade realizing a Butterworth band-pass of total order `order`
// (order/2 prototype poles, each mapped to a band-pass pole pair).
struct FilterCoefficients {
  std::vector<Biquad> sections;
  double sampling_rate_hz = 0;
  double f_low_hz = 0;
  double f_high_hz = 0;
  int order = 0;
};

inline std::complex<double> frequency_response(const FilterCoefficients& c, double f_hz) {
  const double w = 2.0 * std::numbers::pi * f_hz / c.sampling_rate_hz;
  const std::complex<double> z1 = std::polar(1.0, -w);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h = 1.0;
  for (const auto& s : c.sections) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return h;
}

inline double magnitude_db(const FilterCoefficients& c, double f_hz) {
  return 20.0 * std::log10(std::abs(frequency_response(c, f_hz)));
}

// Poles of every section (roots of z^2 + a1 z + a2).
inline std::vector<std::complex<double>> poles(const FilterCoefficients& c) {
  std::vector<std::complex<double>> out;
  for (const auto& s : c.sections) {
    const std::complex<double> disc = std::sqrt(std::complex<double>(s.a1 * s.a1 - 4.0 * s.a2));
    out.push_back((-s.a1 + disc) / 2.0);
    out.push_back((-s.a1 - disc) / 2.0);
  }
  return out;
}

// Analog Butterworth prototype -> band-pass transform -> bilinear transform
// with pre-warped band edges. Unit gain at the (warped) geometric center.
inline FilterCoefficients design_bandpass(double f_low_hz, double f_high_hz, double sampling_rate_hz, int order) {
  using cd = std::complex<double>;
  const double nyquist = sampling_rate_hz / 2.0;
  if (!(sampling_rate_hz > 0) || !(f_low_hz > 0) || !(f_low_hz < f_high_hz) || !(f_high_hz < nyquist))
    throw Error(ErrorCode::InvalidBand, "band [" + std::to_string(f_low_hz) + ", " + std::to_string(f_high_hz) +
                                            "] Hz invalid for fs=" + std::to_string(sampling_rate_hz));
  if (order < 2 || order % 2 != 0)
    throw Error(ErrorCode::InvalidBand, "band-pass order must be even and >= 2, got " + std::to_string(order));

  const double k = 2.0 * sampling_rate_hz;
  const double w_lo = k * std::tan(std::numbers::pi * f_low_hz / sampling_rate_hz);
  const double w_hi = k * std::tan(std::numbers::pi * f_high_hz / sampling_rate_hz);
  const double bw = w_hi - w_lo;
  const double w0_sq = w_lo * w_hi;
  const int m = order / 2;

  auto to_z = [k](cd s) { return (k + s) / (k - s); };
  auto section_from = [](cd z1, cd z2) {
    Biquad b;
    b.b0 = 1.0;
    b.b1 = 0.0;
    b.b2 = -1.0;  // one zero at z=1 (DC) and one at z=-1 (Nyquist)
    b.a1 = -(z1 + z2).real();
    b.a2 = (z1 * z2).real();
    return b;
  };

  FilterCoefficients c;
  c.sampling_rate_hz = sampling_rate_hz;
  c.f_low_hz = f_low_hz;
  c.f_high_hz = f_high_hz;
  c.order = order;

  for (int i = 0; i < m; ++i) {
    const cd p = std::polar(1.0, std::numbers::pi * (2.0 * i + m + 1) / (2.0 * m));
    if (p.imag() < -1e-12) continue;  // handled with its conjugate
    const cd pb = p * bw;
    const cd root = std::sqrt(pb * pb - 4.0 * w0_sq);
    const cd s1 = (pb + root) / 2.0;
    const cd s2 = (pb - root) / 2.0;
    if (std::abs(p.imag()) <= 1e-12) {
      // real prototype pole: its two band-pass poles form one real section
      c.sections.push_back(section_from(to_z(s1), to_z(s2)));
    } else {
      c.sections.push_back(section_from(to_z(s1), std::conj(to_z(s1))));
      c.sections.push_back(section_from(to_z(s2), std::conj(to_z(s2))));
    }
  }

  const double f_center = sampling_rate_hz / std::numbers::pi * std::atan(std::sqrt(w0_sq) / k);
  const double gain = std::abs(frequency_response(c, f_center));
  const double per_section = std::pow(gain, -1.0 / static_cast<double>(c.sections.size()));
  for (auto& s : c.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }

  for (const auto& z : poles(c))
    if (!(std::abs(z) < 1.0))
      throw Error(ErrorCode::UnstableDesign, "pole at |z|=" + std::to_string(std::abs(z)));
  return c;
}

// Streaming cascade with persistent state (transposed direct form II).
// One instance per channel.
class SosFilter {
 public:
  SosFilter() = default;
  explicit SosFilter(const FilterCoefficients& c) : sections_(c.sections), state_(c.sections.size()) {}

  double step(double x) {
    for (std::size_t i = 0; i < sections_.size(); ++i) {
      const Biquad& s = sections_[i];
      auto& z = state_[i];
      const double y = s.b0 * x + z[0];
      z[0] = s.b1 * x - s.a1 * y + z[1];
      z[1] = s.b2 * x - s.a2 * y;
      x = y;
    }
    return x;
  }

  void process(std::span<double> inout) {
    for (double& v : inout) v = step(v);
  }

  void reset() {
    for (auto& z : state_) z = {0.0, 0.0};
  }

 private:
  std::vector<Biquad> sections_;
  std::vector<std::array<double, 2>> state_;
};

// Forward-backward (zero-phase) filtering for offline use. The signal is
// extended by odd reflection on both ends to shorten the edge transients.
inline std::vector<double> filtfilt(const FilterCoefficients& c, std::span<const double> x, std::size_t pad_frames) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min(pad_frames, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  SosFilter fwd(c);
  fwd.process(ext);
  std::reverse(ext.begin(), ext.end());
  SosFilter bwd(c);
  bwd.process(ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace b2p::dsp
