#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "b2p/dsp/fft.hpp"
#include "b2p/eeg/source.hpp"
#include "b2p/error.hpp"
#include "b2p/random.hpp"

namespace b2p::eeg {

struct ScriptStep {
  double t_start_s = 0.0;
  double level = 0.0;
};

// Piecewise-constant workload level in [0, 1]; each change ramps linearly
// over `ramp_s` starting at its step time.
struct WorkloadScript {
  std::vector<ScriptStep> steps;
  double duration_s = 180.0;
  double ramp_s = 1.0;

  double level_at(double t) const {
    std::size_t i = 0;
    while (i + 1 < steps.size() && steps[i + 1].t_start_s <= t) ++i;
    const double target = steps[i].level;
    if (i == 0 || t >= steps[i].t_start_s + ramp_s) return target;
    const double prev = steps[i - 1].level;
    return prev + (target - prev) * (t - steps[i].t_start_s) / ramp_s;
  }

  // Times at which the level changes.
  std::vector<double> transitions() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < steps.size(); ++i)
      if (steps[i].level != steps[i - 1].level) out.push_back(steps[i].t_start_s);
    return out;
  }
};

inline void validate(const WorkloadScript& s) {
  if (s.steps.empty()) throw Error(ErrorCode::InvalidScript, "script has no steps");
  if (s.steps.front().t_start_s != 0.0) throw Error(ErrorCode::InvalidScript, "first step must start at t=0");
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    if (!(s.steps[i].level >= 0.0 && s.steps[i].level <= 1.0))
      throw Error(ErrorCode::InvalidScript, "level outside [0, 1] at step " + std::to_string(i));
    if (i > 0 && !(s.steps[i].t_start_s > s.steps[i - 1].t_start_s))
      throw Error(ErrorCode::InvalidScript, "step times must be strictly increasing");
  }
  if (!(s.duration_s > 0.0) || !std::isfinite(s.duration_s))
    throw Error(ErrorCode::InvalidScript, "duration must be positive");
}

// Accepts `[{"t":0,"level":0},...]` or `{"duration_s":..,"steps":[...]}`.
inline WorkloadScript script_from_json(const nlohmann::json& j, double default_duration_s = 180.0) {
  WorkloadScript s;
  s.duration_s = default_duration_s;
  try {
    const nlohmann::json* steps = &j;
    if (j.is_object()) {
      s.duration_s = j.value("duration_s", default_duration_s);
      steps = &j.at("steps");
    }
    if (!steps->is_array()) throw Error(ErrorCode::InvalidScript, "script must be an array of steps");
    for (const auto& st : *steps) s.steps.push_back({st.at("t").get<double>(), st.at("level").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidScript, e.what());
  }
  validate(s);
  return s;
}

inline nlohmann::json script_to_json(const WorkloadScript& s) {
  auto arr = nlohmann::json::array();
  for (const auto& st : s.steps) arr.push_back({{"t", st.t_start_s}, {"level", st.level}});
  return arr;
}

// Level 0 until `at_s`, then level 1.
inline WorkloadScript step_script(double at_s, double duration_s = 180.0) {
  return WorkloadScript{{{0.0, 0.0}, {at_s, 1.0}}, duration_s};
}

inline WorkloadScript constant_script(double level, double duration_s) {
  return WorkloadScript{{{0.0, level}}, duration_s};
}

// Amplitude as a function of level: at_rest for level 0, at_load for level 1.
struct AmplitudeRange {
  double at_rest = 0.0;
  double at_load = 0.0;
  double at(double level) const { return at_rest + (at_load - at_rest) * level; }
  double floor() const { return std::min(at_rest, at_load); }
};

struct GeneratorParams {
  pipeline::ChannelLayout layout = pipeline::standard_layout();
  double sampling_rate_hz = 250.0;
  std::uint64_t seed = 0;
  AmplitudeRange theta_amp{5.0, 20.0};  // frontal, µV, rises with load
  AmplitudeRange alpha_amp{20.0, 5.0};  // parietal, µV, falls with load
  double theta_freq_hz = 6.0;
  double alpha_freq_hz = 10.0;
  double noise_sigma_uv = 10.0;
  double pink_exponent = 1.0;
  double pink_corner_hz = 0.5;  // spectrum flattens below this
  double artifact_rate_per_min = 1.0;
  double artifact_magnitude_uv = 500.0;
  std::size_t chunk_frames = 25;
};

inline void validate(const GeneratorParams& p) {
  pipeline::validate(p.layout);
  if (!(p.sampling_rate_hz > 0)) throw Error(ErrorCode::InvalidScript, "sampling rate must be positive");
  if (!(p.theta_amp.at_rest > 0 && p.theta_amp.at_load > 0 && p.alpha_amp.at_rest > 0 && p.alpha_amp.at_load > 0))
    throw Error(ErrorCode::InvalidScript, "amplitude ranges must be positive");
  if (!(p.pink_exponent >= 0.0 && p.pink_exponent <= 2.0))
    throw Error(ErrorCode::InvalidScript, "pink_exponent must be in [0, 2]");
  if (!(p.noise_sigma_uv >= 0.0)) throw Error(ErrorCode::InvalidScript, "noise sigma must be non-negative");
  if (!(p.artifact_rate_per_min >= 0.0)) throw Error(ErrorCode::InvalidScript, "artifact rate must be >= 0");
  if (p.chunk_frames == 0) throw Error(ErrorCode::InvalidScript, "chunk_frames must be positive");
}

// Gaussian noise with power spectrum ~ 1/f^exponent above `corner_hz`,
// flat below, no DC, scaled to standard deviation `sigma` in expectation.
// Shaped in one FFT over the whole length.
inline std::vector<double> pink_noise(std::size_t frames, double sampling_rate_hz, double exponent, double sigma,
                                      double corner_hz, std::uint64_t seed) {
  std::vector<double> out(frames, 0.0);
  if (frames < 2 || sigma == 0.0) return out;
  Rng rng(seed);
  std::vector<double> white(frames);
  for (double& v : white) v = rng.normal();

  dsp::RealFft fft(frames);
  auto spec_view = fft.forward(white);
  std::vector<std::complex<double>> spec(spec_view.begin(), spec_view.end());
  const double df = sampling_rate_hz / static_cast<double>(frames);
  double gain_sq_sum = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * df;
    const double a = k == 0 ? 0.0 : std::pow(corner_hz / std::max(f, corner_hz), exponent / 2.0);
    spec[k] *= a;
    const bool unpaired = k == 0 || (frames % 2 == 0 && k == frames / 2);
    gain_sq_sum += a * a * (unpaired ? 1.0 : 2.0);
  }
  const double scale = sigma / std::sqrt(gain_sq_sum / static_cast<double>(frames)) / static_cast<double>(frames);
  auto time = fft.inverse(spec);
  for (std::size_t i = 0; i < frames; ++i) out[i] = time[i] * scale;
  return out;
}

// Deterministic 16-channel generator: theta and alpha carriers whose
// amplitudes follow the script on the frontal and parietal groups, plus
// independent pink noise per channel. Output is a pure function of
// (script, params). Artifacts are added separately (see artifacts.hpp).
class SyntheticEeg final : public ChunkSource {
 public:
  SyntheticEeg(WorkloadScript script, GeneratorParams params) : script_(std::move(script)), p_(std::move(params)) {
    validate(script_);
    validate(p_);
    total_frames_ = static_cast<std::size_t>(std::llround(script_.duration_s * p_.sampling_rate_hz));
    const std::size_t channels = p_.layout.size();
    Rng phase_rng(mix_seed(p_.seed, 1));
    for (std::size_t c = 0; c < channels; ++c) {
      theta_phase_.push_back(phase_rng.uniform(0.0, 2.0 * std::numbers::pi));
      alpha_phase_.push_back(phase_rng.uniform(0.0, 2.0 * std::numbers::pi));
      noise_.push_back(pink_noise(total_frames_, p_.sampling_rate_hz, p_.pink_exponent, p_.noise_sigma_uv,
                                  p_.pink_corner_hz, mix_seed(p_.seed, 100 + c)));
    }
  }

  const GeneratorParams& params() const { return p_; }
  const WorkloadScript& script() const { return script_; }
  std::size_t total_frames() const { return total_frames_; }

  double theta_amplitude(std::size_t channel, double level) const {
    return p_.layout.is_frontal(channel) ? p_.theta_amp.at(level) : p_.theta_amp.floor();
  }
  double alpha_amplitude(std::size_t channel, double level) const {
    return p_.layout.is_parietal(channel) ? p_.alpha_amp.at(level) : p_.alpha_amp.floor();
  }

  std::optional<EegChunk> next() override {
    if (cursor_ >= total_frames_) return std::nullopt;
    const std::size_t n = std::min(p_.chunk_frames, total_frames_ - cursor_);
    const double fs = p_.sampling_rate_hz;
    EegChunk chunk;
    chunk.start_time_s = static_cast<double>(cursor_) / fs;
    chunk.sampling_rate_hz = fs;
    chunk.samples = Matrix(p_.layout.size(), n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t frame = cursor_ + j;
      const double t = static_cast<double>(frame) / fs;
      const double level = script_.level_at(t);
      const double wt = 2.0 * std::numbers::pi * p_.theta_freq_hz * t;
      const double wa = 2.0 * std::numbers::pi * p_.alpha_freq_hz * t;
      for (std::size_t c = 0; c < p_.layout.size(); ++c) {
        chunk.samples(c, j) = theta_amplitude(c, level) * std::sin(wt + theta_phase_[c]) +
                              alpha_amplitude(c, level) * std::sin(wa + alpha_phase_[c]) + noise_[c][frame];
      }
    }
    cursor_ += n;
    return chunk;
  }

 private:
  WorkloadScript script_;
  GeneratorParams p_;
  std::size_t total_frames_ = 0;
  std::size_t cursor_ = 0;
  std::vector<double> theta_phase_;
  std::vector<double> alpha_phase_;
  std::vector<std::vector<double>> noise_;
};

}  // namespace b2p::eeg
