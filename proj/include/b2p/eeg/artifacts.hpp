#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

#include "b2p/eeg/source.hpp"
#include "b2p/random.hpp"

namespace b2p::eeg {

inline constexpr double kSpikeDuration_s = 0.1;

// Adds 100 ms half-sine spikes of fixed magnitude to every channel at
// Poisson-distributed onsets. Onsets are drawn lazily as the stream advances,
// so the result does not depend on chunk boundaries.
class ArtifactInjector {
 public:
  ArtifactInjector(double rate_per_min, double magnitude_uv, std::uint64_t seed)
      : rate_per_s_(rate_per_min / 60.0), magnitude_(magnitude_uv), rng_(seed) {
    if (rate_per_s_ > 0) next_onset_ = rng_.exponential(rate_per_s_);
  }

  const std::vector<double>& onsets() const { return onsets_; }

  void apply(EegChunk& chunk) {
    if (!(rate_per_s_ > 0)) return;
    const double end = chunk.end_time_s();
    while (next_onset_ < end) {
      onsets_.push_back(next_onset_);
      next_onset_ += rng_.exponential(rate_per_s_);
    }
    for (double onset : onsets_) {
      if (onset + kSpikeDuration_s <= chunk.start_time_s || onset >= end) continue;
      // Time from the absolute frame number so chunk boundaries cannot shift it.
      const auto first = std::llround(chunk.start_time_s * chunk.sampling_rate_hz);
      for (std::size_t j = 0; j < chunk.frames(); ++j) {
        const double t = static_cast<double>(first + static_cast<long long>(j)) / chunk.sampling_rate_hz;
        if (t < onset || t >= onset + kSpikeDuration_s) continue;
        const double v = magnitude_ * std::sin(std::numbers::pi * (t - onset) / kSpikeDuration_s);
        for (std::size_t c = 0; c < chunk.samples.rows; ++c) chunk.samples(c, j) += v;
      }
    }
  }

 private:
  double rate_per_s_;
  double magnitude_;
  Rng rng_;
  double next_onset_ = 0.0;
  std::vector<double> onsets_;
};

// Stream adapter around ArtifactInjector.
class ArtifactSource final : public ChunkSource {
 public:
  ArtifactSource(std::unique_ptr<ChunkSource> inner, double rate_per_min, double magnitude_uv, std::uint64_t seed)
      : inner_(std::move(inner)), injector_(rate_per_min, magnitude_uv, seed) {}

  std::optional<EegChunk> next() override {
    auto c = inner_->next();
    if (c) injector_.apply(*c);
    return c;
  }

  const std::vector<double>& onsets() const { return injector_.onsets(); }

 private:
  std::unique_ptr<ChunkSource> inner_;
  ArtifactInjector injector_;
};

struct InjectedStream {
  std::vector<EegChunk> chunks;
  std::vector<double> onsets;
};

inline InjectedStream inject_artifacts(std::vector<EegChunk> stream, double rate_per_min, double magnitude_uv,
                                       std::uint64_t seed) {
  ArtifactInjector inj(rate_per_min, magnitude_uv, seed);
  for (auto& c : stream) inj.apply(c);
  return {std::move(stream), inj.onsets()};
}

}  // namespace b2p::eeg
