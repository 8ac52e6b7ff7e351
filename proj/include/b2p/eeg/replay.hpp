#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "b2p/clock.hpp"
#include "b2p/eeg/artifacts.hpp"
#include "b2p/eeg/csv.hpp"
#include "b2p/eeg/source.hpp"
#include "b2p/eeg/synthetic.hpp"

namespace b2p::eeg {

// Replays a recording chunk by chunk with its original timestamps. When a
// clock is supplied, each chunk is released only once its last frame is due,
// at `speed` times real time.
class ReplaySource final : public ChunkSource {
 public:
  ReplaySource(const Recording& rec, std::size_t chunk_frames, Clock* pacing = nullptr, double speed = 1.0)
      : chunks_(split_recording(rec, chunk_frames)), start_(rec.start_time_s), clock_(pacing), speed_(speed) {}

  std::optional<EegChunk> next() override {
    if (cursor_ >= chunks_.size()) return std::nullopt;
    EegChunk& c = chunks_[cursor_++];
    if (clock_) {
      if (!origin_) origin_ = clock_->now_s();
      clock_->sleep_until(*origin_ + (c.end_time_s() - start_) / speed_);
    }
    return std::move(c);
  }

 private:
  std::vector<EegChunk> chunks_;
  std::size_t cursor_ = 0;
  double start_;
  Clock* clock_;
  double speed_;
  std::optional<double> origin_;
};

inline std::unique_ptr<ChunkSource> replay(const std::string& csv_path, std::size_t chunk_frames,
                                           Clock* pacing = nullptr, double speed = 1.0) {
  return std::make_unique<ReplaySource>(read_recording(csv_path), chunk_frames, pacing, speed);
}

// Synthetic generator with the params' artifact process applied.
inline std::unique_ptr<ChunkSource> make_synthetic_source(const WorkloadScript& script, const GeneratorParams& p) {
  auto gen = std::make_unique<SyntheticEeg>(script, p);
  return std::make_unique<ArtifactSource>(std::move(gen), p.artifact_rate_per_min, p.artifact_magnitude_uv,
                                          mix_seed(p.seed, 2));
}

// generate + inject, then join into a recording suitable for CSV.
inline Recording record(const WorkloadScript& script, const GeneratorParams& p) {
  auto src = make_synthetic_source(script, p);
  return join_chunks(drain(*src), p.layout);
}

}  // namespace b2p::eeg
