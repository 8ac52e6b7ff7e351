#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "b2p/pipeline/types.hpp"

namespace b2p::eeg {

using pipeline::EegChunk;

// Pull-based stream of chunks; std::nullopt marks the end.
class ChunkSource {
 public:
  virtual ~ChunkSource() = default;
  virtual std::optional<EegChunk> next() = 0;
};

inline std::vector<EegChunk> drain(ChunkSource& src) {
  std::vector<EegChunk> out;
  while (auto c = src.next()) out.push_back(std::move(*c));
  return out;
}

// Cuts a recording into fixed-size chunks (the last one may be shorter).
inline std::vector<EegChunk> split_recording(const pipeline::Recording& rec, std::size_t chunk_frames) {
  std::vector<EegChunk> out;
  if (chunk_frames == 0) chunk_frames = 1;
  for (std::size_t f = 0; f < rec.frames(); f += chunk_frames) {
    const std::size_t n = std::min(chunk_frames, rec.frames() - f);
    EegChunk c;
    c.start_time_s = rec.start_time_s + static_cast<double>(f) / rec.sampling_rate_hz;
    c.sampling_rate_hz = rec.sampling_rate_hz;
    c.samples = Matrix(rec.samples.rows, n);
    for (std::size_t ch = 0; ch < rec.samples.rows; ++ch)
      std::copy_n(rec.samples.row(ch).begin() + static_cast<std::ptrdiff_t>(f), n, c.samples.row(ch).begin());
    out.push_back(std::move(c));
  }
  return out;
}

// Concatenates contiguous chunks back into one recording.
inline pipeline::Recording join_chunks(const std::vector<EegChunk>& chunks, pipeline::ChannelLayout layout) {
  pipeline::Recording rec;
  rec.layout = std::move(layout);
  if (chunks.empty()) return rec;
  rec.sampling_rate_hz = chunks.front().sampling_rate_hz;
  rec.start_time_s = chunks.front().start_time_s;
  std::size_t total = 0;
  for (const auto& c : chunks) total += c.frames();
  rec.samples = Matrix(chunks.front().samples.rows, total);
  std::size_t at = 0;
  for (const auto& c : chunks) {
    for (std::size_t ch = 0; ch < c.samples.rows; ++ch)
      std::copy(c.samples.row(ch).begin(), c.samples.row(ch).end(),
                rec.samples.row(ch).begin() + static_cast<std::ptrdiff_t>(at));
    at += c.frames();
  }
  return rec;
}

}  // namespace b2p::eeg
