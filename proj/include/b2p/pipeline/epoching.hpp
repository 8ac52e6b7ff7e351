#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "b2p/error.hpp"
#include "b2p/pipeline/types.hpp"

namespace b2p::pipeline {

// Sliding-window segmentation of a chunk stream. Emits an epoch every
// step frames once a full window of contiguous data exists. A gap in the
// input restarts the run, so emission resumes only after a fresh window.
class Epocher {
 public:
  Epocher(double window_s, double step_s, double sampling_rate_hz, std::size_t channels)
      : fs_(sampling_rate_hz), channels_(channels) {
    if (!(window_s > 0) || !(step_s > 0) || step_s > window_s)
      throw Error(ErrorCode::ConfigInvalid, "epoching needs 0 < step <= window");
    window_ = static_cast<std::size_t>(std::llround(window_s * fs_));
    step_ = static_cast<std::size_t>(std::llround(step_s * fs_));
    if (window_ == 0 || step_ == 0) throw Error(ErrorCode::ConfigInvalid, "window or step shorter than one frame");
    buffer_.resize(channels_);
  }

  std::size_t window_frames() const { return window_; }
  std::size_t step_frames() const { return step_; }

  std::vector<Epoch> push(const EegChunk& chunk) {
    if (chunk.samples.rows != channels_)
      throw Error(ErrorCode::ShapeMismatch, "chunk has " + std::to_string(chunk.samples.rows) + " channels");
    if (chunk.sampling_rate_hz != fs_) throw Error(ErrorCode::ShapeMismatch, "sampling rate changed mid-stream");

    if (started_) {
      const double expected = run_start_ + static_cast<double>(run_frames_) / fs_;
      const double drift = chunk.start_time_s - expected;
      if (drift < -0.5 / fs_) throw Error(ErrorCode::ShapeMismatch, "chunk overlaps previous data");
      if (drift > 0.5 / fs_) started_ = false;  // gap
    }
    if (!started_) {
      started_ = true;
      run_start_ = chunk.start_time_s;
      run_frames_ = 0;
      buffer_offset_ = 0;
      next_emit_ = window_;
      for (auto& b : buffer_) b.clear();
    }

    for (std::size_t c = 0; c < channels_; ++c) {
      auto row = chunk.samples.row(c);
      buffer_[c].insert(buffer_[c].end(), row.begin(), row.end());
    }
    run_frames_ += chunk.frames();

    std::vector<Epoch> out;
    while (run_frames_ >= next_emit_) {
      Epoch e;
      e.end_time_s = run_start_ + static_cast<double>(next_emit_) / fs_;
      e.window_s = static_cast<double>(window_) / fs_;
      e.sampling_rate_hz = fs_;
      e.samples = Matrix(channels_, window_);
      const std::size_t first = next_emit_ - window_ - buffer_offset_;
      for (std::size_t c = 0; c < channels_; ++c)
        std::copy_n(buffer_[c].begin() + static_cast<std::ptrdiff_t>(first), window_, e.samples.row(c).begin());
      out.push_back(std::move(e));
      next_emit_ += step_;
    }

    // keep only what the next window needs
    const std::size_t keep_from = next_emit_ - window_;
    if (keep_from > buffer_offset_) {
      const std::size_t drop = std::min(keep_from - buffer_offset_, buffer_[0].size());
      for (auto& b : buffer_) b.erase(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(drop));
      buffer_offset_ += drop;
    }
    return out;
  }

 private:
  double fs_;
  std::size_t channels_;
  std::size_t window_ = 0;
  std::size_t step_ = 0;
  bool started_ = false;
  double run_start_ = 0.0;
  std::size_t run_frames_ = 0;
  std::size_t buffer_offset_ = 0;  // run frame index of buffer_[c][0]
  std::size_t next_emit_ = 0;
  std::vector<std::vector<double>> buffer_;
};

// Convenience over a finite chunk list.
inline std::vector<Epoch> segment_epochs(const std::vector<EegChunk>& chunks, double window_s, double step_s) {
  if (chunks.empty()) return {};
  Epocher ep(window_s, step_s, chunks.front().sampling_rate_hz, chunks.front().samples.rows);
  std::vector<Epoch> out;
  for (const auto& c : chunks)
    for (auto& e : ep.push(c)) out.push_back(std::move(e));
  return out;
}

}  // namespace b2p::pipeline
