#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "b2p/error.hpp"
#include "b2p/matrix.hpp"

namespace b2p::pipeline {

inline constexpr std::size_t kChannelCount = 16;

// 16 scalp electrodes plus the frontal (theta) and parietal (alpha) groups.
struct ChannelLayout {
  std::string name;
  std::vector<std::string> channel_names;
  std::vector<std::size_t> frontal_set;
  std::vector<std::size_t> parietal_set;

  std::size_t size() const { return channel_names.size(); }

  std::size_t index_of(const std::string& label) const {
    auto it = std::find(channel_names.begin(), channel_names.end(), label);
    if (it == channel_names.end()) throw Error(ErrorCode::ConfigInvalid, "no channel named " + label);
    return static_cast<std::size_t>(it - channel_names.begin());
  }

  bool is_frontal(std::size_t c) const { return std::count(frontal_set.begin(), frontal_set.end(), c) > 0; }
  bool is_parietal(std::size_t c) const { return std::count(parietal_set.begin(), parietal_set.end(), c) > 0; }

  bool operator==(const ChannelLayout&) const = default;
};

inline void validate(const ChannelLayout& l) {
  if (l.channel_names.size() != kChannelCount)
    throw Error(ErrorCode::ConfigInvalid, "layout needs exactly 16 channels, got " + std::to_string(l.size()));
  if (std::set<std::string>(l.channel_names.begin(), l.channel_names.end()).size() != l.size())
    throw Error(ErrorCode::ConfigInvalid, "channel names must be distinct");
  if (l.frontal_set.empty() || l.parietal_set.empty())
    throw Error(ErrorCode::ConfigInvalid, "frontal and parietal sets must be non-empty");
  for (std::size_t c : l.frontal_set) {
    if (c >= l.size()) throw Error(ErrorCode::ConfigInvalid, "frontal index out of range");
    if (l.is_parietal(c)) throw Error(ErrorCode::ConfigInvalid, "frontal and parietal sets overlap");
  }
  for (std::size_t c : l.parietal_set)
    if (c >= l.size()) throw Error(ErrorCode::ConfigInvalid, "parietal index out of range");
}

inline const std::vector<std::string>& standard_frontal_labels() {
  static const std::vector<std::string> v{"Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8"};
  return v;
}

inline const std::vector<std::string>& standard_parietal_labels() {
  static const std::vector<std::string> v{"P7", "P3", "Pz", "P4", "P8"};
  return v;
}

// Groups are assigned by 10-20 label; validates the result.
inline ChannelLayout layout_from_names(std::string name, std::vector<std::string> labels) {
  ChannelLayout l;
  l.name = std::move(name);
  l.channel_names = std::move(labels);
  for (std::size_t c = 0; c < l.channel_names.size(); ++c) {
    const auto& label = l.channel_names[c];
    const auto& fr = standard_frontal_labels();
    const auto& pa = standard_parietal_labels();
    if (std::find(fr.begin(), fr.end(), label) != fr.end()) l.frontal_set.push_back(c);
    if (std::find(pa.begin(), pa.end(), label) != pa.end()) l.parietal_set.push_back(c);
  }
  validate(l);
  return l;
}

inline ChannelLayout standard_layout() {
  return layout_from_names("standard16", {"Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "C3", "Cz", "C4", "P7", "P3",
                                          "Pz", "P4", "P8", "Oz"});
}

inline ChannelLayout layout_by_name(const std::string& name) {
  if (name == "standard16") return standard_layout();
  throw Error(ErrorCode::ConfigInvalid, "unknown layout '" + name + "'");
}

struct BandDefinition {
  std::string name;
  double f_low_hz = 0;
  double f_high_hz = 0;
};

inline BandDefinition theta_band() { return {"theta", 4.0, 8.0}; }
inline BandDefinition alpha_band() { return {"alpha", 8.0, 12.0}; }

// Block of samples, µV, one row per channel. Frame j is at
// start_time_s + j / sampling_rate_hz.
struct EegChunk {
  double start_time_s = 0.0;
  double sampling_rate_hz = 0.0;
  Matrix samples;

  std::size_t frames() const { return samples.cols; }
  double end_time_s() const { return start_time_s + static_cast<double>(frames()) / sampling_rate_hz; }

  bool operator==(const EegChunk&) const = default;
};

// Trailing window ending (exclusively) at end_time_s.
struct Epoch {
  double end_time_s = 0.0;
  double window_s = 0.0;
  double sampling_rate_hz = 0.0;
  Matrix samples;

  double last_sample_time_s() const { return end_time_s - 1.0 / sampling_rate_hz; }
};

// A whole contiguous recording, as read from or written to CSV.
struct Recording {
  ChannelLayout layout;
  double sampling_rate_hz = 0.0;
  double start_time_s = 0.0;
  Matrix samples;

  std::size_t frames() const { return samples.cols; }
};

}  // namespace b2p::pipeline
