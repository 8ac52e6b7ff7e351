#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "b2p/error.hpp"
#include "b2p/pipeline/types.hpp"

namespace b2p::pipeline {

enum class WorkloadClass { Nominal, Overload };

NLOHMANN_JSON_SERIALIZE_ENUM(WorkloadClass, {{WorkloadClass::Nominal, "nominal"}, {WorkloadClass::Overload, "overload"}})

inline constexpr double kAlphaFloor = 1e-12;  // µV²

struct IndexResult {
  double index = 0.0;
  bool degenerate_alpha = false;  // the floor replaced the alpha mean
};

inline double mean_over(std::span<const double> values, const std::vector<std::size_t>& subset) {
  double acc = 0.0;
  for (std::size_t c : subset) acc += values[c];
  return acc / static_cast<double>(subset.size());
}

// Frontal theta over parietal alpha. Higher theta and lower alpha both raise it.
inline IndexResult workload_index(std::span<const double> theta_power, std::span<const double> alpha_power,
                                  const ChannelLayout& layout) {
  const double theta = mean_over(theta_power, layout.frontal_set);
  const double alpha = mean_over(alpha_power, layout.parietal_set);
  IndexResult r;
  r.degenerate_alpha = !(alpha > kAlphaFloor);
  r.index = theta / (r.degenerate_alpha ? kAlphaFloor : alpha);
  return r;
}

inline double max_abs(const Matrix& m) {
  double peak = 0.0;
  for (double v : m.data) peak = std::max(peak, std::abs(v));
  return peak;
}

// True iff any sample magnitude exceeds the absolute threshold.
inline bool detect_artifact(const Epoch& epoch, double amplitude_threshold_uv = 100.0) {
  if (!(amplitude_threshold_uv > 0)) throw Error(ErrorCode::ConfigInvalid, "artifact threshold must be positive");
  return max_abs(epoch.samples) > amplitude_threshold_uv;
}

// Robust standard deviation, 1.4826 * median absolute deviation.
inline double robust_sigma(std::span<const double> x) {
  if (x.empty()) return 0.0;
  std::vector<double> v(x.begin(), x.end());
  auto median_of = [](std::vector<double>& a) {
    const std::size_t mid = a.size() / 2;
    std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid), a.end());
    double m = a[mid];
    if (a.size() % 2 == 0) m = 0.5 * (m + *std::max_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid)));
    return m;
  };
  const double med = median_of(v);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::abs(x[i] - med);
  return 1.4826 * median_of(v);
}

// Scale-free variant: true iff some channel has a sample further than
// `k` robust standard deviations from zero. Multiplying the epoch by any
// c > 0 leaves the decision unchanged.
inline bool detect_artifact_relative(const Epoch& epoch, double k) {
  for (std::size_t c = 0; c < epoch.samples.rows; ++c) {
    auto row = epoch.samples.row(c);
    const double sigma = robust_sigma(row);
    for (double v : row)
      if (std::abs(v) > k * sigma) return true;
  }
  return false;
}

struct CalibrationState {
  double baseline_index = 0.0;
  std::size_t epochs_used = 0;
  bool complete = false;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Median of the first `required` indices (all of them while fewer exist).
inline CalibrationState calibrate_baseline(std::span<const double> indices, std::size_t required = 20) {
  CalibrationState s;
  s.epochs_used = std::min(indices.size(), required);
  s.baseline_index = median({indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(s.epochs_used)});
  s.complete = required > 0 && indices.size() >= required && s.baseline_index > 0.0;
  return s;
}

// Raw decision is monotone in the index; the emitted class flips only after
// `hysteresis_epochs` consecutive contrary raw decisions.
class HysteresisClassifier {
 public:
  HysteresisClassifier(double threshold_ratio = 1.5, int hysteresis_epochs = 3)
      : threshold_(threshold_ratio), hysteresis_(std::max(1, hysteresis_epochs)) {}

  static WorkloadClass raw_decision(double relative_index, double threshold_ratio) {
    return relative_index > threshold_ratio ? WorkloadClass::Overload : WorkloadClass::Nominal;
  }

  WorkloadClass update_relative(double relative_index) {
    if (raw_decision(relative_index, threshold_) == current_) {
      contrary_ = 0;
    } else if (++contrary_ >= hysteresis_) {
      current_ = current_ == WorkloadClass::Nominal ? WorkloadClass::Overload : WorkloadClass::Nominal;
      contrary_ = 0;
    }
    return current_;
  }

  WorkloadClass classify(double index, const CalibrationState& calibration) {
    if (!calibration.complete) throw Error(ErrorCode::NotCalibrated, "baseline calibration incomplete");
    return update_relative(index / calibration.baseline_index);
  }

  WorkloadClass current() const { return current_; }

 private:
  double threshold_;
  int hysteresis_;
  WorkloadClass current_ = WorkloadClass::Nominal;
  int contrary_ = 0;
};

struct WorkloadSample {
  double end_time_s = 0.0;
  double frontal_theta_power = 0.0;  // µV²
  double parietal_alpha_power = 0.0; // µV²
  double index = 0.0;
  std::optional<double> relative_index;  // empty until calibrated
  WorkloadClass workload_class = WorkloadClass::Nominal;
  bool artifact = false;
  bool degenerate_alpha = false;
  bool calibrated = false;

  bool operator==(const WorkloadSample&) const = default;
};

inline void to_json(nlohmann::json& j, const WorkloadSample& s) {
  j = nlohmann::json{{"end_time_s", s.end_time_s},
                     {"frontal_theta_power", s.frontal_theta_power},
                     {"parietal_alpha_power", s.parietal_alpha_power},
                     {"index", s.index},
                     {"relative_index", s.relative_index ? nlohmann::json(*s.relative_index) : nlohmann::json()},
                     {"class", s.workload_class},
                     {"artifact", s.artifact},
                     {"degenerate_alpha", s.degenerate_alpha},
                     {"calibrated", s.calibrated}};
}

inline void from_json(const nlohmann::json& j, WorkloadSample& s) {
  s.end_time_s = j.at("end_time_s").get<double>();
  s.frontal_theta_power = j.at("frontal_theta_power").get<double>();
  s.parietal_alpha_power = j.at("parietal_alpha_power").get<double>();
  s.index = j.at("index").get<double>();
  const auto& rel = j.at("relative_index");
  s.relative_index = rel.is_null() ? std::nullopt : std::optional<double>(rel.get<double>());
  s.workload_class = j.at("class").get<WorkloadClass>();
  s.artifact = j.at("artifact").get<bool>();
  s.degenerate_alpha = j.value("degenerate_alpha", false);
  s.calibrated = j.value("calibrated", false);
}

}  // namespace b2p::pipeline
