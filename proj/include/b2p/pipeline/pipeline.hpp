#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "b2p/dsp/butterworth.hpp"
#include "b2p/dsp/welch.hpp"
#include "b2p/pipeline/epoching.hpp"
#include "b2p/pipeline/types.hpp"
#include "b2p/pipeline/workload.hpp"

namespace b2p::pipeline {

enum class ArtifactMode { Absolute, Relative };

struct PipelineConfig {
  double sampling_rate_hz = 250.0;
  double window_s = 2.0;
  double step_s = 0.5;
  double welch_segment_s = 1.0;
  double welch_overlap = 0.5;
  double prefilter_low_hz = 1.0;
  double prefilter_high_hz = 40.0;
  int prefilter_order = 10;
  BandDefinition theta = theta_band();
  BandDefinition alpha = alpha_band();
  ArtifactMode artifact_mode = ArtifactMode::Relative;
  double artifact_threshold_uv = 100.0;  // Absolute mode
  double artifact_robust_k = 10.0;       // Relative mode
  std::size_t calibration_epochs = 20;
  double threshold_ratio = 1.5;
  int hysteresis_epochs = 3;
};

// Per-epoch stage shared by the causal and offline paths: artifact check,
// Welch PSD, band powers, index, calibration, then hysteresis classification.
// Artifact epochs skip calibration and classification and hold the class.
class EpochEstimator {
 public:
  EpochEstimator(const PipelineConfig& cfg, ChannelLayout layout)
      : cfg_(cfg),
        layout_(std::move(layout)),
        welch_(cfg.sampling_rate_hz,
               dsp::WelchOptions{static_cast<std::size_t>(std::llround(cfg.welch_segment_s * cfg.sampling_rate_hz)),
                                 cfg.welch_overlap, dsp::Taper::Hann}),
        classifier_(cfg.threshold_ratio, cfg.hysteresis_epochs) {
    validate(layout_);
  }

  const CalibrationState& calibration() const { return calibration_; }

  WorkloadSample process(const Epoch& epoch) {
    WorkloadSample s;
    s.end_time_s = epoch.end_time_s;
    s.artifact = cfg_.artifact_mode == ArtifactMode::Absolute
                     ? detect_artifact(epoch, cfg_.artifact_threshold_uv)
                     : detect_artifact_relative(epoch, cfg_.artifact_robust_k);

    const auto psd = welch_.estimate(epoch.samples);
    const auto theta = dsp::band_power(psd, cfg_.theta.f_low_hz, cfg_.theta.f_high_hz);
    const auto alpha = dsp::band_power(psd, cfg_.alpha.f_low_hz, cfg_.alpha.f_high_hz);
    s.frontal_theta_power = mean_over(theta, layout_.frontal_set);
    s.parietal_alpha_power = mean_over(alpha, layout_.parietal_set);
    const IndexResult idx = workload_index(theta, alpha, layout_);
    s.index = idx.index;
    s.degenerate_alpha = idx.degenerate_alpha;

    if (!s.artifact && !calibration_.complete) {
      calibration_indices_.push_back(s.index);
      calibration_ = calibrate_baseline(calibration_indices_, cfg_.calibration_epochs);
    }
    s.calibrated = calibration_.complete;
    if (calibration_.complete) {
      s.relative_index = s.index / calibration_.baseline_index;
      if (!s.artifact) classifier_.update_relative(*s.relative_index);
    }
    s.workload_class = classifier_.current();
    return s;
  }

 private:
  PipelineConfig cfg_;
  ChannelLayout layout_;
  dsp::WelchEstimator welch_;
  HysteresisClassifier classifier_;
  std::vector<double> calibration_indices_;
  CalibrationState calibration_;
};

inline dsp::FilterCoefficients prefilter_for(const PipelineConfig& cfg) {
  return dsp::design_bandpass(cfg.prefilter_low_hz, cfg.prefilter_high_hz, cfg.sampling_rate_hz,
                              cfg.prefilter_order);
}

// Causal filtering with per-channel state carried across chunks.
inline EegChunk apply_filter(const EegChunk& chunk, std::vector<dsp::SosFilter>& state) {
  if (state.size() != chunk.samples.rows)
    throw Error(ErrorCode::ShapeMismatch, "filter bank has " + std::to_string(state.size()) + " channels, chunk has " +
                                              std::to_string(chunk.samples.rows));
  EegChunk out = chunk;
  for (std::size_t c = 0; c < out.samples.rows; ++c) state[c].process(out.samples.row(c));
  return out;
}

// Offline forward-backward filtering of a whole chunk.
inline EegChunk apply_filter_zero_phase(const EegChunk& chunk, const dsp::FilterCoefficients& coeffs) {
  EegChunk out = chunk;
  const auto pad = static_cast<std::size_t>(std::llround(coeffs.sampling_rate_hz));
  for (std::size_t c = 0; c < out.samples.rows; ++c) {
    auto filtered = dsp::filtfilt(coeffs, chunk.samples.row(c), pad);
    std::copy(filtered.begin(), filtered.end(), out.samples.row(c).begin());
  }
  return out;
}

// Real-time pipeline for one stream: chunks in, workload samples out.
// Output at time t depends only on frames timestamped before t.
class WorkloadPipeline {
 public:
  WorkloadPipeline(const PipelineConfig& cfg, ChannelLayout layout)
      : cfg_(cfg),
        epocher_(cfg.window_s, cfg.step_s, cfg.sampling_rate_hz, layout.size()),
        estimator_(cfg, layout) {
    const auto coeffs = prefilter_for(cfg);
    filters_.assign(layout.size(), dsp::SosFilter(coeffs));
  }

  std::vector<WorkloadSample> push(const EegChunk& chunk) {
    if (chunk.sampling_rate_hz != cfg_.sampling_rate_hz)
      throw Error(ErrorCode::ShapeMismatch, "stream sampling rate differs from pipeline configuration");
    std::vector<WorkloadSample> out;
    for (const auto& epoch : epocher_.push(apply_filter(chunk, filters_))) out.push_back(estimator_.process(epoch));
    return out;
  }

  const CalibrationState& calibration() const { return estimator_.calibration(); }

 private:
  PipelineConfig cfg_;
  Epocher epocher_;
  EpochEstimator estimator_;
  std::vector<dsp::SosFilter> filters_;
};

// Offline analysis of a full recording with zero-phase filtering.
inline std::vector<WorkloadSample> analyze_offline(const Recording& rec, PipelineConfig cfg) {
  cfg.sampling_rate_hz = rec.sampling_rate_hz;
  EegChunk whole{rec.start_time_s, rec.sampling_rate_hz, rec.samples};
  if (whole.frames() == 0) return {};
  const EegChunk filtered = apply_filter_zero_phase(whole, prefilter_for(cfg));
  Epocher epocher(cfg.window_s, cfg.step_s, cfg.sampling_rate_hz, rec.layout.size());
  EpochEstimator estimator(cfg, rec.layout);
  std::vector<WorkloadSample> out;
  for (const auto& epoch : epocher.push(filtered)) out.push_back(estimator.process(epoch));
  return out;
}

}  // namespace b2p::pipeline
