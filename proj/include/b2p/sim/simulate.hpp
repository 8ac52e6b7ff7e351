#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "b2p/eeg/replay.hpp"
#include "b2p/pipeline/pipeline.hpp"
#include "b2p/session/session.hpp"
#include "b2p/sim/virtual_player.hpp"

namespace b2p::sim {

struct SimulationOptions {
  std::string session_id = "sim";
  task::GameConfig game;
  eeg::WorkloadScript script = eeg::step_script(60.0);
  eeg::GeneratorParams eeg;
  pipeline::PipelineConfig pipeline;
  VirtualPlayer::Options player;
  double transition_margin_s = 5.0;  // epochs this close to a level change are not scored
  std::string wall_time;             // stamped into the log header only
};

// Derives every stream seed from one master seed.
inline SimulationOptions seeded_options(std::uint64_t seed, SimulationOptions base = {}) {
  base.game.seed = seed;
  base.eeg.seed = mix_seed(seed, 10);
  base.player.seed = mix_seed(seed, 11);
  return base;
}

struct EpochRecord {
  double end_time_s = 0.0;
  pipeline::WorkloadSample sample;
  bool truth_overload = false;
  bool scored = false;
  double latency_s = 0.0;
};

struct Confusion {
  int true_overload = 0;
  int false_overload = 0;
  int true_nominal = 0;
  int false_nominal = 0;

  int scored() const { return true_overload + false_overload + true_nominal + false_nominal; }
  double accuracy() const {
    return scored() ? static_cast<double>(true_overload + true_nominal) / scored() : 0.0;
  }
};

struct SimulationResult {
  session::SessionLog log;
  task::SessionScore score;
  std::string end_reason;
  std::vector<EpochRecord> epochs;
  Confusion confusion;
  pipeline::CalibrationState calibration;
  double max_latency_s = 0.0;
  int artifact_epochs = 0;
  nlohmann::json summary;
};

namespace detail {

inline std::int64_t to_us(double s) { return static_cast<std::int64_t>(std::llround(s * 1e6)); }

inline bool near_transition(const eeg::WorkloadScript& script, double t, double margin) {
  for (double tr : script.transitions())
    if (std::abs(t - tr) <= margin) return true;
  return false;
}

}  // namespace detail

// Runs one full session against synthetic EEG in simulated time. The player
// and a spectator connect first, the spectator configures and starts the
// session, then EEG chunks and player responses are interleaved in timestamp
// order.
inline SimulationResult run_simulation(const SimulationOptions& opt, session::SessionLog::Sink sink = {}) {
  constexpr session::ConnId kPlayer = 1;
  constexpr session::ConnId kSpectator = 2;
  using nlohmann::json;

  eeg::WorkloadScript script = opt.script;
  script.duration_s = opt.game.session_duration_s;
  eeg::validate(script);
  eeg::GeneratorParams gen = opt.eeg;
  gen.sampling_rate_hz = opt.pipeline.sampling_rate_hz;

  task::GameConfig initial;
  initial.seed = opt.game.seed;
  session::Session s(opt.session_id, initial, opt.wall_time, std::move(sink));
  VirtualPlayer player(opt.session_id, opt.game, opt.player);
  auto source = eeg::make_synthetic_source(script, gen);
  pipeline::WorkloadPipeline pipe(opt.pipeline, gen.layout);
  SimulationResult result;

  std::int64_t now = 0;
  auto deliver = [&](const std::vector<session::Outbound>& outs) {
    for (const auto& o : outs)
      if (!o.to || *o.to == kPlayer) player.observe(o.message, now);
  };
  auto msg = [&](const char* type, json body = json::object()) {
    body["type"] = type;
    body["session_id"] = opt.session_id;
    return body;
  };

  deliver(s.handle(kPlayer, msg("subscribe", {{"role", "player"}})));
  deliver(s.handle(kSpectator, msg("subscribe", {{"role", "spectator"}})));
  deliver(s.handle(kSpectator, msg("set_config", {{"config", opt.game}})));
  if (s.state().config != opt.game) throw Error(ErrorCode::ConfigInvalid, "session rejected the game configuration");
  deliver(s.handle(kSpectator, msg("start_session")));

  auto chunk = source->next();
  const double last_frame_offset = 1.0 / gen.sampling_rate_hz;
  while (s.state().phase == session::SessionPhase::Running) {
    std::int64_t next = std::numeric_limits<std::int64_t>::max();
    if (chunk) next = std::min(next, detail::to_us(chunk->end_time_s()));
    if (auto due = player.due_us()) next = std::min(next, *due);
    next = std::min(next, detail::to_us(opt.game.session_duration_s));
    next = std::max(next, now);

    deliver(s.tick_us(next - now));
    now = next;
    if (s.state().phase != session::SessionPhase::Running) break;

    if (chunk && detail::to_us(chunk->end_time_s()) <= now) {
      for (const auto& sample : pipe.push(*chunk)) {
        deliver(s.publish_workload(sample));
        EpochRecord rec;
        rec.end_time_s = sample.end_time_s;
        rec.sample = sample;
        rec.latency_s = static_cast<double>(now) * 1e-6 - (sample.end_time_s - last_frame_offset);
        const double mid = sample.end_time_s - opt.pipeline.window_s / 2.0;
        rec.truth_overload = script.level_at(mid) >= 0.5;
        rec.scored = sample.calibrated && !sample.artifact &&
                     !detail::near_transition(script, mid, opt.transition_margin_s + opt.pipeline.window_s / 2.0);
        result.epochs.push_back(rec);
      }
      chunk = source->next();
    }
    if (auto due = player.due_us(); due && *due <= now && s.state().phase == session::SessionPhase::Running)
      deliver(s.handle(kPlayer, player.take()));
  }

  result.calibration = pipe.calibration();
  for (const auto& e : result.epochs) {
    result.max_latency_s = std::max(result.max_latency_s, e.latency_s);
    if (e.sample.artifact) ++result.artifact_epochs;
    if (!e.scored) continue;
    const bool over = e.sample.workload_class == pipeline::WorkloadClass::Overload;
    if (over && e.truth_overload) ++result.confusion.true_overload;
    else if (over) ++result.confusion.false_overload;
    else if (e.truth_overload) ++result.confusion.false_nominal;
    else ++result.confusion.true_nominal;
  }
  result.score = s.machine() ? s.machine()->score() : task::SessionScore{};
  result.end_reason = s.state().end_reason.value_or("");
  result.log = s.log();

  json epochs = json::array();
  for (const auto& e : result.epochs)
    epochs.push_back({{"end_time_s", e.end_time_s},
                      {"index", e.sample.index},
                      {"class", e.sample.workload_class},
                      {"truth", e.truth_overload ? "overload" : "nominal"},
                      {"artifact", e.sample.artifact},
                      {"scored", e.scored}});
  const auto& c = result.confusion;
  result.summary = {
      {"session_id", opt.session_id},
      {"seed", opt.game.seed},
      {"end_reason", result.end_reason},
      {"score", result.score},
      {"workload",
       {{"epochs", result.epochs.size()},
        {"artifact_epochs", result.artifact_epochs},
        {"calibration", {{"baseline_index", result.calibration.baseline_index},
                         {"epochs_used", result.calibration.epochs_used},
                         {"complete", result.calibration.complete}}},
        {"confusion", {{"true_overload", c.true_overload},
                       {"false_overload", c.false_overload},
                       {"true_nominal", c.true_nominal},
                       {"false_nominal", c.false_nominal}}},
        {"scored_epochs", c.scored()},
        {"accuracy", c.accuracy()},
        {"max_latency_s", result.max_latency_s}}},
      {"epochs", std::move(epochs)}};
  return result;
}

}  // namespace b2p::sim
