#pragma once

// Headless command implementations behind the `b2p` executable. Each command
// writes machine-readable output to `out`, diagnostics to `err`, and returns
// the process exit code.

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "b2p/eeg/csv.hpp"
#include "b2p/eeg/replay.hpp"
#include "b2p/error.hpp"
#include "b2p/pipeline/pipeline.hpp"
#include "b2p/session/replay.hpp"
#include "b2p/sim/simulate.hpp"
#include "b2p/task/sequence.hpp"

namespace b2p::cli {

enum Exit : int { kOk = 0, kFailure = 1, kEnvironment = 2, kInputData = 3, kConfiguration = 4 };

inline int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::MalformedFile:
    case ErrorCode::MissingMetadata:
    case ErrorCode::LogCorrupt:
    case ErrorCode::ShapeMismatch:
      return kInputData;
    case ErrorCode::ConfigInvalid:
    case ErrorCode::InvalidScript:
    case ErrorCode::InvalidBand:
    case ErrorCode::UnstableDesign:
    case ErrorCode::BandOutOfRange:
    case ErrorCode::SegmentTooLong:
      return kConfiguration;
    default:
      return kFailure;
  }
}

// Runs `body`, mapping library errors to exit codes and a one-line message.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "b2p: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "b2p: " << e.what() << '\n';
    return kFailure;
  }
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json read_json_file(const std::string& path, ErrorCode code) {
  std::ifstream in(path);
  if (!in) throw Error(code, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(code, path + ": " + e.what());
  }
}

inline task::GameConfig load_game_config(const std::optional<std::string>& path) {
  if (!path) return {};
  return task::apply_overrides(task::GameConfig{}, read_json_file(*path, ErrorCode::ConfigInvalid));
}

// ---- gen-sequence ---------------------------------------------------------

struct GenSequenceOptions {
  std::optional<std::string> config_path;
  std::optional<int> n_level;
  std::optional<int> trial_count;
  std::optional<double> target_rate;
  std::optional<std::uint64_t> seed;
};

inline int gen_sequence(const GenSequenceOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    task::GameConfig c = load_game_config(o.config_path);
    if (o.n_level) c.n_level = *o.n_level;
    if (o.trial_count) c.trial_count = *o.trial_count;
    if (o.target_rate) c.target_rate = *o.target_rate;
    if (o.seed) c.seed = *o.seed;
    out << nlohmann::json(task::generate_sequence(c)).dump() << '\n';
    return int{kOk};
  });
}

// ---- simulate -------------------------------------------------------------

struct SimulateOptions {
  std::optional<std::string> script_path;
  std::optional<std::string> config_path;
  std::string player = "accuracy=0.9";
  std::uint64_t seed = 0;
  std::optional<std::string> session_id;
  std::string log_dir = "sessions";
  std::optional<std::string> log_path;  // overrides log_dir/<id>.jsonl
  bool include_epochs = true;
};

// Parses `key=value[,key=value...]` into player options.
inline sim::VirtualPlayer::Options parse_player_spec(const std::string& spec, sim::VirtualPlayer::Options base = {}) {
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigInvalid, "player option '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size())
      throw Error(ErrorCode::ConfigInvalid, "player option '" + key + "' needs a number");
    if (key == "accuracy") base.accuracy = v;
    else if (key == "min_latency") base.min_latency_s = v;
    else if (key == "max_latency") base.max_latency_s = v;
    else throw Error(ErrorCode::ConfigInvalid, "unknown player option '" + key + "'");
  }
  if (!(base.accuracy >= 0.0 && base.accuracy <= 1.0))
    throw Error(ErrorCode::ConfigInvalid, "player accuracy must be within [0, 1]");
  if (!(base.min_latency_s > 0.0 && base.max_latency_s >= base.min_latency_s))
    throw Error(ErrorCode::ConfigInvalid, "player latency range must be positive and ordered");
  return base;
}

inline int simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    sim::SimulationOptions opt = sim::seeded_options(o.seed);
    const auto seeded_game = opt.game;
    if (o.config_path) {
      const auto patch = read_json_file(*o.config_path, ErrorCode::ConfigInvalid);
      opt.game = task::apply_overrides(seeded_game, patch);
    }
    task::validate(opt.game);
    if (o.script_path)
      opt.script = eeg::script_from_json(read_json_file(*o.script_path, ErrorCode::InvalidScript),
                                         opt.game.session_duration_s);
    opt.player = parse_player_spec(o.player, opt.player);
    opt.session_id = o.session_id.value_or("sim-" + std::to_string(o.seed));
    opt.wall_time = utc_timestamp();

    const std::filesystem::path log_path =
        o.log_path ? std::filesystem::path(*o.log_path) : std::filesystem::path(o.log_dir) / (opt.session_id + ".jsonl");
    std::error_code ec;
    if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path(), ec);
    std::ofstream log(log_path);
    if (!log) {
      err << "b2p: cannot write session log " << log_path.string() << '\n';
      return int{kEnvironment};
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto result = sim::run_simulation(opt, [&](const nlohmann::json& e) { log << e.dump() << '\n'; });
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    auto summary = result.summary;
    summary["log"] = log_path.string();
    if (!o.include_epochs) summary.erase("epochs");
    out << summary.dump() << '\n';
    err << "simulated " << opt.game.session_duration_s << " s session in " << wall << " s wall time\n";
    return int{kOk};
  });
}

// ---- analyze --------------------------------------------------------------

struct AnalyzeOptions {
  std::string input;
  std::optional<std::string> bands;   // "theta=4-8,alpha=8-12"
  std::optional<std::string> layout;  // named layout the file must match
  std::optional<std::string> out_path;
};

inline void apply_band_spec(const std::string& spec, pipeline::PipelineConfig& cfg) {
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('='), dash = item.find('-', eq == std::string::npos ? 0 : eq + 1);
    if (eq == std::string::npos || dash == std::string::npos)
      throw Error(ErrorCode::ConfigInvalid, "band '" + item + "' is not name=low-high");
    pipeline::BandDefinition b{item.substr(0, eq), 0.0, 0.0};
    try {
      std::size_t used = 0;
      const std::string lo = item.substr(eq + 1, dash - eq - 1), hi = item.substr(dash + 1);
      b.f_low_hz = std::stod(lo, &used);
      if (used != lo.size()) throw std::invalid_argument(lo);
      b.f_high_hz = std::stod(hi, &used);
      if (used != hi.size()) throw std::invalid_argument(hi);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ConfigInvalid, "band '" + item + "' has a non-numeric edge");
    }
    if (!(b.f_low_hz >= 0.0 && b.f_high_hz > b.f_low_hz))
      throw Error(ErrorCode::InvalidBand, "band '" + item + "' must satisfy 0 <= low < high");
    if (b.name == "theta") cfg.theta = b;
    else if (b.name == "alpha") cfg.alpha = b;
    else throw Error(ErrorCode::ConfigInvalid, "unknown band '" + b.name + "' (expected theta or alpha)");
  }
}

inline int analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    pipeline::PipelineConfig cfg;
    if (o.bands) apply_band_spec(*o.bands, cfg);
    std::optional<pipeline::ChannelLayout> named;
    if (o.layout) named = pipeline::layout_by_name(*o.layout);

    eeg::Recording rec = eeg::read_recording(o.input);
    if (named) {
      if (named->channel_names != rec.layout.channel_names)
        throw Error(ErrorCode::ShapeMismatch, o.input + ": channel labels do not match layout " + named->name);
      rec.layout = *named;
    }
    const auto samples = pipeline::analyze_offline(rec, cfg);
    if (samples.empty())
      err << "b2p: warning: " << o.input << " is shorter than one " << cfg.window_s << " s window; no samples\n";

    std::ofstream file;
    if (o.out_path) {
      file.open(*o.out_path);
      if (!file) {
        err << "b2p: cannot write " << *o.out_path << '\n';
        return int{kEnvironment};
      }
    }
    std::ostream& dst = o.out_path ? static_cast<std::ostream&>(file) : out;
    for (const auto& s : samples) dst << nlohmann::json(s).dump() << '\n';
    return int{kOk};
  });
}

// ---- replay-log -----------------------------------------------------------

inline int replay_log(const std::string& path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto entries = session::read_log(std::filesystem::path(path));
    const session::Session s = session::replay_session(entries);
    nlohmann::json summary{{"ok", true},
                           {"session_id", s.state().session_id},
                           {"entries", entries.size()},
                           {"phase", s.state().phase},
                           {"end_reason", s.state().end_reason ? nlohmann::json(*s.state().end_reason) : nlohmann::json()},
                           {"score", s.machine() ? s.machine()->score() : task::SessionScore{}}};
    out << summary.dump() << '\n';
    return int{kOk};
  });
}

// ---- record ---------------------------------------------------------------

struct RecordOptions {
  std::optional<std::string> script_path;
  std::uint64_t seed = 0;
  double duration_s = 180.0;
  std::string out_path;
  std::optional<double> artifact_rate_per_min;
};

inline int record(const RecordOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    eeg::WorkloadScript script = o.script_path
        ? eeg::script_from_json(read_json_file(*o.script_path, ErrorCode::InvalidScript), o.duration_s)
        : eeg::step_script(60.0, o.duration_s);
    eeg::GeneratorParams p;
    p.seed = o.seed;
    if (o.artifact_rate_per_min) p.artifact_rate_per_min = *o.artifact_rate_per_min;
    eeg::validate(p);
    const auto rec = eeg::record(script, p);
    eeg::write_recording(o.out_path, rec);
    out << nlohmann::json{{"out", o.out_path}, {"frames", rec.samples.cols}, {"channels", rec.samples.rows}}.dump()
        << '\n';
    return int{kOk};
  });
}

}  // namespace b2p::cli
