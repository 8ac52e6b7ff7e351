#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "b2p/error.hpp"
#include "b2p/pipeline/workload.hpp"
#include "b2p/session/messages.hpp"
#include "b2p/task/game_config.hpp"
#include "b2p/task/game_machine.hpp"
#include "b2p/task/sequence.hpp"

namespace b2p::session {

enum class SessionPhase { Configuring, Running, Finished };

NLOHMANN_JSON_SERIALIZE_ENUM(SessionPhase, {{SessionPhase::Configuring, "configuring"},
                                            {SessionPhase::Running, "running"},
                                            {SessionPhase::Finished, "finished"}})

inline std::string sequence_digest(const task::OrderSequence& seq) {
  return task::hex64(fnv1a64(nlohmann::json(seq).dump()));
}

// Append-only record of everything that crossed the session boundary.
// Entry kinds: header, in, tick, workload, connect, disconnect (inputs) and out.
// Replaying the inputs through a fresh Session reproduces every out entry.
class SessionLog {
 public:
  using Sink = std::function<void(const nlohmann::json&)>;

  void set_sink(Sink sink) { sink_ = std::move(sink); }

  void append(nlohmann::json entry) {
    entry["seq"] = entries_.size();
    if (sink_) sink_(entry);
    entries_.push_back(std::move(entry));
  }

  const std::vector<nlohmann::json>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<nlohmann::json> entries_;
  Sink sink_;
};

struct SessionState {
  std::string session_id;
  SessionPhase phase = SessionPhase::Configuring;
  task::GameConfig config;
  task::OrderSequence sequence;
  std::int64_t clock_us = 0;
  std::optional<pipeline::WorkloadSample> latest_workload;
  std::optional<std::string> end_reason;

  double clock_s() const { return static_cast<double>(clock_us) * 1e-6; }
};

// One game session. All state changes come from a handful of entry points
// (handle, tick, publish_workload, connect, disconnect); each returns the messages to deliver
// and appends inputs and outputs to the log in delivery order.
class Session {
 public:
  explicit Session(std::string session_id, task::GameConfig initial = {}, std::string wall_time = {},
                   SessionLog::Sink sink = {}) {
    state_.session_id = std::move(session_id);
    state_.config = initial;
    state_.sequence = task::generate_sequence(initial);
    log_.set_sink(std::move(sink));
    nlohmann::json header{{"kind", "header"}, {"session_id", state_.session_id}, {"initial_config", initial}};
    if (!wall_time.empty()) header["wall_time"] = wall_time;
    log_.append(std::move(header));
  }

  const SessionState& state() const { return state_; }
  const SessionLog& log() const { return log_; }
  const std::optional<task::GameMachine>& machine() const { return machine_; }
  const std::map<ConnId, Role>& subscribers() const { return roles_; }

  std::vector<Outbound> handle(ConnId conn, const nlohmann::json& message) {
    log_input({{"kind", "in"}, {"conn", conn}, {"msg", message}});
    std::vector<Outbound> outs;
    try {
      Inbound in = parse_inbound(message);
      if (in.session_id != state_.session_id)
        throw Error(ErrorCode::UnknownSession, "no session '" + in.session_id + "'");
      std::visit([&](const auto& body) { on(conn, body, outs); }, in.body);
    } catch (const Error& e) {
      emit(outs, conn, make(out::kError, {{"code", to_string(e.code())}, {"message", e.what()}}));
    }
    return outs;
  }

  // Advances the session clock by `dt_s`, rounded to whole microseconds.
  std::vector<Outbound> tick(double dt_s) {
    if (!(dt_s >= 0.0)) throw Error(ErrorCode::BadMessage, "tick must be non-negative");
    return tick_us(static_cast<std::int64_t>(std::llround(dt_s * 1e6)));
  }

  std::vector<Outbound> tick_us(std::int64_t dt_us) {
    std::vector<Outbound> outs;
    if (state_.phase != SessionPhase::Running || dt_us <= 0) return outs;
    log_input({{"kind", "tick"}, {"dt_us", dt_us}});
    const std::int64_t before = state_.clock_us;
    state_.clock_us += dt_us;
    const std::int64_t duration_us = static_cast<std::int64_t>(std::llround(state_.config.session_duration_s * 1e6));
    const std::int64_t last_us = std::min(state_.clock_us, duration_us);
    for (std::int64_t k = before / 1000000 + 1; k * 1000000 <= last_us; ++k) {
      const double remaining = std::max(0.0, state_.config.session_duration_s - static_cast<double>(k));
      emit(outs, std::nullopt, make(out::kCountdownTick, {{"remaining_s", remaining}}));
    }
    if (state_.clock_us >= duration_us) {
      auto fx = machine_->advance(task::GameEvent::clock_expired(), state_.clock_s());
      finish(outs, fx, "clock_expired");
    }
    return outs;
  }

  std::vector<Outbound> publish_workload(const pipeline::WorkloadSample& sample) {
    std::vector<Outbound> outs;
    if (state_.phase != SessionPhase::Running) return outs;
    log_input({{"kind", "workload"}, {"sample", sample}});
    state_.latest_workload = sample;
    emit(outs, std::nullopt, make(out::kWorkloadUpdate, {{"sample", sample}}));
    return outs;
  }

  // A transport connection opened; it is greeted with the current phase so
  // the client learns the session id before subscribing.
  std::vector<Outbound> connect(ConnId conn) {
    log_input({{"kind", "connect"}, {"conn", conn}});
    std::vector<Outbound> outs;
    emit_phase(outs, conn);
    return outs;
  }

  std::vector<Outbound> disconnect(ConnId conn) {
    if (roles_.erase(conn) > 0) log_input({{"kind", "disconnect"}, {"conn", conn}});
    return {};
  }

 private:
  void log_input(nlohmann::json entry) {
    entry["clock_us"] = state_.clock_us;
    log_.append(std::move(entry));
  }

  nlohmann::json make(const char* type, nlohmann::json body) const {
    body["type"] = type;
    body["session_id"] = state_.session_id;
    body["clock_s"] = state_.clock_s();
    return body;
  }

  void emit(std::vector<Outbound>& outs, std::optional<ConnId> to, nlohmann::json msg) {
    log_.append({{"kind", "out"}, {"to", to ? nlohmann::json(*to) : nlohmann::json("*")}, {"msg", msg}});
    outs.push_back({to, std::move(msg)});
  }

  void emit_phase(std::vector<Outbound>& outs, std::optional<ConnId> to) {
    nlohmann::json game = machine_ ? nlohmann::json(machine_->phase()) : nlohmann::json(task::GamePhase{});
    emit(outs, to, make(out::kPhaseChanged, {{"session_phase", state_.phase}, {"phase", std::move(game)}}));
  }

  void emit_order(std::vector<Outbound>& outs) {
    const auto& order = state_.sequence.orders.at(machine_->phase().order_index);
    // The target flag stays server-side; the drink is delivered as an audio cue.
    emit(outs, std::nullopt,
         make(out::kOrderPresented, {{"order_index", order.index},
                                     {"customer_id", order.customer_id},
                                     {"ingredients", order.ingredients},
                                     {"drink_cue", {{"drink", order.drink}, {"modality", "audio"}}},
                                     {"order_count", state_.sequence.size()}}));
  }

  void finish(std::vector<Outbound>& outs, const task::StepEffects& fx, const char* reason) {
    state_.phase = SessionPhase::Finished;
    state_.end_reason = reason;
    emit_phase(outs, std::nullopt);
    emit(outs, std::nullopt,
         make(out::kSessionEnd, {{"reason", reason}, {"score", *fx.final_score}, {"outcomes", machine_->outcomes()}}));
  }

  void step(std::vector<Outbound>& outs, const task::GameEvent& ev) {
    auto fx = machine_->advance(ev, state_.clock_s());
    if (fx.phase.kind == task::PhaseKind::Finished) {
      finish(outs, fx, "sequence_exhausted");
      return;
    }
    emit_phase(outs, std::nullopt);
    if (fx.phase.kind == task::PhaseKind::Presenting) {
      emit_order(outs);
      step(outs, task::GameEvent::present_next());
    } else if (fx.outcome) {
      emit(outs, std::nullopt, make(out::kTrialFeedback, {{"outcome", *fx.outcome}}));
      emit(outs, std::nullopt, make(out::kScoreUpdate, {{"score", machine_->score()}}));
      step(outs, task::GameEvent::feedback_done());
    }
  }

  void require_player(ConnId conn) const {
    if (state_.phase != SessionPhase::Running)
      throw Error(ErrorCode::NotRunning, "session is not running");
    auto it = roles_.find(conn);
    if (it == roles_.end() || it->second != Role::Player)
      throw Error(ErrorCode::RoleViolation, "only the player connection may submit responses");
  }

  void on(ConnId, const SetConfig& m, std::vector<Outbound>& outs) {
    if (state_.phase != SessionPhase::Configuring)
      throw Error(ErrorCode::ConfigLocked, "configuration is frozen once the session starts");
    task::GameConfig next = task::apply_overrides(state_.config, m.config);
    task::OrderSequence seq = task::generate_sequence(next);
    state_.config = std::move(next);
    state_.sequence = std::move(seq);
    emit(outs, std::nullopt,
         make(out::kConfigAck, {{"config", state_.config},
                                {"config_hash", state_.sequence.config_hash},
                                {"sequence_digest", sequence_digest(state_.sequence)},
                                {"order_count", state_.sequence.size()},
                                {"target_count", state_.config.target_count()}}));
  }

  void on(ConnId, const StartSession&, std::vector<Outbound>& outs) {
    if (state_.phase != SessionPhase::Configuring)
      throw Error(ErrorCode::AlreadyRunning, "session already started");
    state_.phase = SessionPhase::Running;
    state_.clock_us = 0;
    machine_.emplace(state_.sequence);
    emit(outs, std::nullopt, make(out::kCountdownTick, {{"remaining_s", state_.config.session_duration_s}}));
    step(outs, task::GameEvent::present_next());
  }

  void on(ConnId conn, const SubmitJudgment& m, std::vector<Outbound>& outs) {
    require_player(conn);
    step(outs, task::GameEvent::judge(m.judgment));
  }

  void on(ConnId conn, const SubmitDrink& m, std::vector<Outbound>& outs) {
    require_player(conn);
    step(outs, task::GameEvent::select_drink(m.drink));
  }

  void on(ConnId conn, const SubmitIngredients& m, std::vector<Outbound>& outs) {
    require_player(conn);
    step(outs, task::GameEvent::select_ingredients(m.ingredients));
  }

  void on(ConnId conn, const Subscribe& m, std::vector<Outbound>& outs) {
    if (m.role == Role::Player) {
      for (const auto& [c, r] : roles_)
        if (r == Role::Player && c != conn)
          throw Error(ErrorCode::RoleViolation, "a player is already connected");
    }
    roles_[conn] = m.role;
    // Late joiners get the current phase so their view starts consistent.
    emit_phase(outs, conn);
    if (machine_) emit(outs, conn, make(out::kScoreUpdate, {{"score", machine_->score()}}));
  }

  SessionState state_;
  SessionLog log_;
  std::optional<task::GameMachine> machine_;
  std::map<ConnId, Role> roles_;
};

}  // namespace b2p::session
