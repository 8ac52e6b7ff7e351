#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "b2p/error.hpp"
#include "b2p/task/evaluation.hpp"
#include "b2p/task/sequence.hpp"

namespace b2p::task {

enum class PhaseKind { Idle, Presenting, Judging, SelectingDrink, SelectingIngredients, Feedback, Finished };

NLOHMANN_JSON_SERIALIZE_ENUM(PhaseKind, {{PhaseKind::Idle, "idle"},
                                         {PhaseKind::Presenting, "presenting"},
                                         {PhaseKind::Judging, "judging"},
                                         {PhaseKind::SelectingDrink, "selecting_drink"},
                                         {PhaseKind::SelectingIngredients, "selecting_ingredients"},
                                         {PhaseKind::Feedback, "feedback"},
                                         {PhaseKind::Finished, "finished"}})

struct GamePhase {
  PhaseKind kind = PhaseKind::Idle;
  std::size_t order_index = 0;  // meaningful for the per-order phases only

  bool operator==(const GamePhase&) const = default;
};

enum class EventKind { PresentNext, SubmitJudgment, SubmitDrink, SubmitIngredients, FeedbackDone, ClockExpired };

constexpr std::string_view to_string(PhaseKind k) {
  switch (k) {
    case PhaseKind::Idle: return "idle";
    case PhaseKind::Presenting: return "presenting";
    case PhaseKind::Judging: return "judging";
    case PhaseKind::SelectingDrink: return "selecting_drink";
    case PhaseKind::SelectingIngredients: return "selecting_ingredients";
    case PhaseKind::Feedback: return "feedback";
    case PhaseKind::Finished: return "finished";
  }
  return "?";
}

constexpr std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::PresentNext: return "present_next";
    case EventKind::SubmitJudgment: return "submit_judgment";
    case EventKind::SubmitDrink: return "submit_drink";
    case EventKind::SubmitIngredients: return "submit_ingredients";
    case EventKind::FeedbackDone: return "feedback_done";
    case EventKind::ClockExpired: return "clock_expired";
  }
  return "?";
}

// The bare transition table. PresentNext starts the first order from Idle and
// marks an order as fully presented (Presenting -> Judging). FeedbackDone on
// the last order ends the game. std::nullopt means the event is illegal.
constexpr std::optional<GamePhase> advance_phase(GamePhase s, EventKind e, std::size_t order_count) {
  if (s.kind == PhaseKind::Finished) return std::nullopt;
  if (e == EventKind::ClockExpired) return GamePhase{PhaseKind::Finished, s.order_index};
  const std::size_t i = s.order_index;
  switch (s.kind) {
    case PhaseKind::Idle:
      if (e != EventKind::PresentNext) return std::nullopt;
      if (order_count == 0) return GamePhase{PhaseKind::Finished, 0};
      return GamePhase{PhaseKind::Presenting, 0};
    case PhaseKind::Presenting:
      if (e == EventKind::PresentNext) return GamePhase{PhaseKind::Judging, i};
      return std::nullopt;
    case PhaseKind::Judging:
      if (e == EventKind::SubmitJudgment) return GamePhase{PhaseKind::SelectingDrink, i};
      return std::nullopt;
    case PhaseKind::SelectingDrink:
      if (e == EventKind::SubmitDrink) return GamePhase{PhaseKind::SelectingIngredients, i};
      return std::nullopt;
    case PhaseKind::SelectingIngredients:
      if (e == EventKind::SubmitIngredients) return GamePhase{PhaseKind::Feedback, i};
      return std::nullopt;
    case PhaseKind::Feedback:
      if (e != EventKind::FeedbackDone) return std::nullopt;
      if (i + 1 >= order_count) return GamePhase{PhaseKind::Finished, i};
      return GamePhase{PhaseKind::Presenting, i + 1};
    case PhaseKind::Finished:
      return std::nullopt;
  }
  return std::nullopt;
}

struct GameEvent {
  EventKind kind = EventKind::PresentNext;
  Judgment judgment = Judgment::No;
  std::string drink;
  std::vector<std::string> ingredients;

  static GameEvent present_next() { return {EventKind::PresentNext, {}, {}, {}}; }
  static GameEvent judge(Judgment j) { return {EventKind::SubmitJudgment, j, {}, {}}; }
  static GameEvent select_drink(std::string d) { return {EventKind::SubmitDrink, {}, std::move(d), {}}; }
  static GameEvent select_ingredients(std::vector<std::string> ing) {
    return {EventKind::SubmitIngredients, {}, {}, std::move(ing)};
  }
  static GameEvent feedback_done() { return {EventKind::FeedbackDone, {}, {}, {}}; }
  static GameEvent clock_expired() { return {EventKind::ClockExpired, {}, {}, {}}; }
};

struct StepEffects {
  GamePhase phase;
  std::optional<TrialOutcome> outcome;     // set when an order cycle completes
  std::optional<SessionScore> final_score; // set on entering Finished
};

// Drives one game over a fixed sequence. Every mutation goes through
// advance(); a rejected event throws IllegalTransition and leaves the machine
// untouched. Time enters only through the clock argument.
class GameMachine {
 public:
  explicit GameMachine(OrderSequence seq) : seq_(std::move(seq)) {}

  const OrderSequence& sequence() const { return seq_; }
  const GamePhase& phase() const { return phase_; }
  const SessionScore& score() const { return score_; }
  const std::vector<TrialOutcome>& outcomes() const { return outcomes_; }
  bool finished() const { return phase_.kind == PhaseKind::Finished; }

  StepEffects advance(const GameEvent& event, double clock_s) {
    auto next = advance_phase(phase_, event.kind, seq_.size());
    if (!next)
      throw Error(ErrorCode::IllegalTransition,
                  std::string(to_string(event.kind)) + " not allowed in " + std::string(to_string(phase_.kind)));

    StepEffects fx;
    switch (event.kind) {
      case EventKind::SubmitJudgment:
        pending_ = PlayerResponse{};
        pending_.order_index = phase_.order_index;
        pending_.judgment = event.judgment;
        pending_.response_time_ms = std::max(0.0, (clock_s - presented_at_s_) * 1000.0);
        break;
      case EventKind::SubmitDrink:
        pending_.selected_drink = event.drink;
        break;
      case EventKind::SubmitIngredients: {
        pending_.selected_ingredients = event.ingredients;
        TrialOutcome out = tracker_.evaluate(seq_, pending_);
        score_ = update_score(score_, out);
        outcomes_.push_back(out);
        fx.outcome = out;
        break;
      }
      default:
        break;
    }
    phase_ = *next;
    if (phase_.kind == PhaseKind::Presenting) presented_at_s_ = clock_s;
    if (phase_.kind == PhaseKind::Finished) fx.final_score = score_;
    fx.phase = phase_;
    return fx;
  }

 private:
  OrderSequence seq_;
  GamePhase phase_;
  PlayerResponse pending_;
  ResponseTracker tracker_;
  SessionScore score_;
  std::vector<TrialOutcome> outcomes_;
  double presented_at_s_ = 0.0;
};

inline void to_json(nlohmann::json& j, const GamePhase& p) {
  j = nlohmann::json{{"kind", p.kind}};
  if (p.kind != PhaseKind::Idle && p.kind != PhaseKind::Finished) j["order_index"] = p.order_index;
}

}  // namespace b2p::task
