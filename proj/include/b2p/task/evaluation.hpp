#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "b2p/error.hpp"
#include "b2p/task/sequence.hpp"

namespace b2p::task {

enum class Judgment { Yes, No };
enum class Feedback { Positive, Negative };

NLOHMANN_JSON_SERIALIZE_ENUM(Judgment, {{Judgment::Yes, "yes"}, {Judgment::No, "no"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Feedback, {{Feedback::Positive, "positive"}, {Feedback::Negative, "negative"}})

struct PlayerResponse {
  std::size_t order_index = 0;
  Judgment judgment = Judgment::No;
  std::string selected_drink;
  std::vector<std::string> selected_ingredients;
  double response_time_ms = 0.0;
};

// Besides the three correctness flags this carries the judgment context
// (target or not, what was answered, latency) needed to fold the score.
struct TrialOutcome {
  std::size_t order_index = 0;
  bool judgment_correct = false;
  bool drink_correct = false;
  bool ingredients_correct = false;
  bool overall_correct = false;
  Feedback feedback = Feedback::Negative;
  bool is_target = false;
  bool judged_yes = false;
  double response_time_ms = 0.0;

  bool operator==(const TrialOutcome&) const = default;
};

inline TrialOutcome evaluate_response(const OrderSequence& seq, const PlayerResponse& r) {
  const bool target = is_target(seq, r.order_index);  // bounds-checked
  if (r.response_time_ms < 0.0) throw Error(ErrorCode::BadMessage, "negative response time");
  const Order& order = seq.orders[r.order_index];

  TrialOutcome out;
  out.order_index = r.order_index;
  out.is_target = target;
  out.judged_yes = r.judgment == Judgment::Yes;
  out.response_time_ms = r.response_time_ms;
  out.judgment_correct = out.judged_yes == target;
  out.drink_correct = r.selected_drink == order.drink;
  out.ingredients_correct =
      std::set<std::string>(r.selected_ingredients.begin(), r.selected_ingredients.end()) ==
          std::set<std::string>(order.ingredients.begin(), order.ingredients.end()) &&
      r.selected_ingredients.size() == order.ingredients.size();
  out.overall_correct = out.judgment_correct && out.drink_correct && out.ingredients_correct;
  out.feedback = out.overall_correct ? Feedback::Positive : Feedback::Negative;
  return out;
}

// Enforces "one response per order" on top of evaluate_response.
class ResponseTracker {
 public:
  TrialOutcome evaluate(const OrderSequence& seq, const PlayerResponse& r) {
    if (r.order_index < seq.orders.size() && answered_.count(r.order_index))
      throw Error(ErrorCode::DuplicateResponse, "order " + std::to_string(r.order_index) + " already answered");
    TrialOutcome out = evaluate_response(seq, r);
    answered_.insert(r.order_index);
    return out;
  }

 private:
  std::set<std::size_t> answered_;
};

struct SessionScore {
  int orders_completed = 0;
  int orders_correct = 0;
  int judgment_hits = 0;
  int judgment_false_alarms = 0;
  double mean_response_time_ms = 0.0;

  bool operator==(const SessionScore&) const = default;
};

inline SessionScore update_score(SessionScore s, const TrialOutcome& o) {
  ++s.orders_completed;
  if (o.overall_correct) ++s.orders_correct;
  if (o.judged_yes && o.is_target) ++s.judgment_hits;
  if (o.judged_yes && !o.is_target) ++s.judgment_false_alarms;
  s.mean_response_time_ms += (o.response_time_ms - s.mean_response_time_ms) / s.orders_completed;
  return s;
}

inline void to_json(nlohmann::json& j, const TrialOutcome& o) {
  j = nlohmann::json{{"order_index", o.order_index},
                     {"judgment_correct", o.judgment_correct},
                     {"drink_correct", o.drink_correct},
                     {"ingredients_correct", o.ingredients_correct},
                     {"overall_correct", o.overall_correct},
                     {"feedback", o.feedback},
                     {"is_target", o.is_target},
                     {"judged_yes", o.judged_yes},
                     {"response_time_ms", o.response_time_ms}};
}

inline void from_json(const nlohmann::json& j, TrialOutcome& o) {
  o.order_index = j.at("order_index").get<std::size_t>();
  o.judgment_correct = j.at("judgment_correct").get<bool>();
  o.drink_correct = j.at("drink_correct").get<bool>();
  o.ingredients_correct = j.at("ingredients_correct").get<bool>();
  o.overall_correct = j.at("overall_correct").get<bool>();
  o.feedback = j.at("feedback").get<Feedback>();
  o.is_target = j.at("is_target").get<bool>();
  o.judged_yes = j.at("judged_yes").get<bool>();
  o.response_time_ms = j.at("response_time_ms").get<double>();
}

inline void to_json(nlohmann::json& j, const SessionScore& s) {
  j = nlohmann::json{{"orders_completed", s.orders_completed},
                     {"orders_correct", s.orders_correct},
                     {"judgment_hits", s.judgment_hits},
                     {"judgment_false_alarms", s.judgment_false_alarms},
                     {"mean_response_time_ms", s.mean_response_time_ms}};
}

inline void from_json(const nlohmann::json& j, SessionScore& s) {
  s.orders_completed = j.at("orders_completed").get<int>();
  s.orders_correct = j.at("orders_correct").get<int>();
  s.judgment_hits = j.at("judgment_hits").get<int>();
  s.judgment_false_alarms = j.at("judgment_false_alarms").get<int>();
  s.mean_response_time_ms = j.at("mean_response_time_ms").get<double>();
}

}  // namespace b2p::task
