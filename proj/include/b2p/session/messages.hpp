#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "b2p/error.hpp"
#include "b2p/pipeline/workload.hpp"
#include "b2p/task/game_machine.hpp"

namespace b2p::session {

enum class Role { Player, Spectator };

NLOHMANN_JSON_SERIALIZE_ENUM(Role, {{Role::Player, "player"}, {Role::Spectator, "spectator"}})

// Inbound messages. Every one carries the target session_id.
struct SetConfig {
  nlohmann::json config;  // partial GameConfig; absent fields keep their value
};
struct StartSession {};
struct SubmitJudgment {
  task::Judgment judgment = task::Judgment::No;
};
struct SubmitDrink {
  std::string drink;
};
struct SubmitIngredients {
  std::vector<std::string> ingredients;
};
struct Subscribe {
  Role role = Role::Spectator;
};

using InboundBody = std::variant<SetConfig, StartSession, SubmitJudgment, SubmitDrink, SubmitIngredients, Subscribe>;

struct Inbound {
  std::string session_id;
  InboundBody body;
};

// Parses `{"type": "...", "session_id": "...", ...}`; BadMessage on failure.
inline Inbound parse_inbound(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::BadMessage, "message must be a JSON object");
  try {
    Inbound in;
    const auto type = j.at("type").get<std::string>();
    in.session_id = j.at("session_id").get<std::string>();
    if (type == "set_config") {
      in.body = SetConfig{j.at("config")};
    } else if (type == "start_session") {
      in.body = StartSession{};
    } else if (type == "submit_judgment") {
      in.body = SubmitJudgment{j.at("judgment").get<task::Judgment>()};
      if (j.at("judgment") != "yes" && j.at("judgment") != "no")
        throw Error(ErrorCode::BadMessage, "judgment must be \"yes\" or \"no\"");
    } else if (type == "submit_drink") {
      in.body = SubmitDrink{j.at("drink").get<std::string>()};
    } else if (type == "submit_ingredients") {
      in.body = SubmitIngredients{j.at("ingredients").get<std::vector<std::string>>()};
    } else if (type == "subscribe") {
      if (j.at("role") != "player" && j.at("role") != "spectator")
        throw Error(ErrorCode::BadMessage, "role must be \"player\" or \"spectator\"");
      in.body = Subscribe{j.at("role").get<Role>()};
    } else {
      throw Error(ErrorCode::BadMessage, "unknown message type '" + type + "'");
    }
    return in;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadMessage, e.what());
  }
}

inline nlohmann::json to_json(const Inbound& in) {
  nlohmann::json j{{"session_id", in.session_id}};
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, SetConfig>) {
          j["type"] = "set_config";
          j["config"] = b.config;
        } else if constexpr (std::is_same_v<T, StartSession>) {
          j["type"] = "start_session";
        } else if constexpr (std::is_same_v<T, SubmitJudgment>) {
          j["type"] = "submit_judgment";
          j["judgment"] = b.judgment;
        } else if constexpr (std::is_same_v<T, SubmitDrink>) {
          j["type"] = "submit_drink";
          j["drink"] = b.drink;
        } else if constexpr (std::is_same_v<T, SubmitIngredients>) {
          j["type"] = "submit_ingredients";
          j["ingredients"] = b.ingredients;
        } else {
          j["type"] = "subscribe";
          j["role"] = b.role;
        }
      },
      in.body);
  return j;
}

// Outbound message tags.
namespace out {
inline constexpr const char* kConfigAck = "config_ack";
inline constexpr const char* kOrderPresented = "order_presented";
inline constexpr const char* kPhaseChanged = "phase_changed";
inline constexpr const char* kTrialFeedback = "trial_feedback";
inline constexpr const char* kWorkloadUpdate = "workload_update";
inline constexpr const char* kCountdownTick = "countdown_tick";
inline constexpr const char* kScoreUpdate = "score_update";
inline constexpr const char* kSessionEnd = "session_end";
inline constexpr const char* kError = "error";
}  // namespace out

using ConnId = std::uint64_t;

// A message addressed either to every subscriber or to one connection.
struct Outbound {
  std::optional<ConnId> to;  // empty = broadcast
  nlohmann::json message;
};

}  // namespace b2p::session
