#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "b2p/error.hpp"
#include "b2p/random.hpp"

namespace b2p::task {

inline std::vector<std::string> default_drinks() { return {"cola", "water", "juice", "lemonade"}; }

inline std::vector<std::string> default_ingredients() {
  return {"tomato", "cheese", "mushroom", "olive", "ham", "pepper", "onion", "basil"};
}

// Parameters chosen by the audience before play. `n_level` is the N of N-back.
struct GameConfig {
  int n_level = 1;
  int ingredient_count = 3;
  std::vector<std::string> drink_vocab = default_drinks();
  std::vector<std::string> ingredient_vocab = default_ingredients();
  double target_rate = 0.3;
  int trial_count = 60;
  double session_duration_s = 180.0;
  std::uint64_t seed = 0;

  // round(target_rate * (trial_count - n_level)), half away from zero.
  int target_count() const {
    return static_cast<int>(std::lround(target_rate * static_cast<double>(trial_count - n_level)));
  }

  bool operator==(const GameConfig&) const = default;
};

// Throws ConfigInvalid listing every violated constraint.
inline void validate(const GameConfig& c) {
  std::vector<std::string> problems;
  if (c.n_level < 1) problems.push_back("n_level must be >= 1");
  if (c.ingredient_count < 1 || c.ingredient_count > 5) problems.push_back("ingredient_count must be in [1, 5]");
  if (c.drink_vocab.size() < 2) problems.push_back("drink_vocab needs at least 2 entries");
  if (std::set<std::string>(c.drink_vocab.begin(), c.drink_vocab.end()).size() != c.drink_vocab.size())
    problems.push_back("drink_vocab entries must be distinct");
  if (std::set<std::string>(c.ingredient_vocab.begin(), c.ingredient_vocab.end()).size() != c.ingredient_vocab.size())
    problems.push_back("ingredient_vocab entries must be distinct");
  if (c.ingredient_count >= 1 && c.ingredient_vocab.size() < static_cast<std::size_t>(c.ingredient_count))
    problems.push_back("ingredient_vocab smaller than ingredient_count");
  if (!(c.target_rate >= 0.0 && c.target_rate <= 1.0)) problems.push_back("target_rate must be in [0, 1]");
  if (c.n_level >= 1 && c.trial_count < c.n_level + 1) problems.push_back("trial_count must be >= n_level + 1");
  if (!(c.session_duration_s > 0.0) || !std::isfinite(c.session_duration_s))
    problems.push_back("session_duration_s must be positive");
  if (problems.empty() && c.target_count() > c.trial_count - c.n_level)
    problems.push_back("target count not realizable");
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorCode::ConfigInvalid, msg);
  }
}

inline void to_json(nlohmann::json& j, const GameConfig& c) {
  j = nlohmann::json{{"n_level", c.n_level},
                     {"ingredient_count", c.ingredient_count},
                     {"drink_vocab", c.drink_vocab},
                     {"ingredient_vocab", c.ingredient_vocab},
                     {"target_rate", c.target_rate},
                     {"trial_count", c.trial_count},
                     {"session_duration_s", c.session_duration_s},
                     {"seed", c.seed}};
}

// Overlays the fields present in `patch` onto `base`. Unknown keys and type
// mismatches are ConfigInvalid; the result is not validated here.
inline GameConfig apply_overrides(GameConfig base, const nlohmann::json& patch) {
  if (!patch.is_object()) throw Error(ErrorCode::ConfigInvalid, "config must be a JSON object");
  try {
    for (const auto& [key, value] : patch.items()) {
      if (key == "n_level") base.n_level = value.get<int>();
      else if (key == "ingredient_count") base.ingredient_count = value.get<int>();
      else if (key == "drink_vocab") base.drink_vocab = value.get<std::vector<std::string>>();
      else if (key == "ingredient_vocab") base.ingredient_vocab = value.get<std::vector<std::string>>();
      else if (key == "target_rate") base.target_rate = value.get<double>();
      else if (key == "trial_count") base.trial_count = value.get<int>();
      else if (key == "session_duration_s") base.session_duration_s = value.get<double>();
      else if (key == "seed") base.seed = value.get<std::uint64_t>();
      else throw Error(ErrorCode::ConfigInvalid, "unknown config field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("bad config field type: ") + e.what());
  }
  return base;
}

inline void from_json(const nlohmann::json& j, GameConfig& c) { c = apply_overrides(GameConfig{}, j); }

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Digest of the canonical (key-sorted, compact) JSON form.
inline std::string config_digest(const GameConfig& c) { return hex64(fnv1a64(nlohmann::json(c).dump())); }

}  // namespace b2p::task
