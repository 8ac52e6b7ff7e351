#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "b2p/error.hpp"
#include "b2p/random.hpp"
#include "b2p/task/game_config.hpp"

namespace b2p::task {

// One customer: the drink is the N-back stimulus, the ingredients are the
// recall stimulus. Ingredients are kept in vocabulary order.
struct Order {
  std::size_t index = 0;
  std::string customer_id;
  std::string drink;
  std::vector<std::string> ingredients;
  bool is_target = false;

  bool operator==(const Order&) const = default;
};

struct OrderSequence {
  GameConfig config;
  std::string config_hash;
  std::vector<Order> orders;

  std::size_t size() const { return orders.size(); }
  bool operator==(const OrderSequence&) const = default;
};

// Pure function of `config` (seed included).
inline OrderSequence generate_sequence(const GameConfig& config) {
  validate(config);
  Rng rng(config.seed);
  const auto trials = static_cast<std::size_t>(config.trial_count);
  const auto n = static_cast<std::size_t>(config.n_level);

  std::vector<bool> target(trials, false);
  for (std::size_t slot : rng.sample_without_replacement(trials - n, static_cast<std::size_t>(config.target_count())))
    target[n + slot] = true;

  OrderSequence seq;
  seq.config = config;
  seq.config_hash = config_digest(config);
  seq.orders.reserve(trials);
  const auto& drinks = config.drink_vocab;
  const auto& ingredients = config.ingredient_vocab;

  for (std::size_t i = 0; i < trials; ++i) {
    Order o;
    o.index = i;
    o.customer_id = "customer-" + std::to_string(i);
    if (i < n) {
      o.drink = drinks[rng.below(drinks.size())];
    } else if (target[i]) {
      o.drink = seq.orders[i - n].drink;
      o.is_target = true;
    } else {
      // uniform over the vocabulary minus the N-back drink
      const auto& back = seq.orders[i - n].drink;
      const auto skip = static_cast<std::size_t>(std::find(drinks.begin(), drinks.end(), back) - drinks.begin());
      std::size_t pick = rng.below(drinks.size() - 1);
      if (pick >= skip) ++pick;
      o.drink = drinks[pick];
    }
    auto picks = rng.sample_without_replacement(ingredients.size(), static_cast<std::size_t>(config.ingredient_count));
    std::sort(picks.begin(), picks.end());
    for (std::size_t k : picks) o.ingredients.push_back(ingredients[k]);
    seq.orders.push_back(std::move(o));
  }
  return seq;
}

inline bool is_target(const OrderSequence& seq, std::size_t index) {
  if (index >= seq.orders.size())
    throw Error(ErrorCode::IndexOutOfRange, "order index " + std::to_string(index) + " outside sequence of " +
                                                std::to_string(seq.orders.size()));
  const auto n = static_cast<std::size_t>(seq.config.n_level);
  return index >= n && seq.orders[index].drink == seq.orders[index - n].drink;
}

inline void to_json(nlohmann::json& j, const Order& o) {
  j = nlohmann::json{{"index", o.index},
                     {"customer_id", o.customer_id},
                     {"drink", o.drink},
                     {"ingredients", o.ingredients},
                     {"is_target", o.is_target}};
}

inline void from_json(const nlohmann::json& j, Order& o) {
  o.index = j.at("index").get<std::size_t>();
  o.customer_id = j.at("customer_id").get<std::string>();
  o.drink = j.at("drink").get<std::string>();
  o.ingredients = j.at("ingredients").get<std::vector<std::string>>();
  o.is_target = j.at("is_target").get<bool>();
}

inline void to_json(nlohmann::json& j, const OrderSequence& s) {
  j = nlohmann::json{{"config", s.config}, {"config_hash", s.config_hash}, {"orders", s.orders}};
}

inline void from_json(const nlohmann::json& j, OrderSequence& s) {
  s.config = j.at("config").get<GameConfig>();
  s.config_hash = j.at("config_hash").get<std::string>();
  s.orders = j.at("orders").get<std::vector<Order>>();
}

}  // namespace b2p::task
