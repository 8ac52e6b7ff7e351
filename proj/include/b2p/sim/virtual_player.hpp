#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "b2p/random.hpp"
#include "b2p/task/game_config.hpp"

namespace b2p::sim {

// Scripted participant. It watches the messages delivered to the player
// connection, remembers the drink history for the N-back judgment, and
// answers each prompt after a uniform latency. Each sub-response is correct
// with probability `accuracy`.
class VirtualPlayer {
 public:
  struct Options {
    double accuracy = 0.9;
    double min_latency_s = 0.8;
    double max_latency_s = 2.5;
    std::uint64_t seed = 0;
  };

  VirtualPlayer(std::string session_id, task::GameConfig config, Options opt)
      : session_id_(std::move(session_id)), config_(std::move(config)), opt_(opt), rng_(opt.seed) {}

  void observe(const nlohmann::json& msg, std::int64_t now_us) {
    const auto& type = msg.at("type");
    if (type == "order_presented") {
      const auto index = msg.at("order_index").get<std::size_t>();
      if (drinks_.size() <= index) drinks_.resize(index + 1);
      drinks_[index] = msg.at("drink_cue").at("drink").get<std::string>();
      ingredients_ = msg.at("ingredients").get<std::vector<std::string>>();
      current_ = index;
    } else if (type == "phase_changed") {
      const auto kind = msg.at("phase").at("kind").get<std::string>();
      if (kind == "judging") schedule(now_us, judgment());
      else if (kind == "selecting_drink") schedule(now_us, drink());
      else if (kind == "selecting_ingredients") schedule(now_us, ingredients());
      else pending_.reset();
    } else if (type == "session_end") {
      pending_.reset();
    }
  }

  std::optional<std::int64_t> due_us() const {
    return pending_ ? std::optional(pending_->due_us) : std::nullopt;
  }

  nlohmann::json take() {
    nlohmann::json m = std::move(pending_->message);
    pending_.reset();
    return m;
  }

 private:
  struct Pending {
    std::int64_t due_us;
    nlohmann::json message;
  };

  void schedule(std::int64_t now_us, nlohmann::json body) {
    body["session_id"] = session_id_;
    const double latency = rng_.uniform(opt_.min_latency_s, opt_.max_latency_s);
    pending_ = Pending{now_us + static_cast<std::int64_t>(std::llround(latency * 1e6)), std::move(body)};
  }

  bool answer_correctly() { return rng_.bernoulli(opt_.accuracy); }

  nlohmann::json judgment() {
    const auto n = static_cast<std::size_t>(config_.n_level);
    const bool target = current_ >= n && drinks_[current_] == drinks_[current_ - n];
    const bool say_yes = answer_correctly() ? target : !target;
    return {{"type", "submit_judgment"}, {"judgment", say_yes ? "yes" : "no"}};
  }

  nlohmann::json drink() {
    std::string d = drinks_[current_];
    if (!answer_correctly() && config_.drink_vocab.size() > 1) {
      std::string other;
      do other = config_.drink_vocab[rng_.below(config_.drink_vocab.size())];
      while (other == d);
      d = other;
    }
    return {{"type", "submit_drink"}, {"drink", d}};
  }

  nlohmann::json ingredients() {
    auto picked = ingredients_;
    if (!answer_correctly() && !picked.empty()) {
      std::vector<std::string> unused;
      for (const auto& v : config_.ingredient_vocab)
        if (std::find(picked.begin(), picked.end(), v) == picked.end()) unused.push_back(v);
      const auto slot = rng_.below(picked.size());
      if (unused.empty()) picked.erase(picked.begin() + static_cast<std::ptrdiff_t>(slot));
      else picked[slot] = unused[rng_.below(unused.size())];
    }
    return {{"type", "submit_ingredients"}, {"ingredients", picked}};
  }

  std::string session_id_;
  task::GameConfig config_;
  Options opt_;
  Rng rng_;
  std::vector<std::string> drinks_;
  std::vector<std::string> ingredients_;
  std::size_t current_ = 0;
  std::optional<Pending> pending_;
};

}  // namespace b2p::sim
