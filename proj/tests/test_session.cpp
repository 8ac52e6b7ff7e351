#include <gtest/gtest.h>

#include <algorithm>

#include "b2p/session/replay.hpp"
#include "session_fuzz.hpp"

using namespace b2p;
using namespace b2p::session;
using b2p::testing::msg;
using nlohmann::json;

namespace {

int count_type(const std::vector<Outbound>& outs, const std::string& type) {
  return static_cast<int>(std::count_if(outs.begin(), outs.end(),
                                        [&](const Outbound& o) { return o.message.at("type") == type; }));
}

int count_logged(const Session& s, const std::string& type) {
  int n = 0;
  for (const auto& e : s.log().entries())
    if (e.at("kind") == "out" && e.at("msg").at("type") == type) ++n;
  return n;
}

Session started(const std::string& id = "s1") {
  Session s(id);
  s.handle(1, msg("subscribe", id, {{"role", "player"}}));
  s.handle(2, msg("subscribe", id, {{"role", "spectator"}}));
  s.handle(2, msg("start_session", id));
  return s;
}

}  // namespace

TEST(Session, ConfigureMergesAndAcks) {
  Session s("s1");
  auto outs = s.handle(2, msg("set_config", "s1", {{"config", {{"n_level", 2}}}}));
  ASSERT_EQ(outs.size(), 1u);
  const auto& ack = outs[0].message;
  EXPECT_EQ(ack.at("type"), "config_ack");
  EXPECT_FALSE(outs[0].to.has_value());
  EXPECT_EQ(ack.at("config").at("n_level"), 2);
  EXPECT_EQ(ack.at("config").at("ingredient_count"), 3);
  EXPECT_EQ(ack.at("sequence_digest"), sequence_digest(s.state().sequence));
  EXPECT_EQ(s.state().config.n_level, 2);
}

TEST(Session, InvalidConfigGoesOnlyToSender) {
  Session s("s1");
  auto outs = s.handle(7, msg("set_config", "s1", {{"config", {{"ingredient_count", 99}}}}));
  ASSERT_EQ(outs.size(), 1u);
  EXPECT_EQ(outs[0].to, std::optional<ConnId>(7));
  EXPECT_EQ(outs[0].message.at("code"), "config_invalid");
  EXPECT_EQ(s.state().config, task::GameConfig{});
}

TEST(Session, StartPresentsFirstOrder) {
  Session s = started();
  EXPECT_EQ(s.state().phase, SessionPhase::Running);
  ASSERT_TRUE(s.machine());
  EXPECT_EQ(s.machine()->phase(), (task::GamePhase{task::PhaseKind::Judging, 0}));
  const auto& order = s.state().sequence.orders[0];
  bool saw_order = false;
  for (const auto& e : s.log().entries()) {
    if (e.at("kind") != "out" || e.at("msg").at("type") != "order_presented") continue;
    saw_order = true;
    EXPECT_EQ(e.at("msg").at("drink_cue").at("drink"), order.drink);
    EXPECT_FALSE(e.at("msg").contains("is_target"));
  }
  EXPECT_TRUE(saw_order);
}

TEST(Session, ConfigFrozenAfterStart) {
  Session s = started();
  auto outs = s.handle(2, msg("set_config", "s1", {{"config", {{"n_level", 2}}}}));
  ASSERT_EQ(outs.size(), 1u);
  EXPECT_EQ(outs[0].message.at("code"), "config_locked");
  EXPECT_EQ(s.state().config.n_level, 1);
  auto again = s.handle(2, msg("start_session", "s1"));
  EXPECT_EQ(again.at(0).message.at("code"), "already_running");
}

TEST(Session, RoutesPlayerInputThroughTheMachine) {
  Session s = started();
  s.tick(1.25);
  const auto& order = s.state().sequence.orders[0];
  auto o1 = s.handle(1, msg("submit_judgment", "s1", {{"judgment", "no"}}));
  EXPECT_EQ(o1.at(0).message.at("phase").at("kind"), "selecting_drink");
  s.handle(1, msg("submit_drink", "s1", {{"drink", order.drink}}));
  auto o3 = s.handle(1, msg("submit_ingredients", "s1", {{"ingredients", order.ingredients}}));
  EXPECT_EQ(count_type(o3, "trial_feedback"), 1);
  EXPECT_EQ(count_type(o3, "score_update"), 1);
  EXPECT_EQ(count_type(o3, "order_presented"), 1);
  const auto fb = std::find_if(o3.begin(), o3.end(), [](const Outbound& o) { return o.message.at("type") == "trial_feedback"; });
  EXPECT_EQ(fb->message.at("outcome").at("feedback"), "positive");
  EXPECT_DOUBLE_EQ(fb->message.at("outcome").at("response_time_ms").get<double>(), 1250.0);
  EXPECT_EQ(s.machine()->phase(), (task::GamePhase{task::PhaseKind::Judging, 1}));
}

TEST(Session, OutOfOrderSubmissionIsRejectedWithoutChange) {
  Session s = started();
  auto outs = s.handle(1, msg("submit_drink", "s1", {{"drink", "cola"}}));
  ASSERT_EQ(outs.size(), 1u);
  EXPECT_EQ(outs[0].message.at("code"), "illegal_transition");
  EXPECT_EQ(outs[0].to, std::optional<ConnId>(1));
  EXPECT_EQ(s.machine()->phase().kind, task::PhaseKind::Judging);
}

TEST(Session, SpectatorCannotPlay) {
  Session s = started();
  auto outs = s.handle(2, msg("submit_judgment", "s1", {{"judgment", "yes"}}));
  EXPECT_EQ(outs.at(0).message.at("code"), "role_violation");
  auto dup = s.handle(5, msg("subscribe", "s1", {{"role", "player"}}));
  EXPECT_EQ(dup.at(0).message.at("code"), "role_violation");
}

TEST(Session, UnknownSessionAndBadMessages) {
  Session s("s1");
  EXPECT_EQ(s.handle(1, msg("start_session", "nope")).at(0).message.at("code"), "unknown_session");
  EXPECT_EQ(s.handle(1, json("hello")).at(0).message.at("code"), "bad_message");
  EXPECT_EQ(s.handle(1, msg("submit_judgment", "s1", {{"judgment", "maybe"}})).at(0).message.at("code"),
            "bad_message");
  EXPECT_EQ(s.handle(1, msg("submit_judgment", "s1", {{"judgment", "yes"}})).at(0).message.at("code"),
            "not_running");
}

TEST(Session, CountdownTicksMatchElapsedSeconds) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Session s = started();
    // Random partition of 180 s into whole milliseconds.
    std::int64_t left_ms = 180000;
    int ticks = 0, ends = 0;
    while (left_ms > 0) {
      std::int64_t dt = std::min<std::int64_t>(left_ms, 1 + static_cast<std::int64_t>(rng.below(3000)));
      left_ms -= dt;
      auto outs = s.tick(static_cast<double>(dt) / 1000.0);
      ticks += count_type(outs, "countdown_tick");
      ends += count_type(outs, "session_end");
    }
    EXPECT_EQ(ticks, 180);
    EXPECT_EQ(ends, 1);
    EXPECT_EQ(s.state().phase, SessionPhase::Finished);
    EXPECT_EQ(s.state().end_reason, std::optional<std::string>("clock_expired"));
    EXPECT_TRUE(s.tick(5.0).empty());
  }
}

TEST(Session, PublishesWorkloadOnlyWhileRunning) {
  Session idle("s1");
  pipeline::WorkloadSample w;
  w.index = 2.0;
  EXPECT_TRUE(idle.publish_workload(w).empty());
  Session s = started();
  auto outs = s.publish_workload(w);
  ASSERT_EQ(outs.size(), 1u);
  EXPECT_EQ(outs[0].message.at("type"), "workload_update");
  EXPECT_EQ(outs[0].message.at("sample").get<pipeline::WorkloadSample>(), w);
  EXPECT_EQ(s.state().latest_workload, std::optional(w));
}

TEST(Session, ExhaustedSequenceEndsSession) {
  Session s("s1");
  s.handle(1, msg("subscribe", "s1", {{"role", "player"}}));
  s.handle(1, msg("set_config", "s1", {{"config", {{"trial_count", 3}, {"target_rate", 0.0}}}}));
  s.handle(1, msg("start_session", "s1"));
  for (const auto& o : s.state().sequence.orders) {
    s.handle(1, msg("submit_judgment", "s1", {{"judgment", "no"}}));
    s.handle(1, msg("submit_drink", "s1", {{"drink", o.drink}}));
    s.handle(1, msg("submit_ingredients", "s1", {{"ingredients", o.ingredients}}));
  }
  EXPECT_EQ(s.state().phase, SessionPhase::Finished);
  EXPECT_EQ(s.state().end_reason, std::optional<std::string>("sequence_exhausted"));
  EXPECT_EQ(count_logged(s, "session_end"), 1);
  EXPECT_EQ(s.machine()->score().orders_correct, 3);
}

TEST(SessionLog, NoConfigAckAfterStart) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    Session s("fz");
    b2p::testing::random_session_traffic(s, rng, 300);
    bool started = false;
    for (const auto& e : s.log().entries()) {
      if (e.at("kind") != "out") continue;
      const auto& t = e.at("msg").at("type");
      if (t == "order_presented") started = true;
      if (started) EXPECT_NE(t, "config_ack");
    }
  }
}

TEST(SessionReplay, ReproducesRandomSessions) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    Session s("fz");
    b2p::testing::random_session_traffic(s, rng, 400);
    // Round-trip through text as a file would.
    std::stringstream ss;
    for (const auto& e : s.log().entries()) ss << e.dump() << '\n';
    Session r = replay_session(read_log(ss));
    EXPECT_EQ(r.log().entries(), s.log().entries());
    EXPECT_EQ(r.state().phase, s.state().phase);
    if (s.machine()) EXPECT_EQ(r.machine()->score(), s.machine()->score());
  }
}

TEST(SessionReplay, RemovedOutputIsReportedAtItsIndex) {
  Rng rng(3);
  Session s("fz");
  b2p::testing::random_session_traffic(s, rng, 200);
  auto entries = s.log().entries();
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].at("kind") != "out") continue;
    auto broken = entries;
    broken.erase(broken.begin() + static_cast<std::ptrdiff_t>(i));
    try {
      replay_session(broken);
      FAIL() << "replay accepted a log with entry " << i << " removed";
    } catch (const LogCorrupt& e) {
      EXPECT_EQ(e.position(), i);
    }
  }
}

TEST(SessionReplay, TamperedOutputIsDetected) {
  Session s = started();
  auto entries = s.log().entries();
  auto it = std::find_if(entries.begin(), entries.end(),
                         [](const json& e) { return e.at("kind") == "out"; });
  (*it)["msg"]["clock_s"] = 99.0;
  EXPECT_THROW(replay_session(entries), LogCorrupt);
}

TEST(SessionReplay, WallTimeIsIgnored) {
  Session s("s1", {}, "2026-01-01T00:00:00Z");
  s.handle(1, msg("start_session", "s1"));
  auto entries = s.log().entries();
  entries[0]["wall_time"] = "2030-01-01T00:00:00Z";
  EXPECT_NO_THROW(replay_session(entries));
}

TEST(Session, EveryPublishedSampleIsLoggedOnce) {
  Session s = started();
  for (int k = 0; k < 360; ++k) {
    pipeline::WorkloadSample w;
    w.end_time_s = 0.5 * (k + 1);
    s.publish_workload(w);
    s.tick(0.5);
  }
  EXPECT_EQ(count_logged(s, "workload_update"), 360);
}

TEST(Session, ConnectGreetsWithSessionId) {
  Session s("live");
  auto outs = s.connect(9);
  ASSERT_EQ(outs.size(), 1u);
  EXPECT_EQ(outs[0].to, std::optional<ConnId>(9));
  EXPECT_EQ(outs[0].message.at("session_id"), "live");
  EXPECT_EQ(outs[0].message.at("session_phase"), "configuring");
  s.disconnect(9);
  EXPECT_NO_THROW(replay_session(s.log().entries()));
}

TEST(Session, ZeroNLevelIsRejected) {
  Session s("s1");
  auto outs = s.handle(1, msg("set_config", "s1", {{"config", {{"n_level", 0}}}}));
  EXPECT_EQ(outs.at(0).message.at("code"), "config_invalid");
}

TEST(Session, EndsExactlyOnceAtTheBoundary) {
  Session s = started();
  EXPECT_EQ(count_type(s.tick(179.5), "session_end"), 0);
  EXPECT_TRUE(s.tick(0.0).empty());
  auto outs = s.tick(0.5);
  EXPECT_EQ(count_type(outs, "session_end"), 1);
  EXPECT_EQ(count_type(s.tick(0.5), "session_end"), 0);
  EXPECT_EQ(count_logged(s, "session_end"), 1);
}

TEST(Session, StartsWithDefaultsWithoutConfiguration) {
  Session s("s1");
  auto outs = s.handle(3, msg("start_session", "s1"));
  EXPECT_EQ(s.state().phase, SessionPhase::Running);
  EXPECT_EQ(s.state().config, task::GameConfig{});
  ASSERT_FALSE(outs.empty());
  EXPECT_EQ(outs[0].message.at("type"), "countdown_tick");
  EXPECT_DOUBLE_EQ(outs[0].message.at("remaining_s").get<double>(), 180.0);
}

TEST(Session, PublishWithoutSubscribersStillLogs) {
  Session s("s1");
  s.handle(3, msg("start_session", "s1"));
  EXPECT_TRUE(s.subscribers().empty());
  pipeline::WorkloadSample w;
  w.index = 0.7;
  s.publish_workload(w);
  EXPECT_EQ(s.state().latest_workload, std::optional(w));
  EXPECT_EQ(count_logged(s, "workload_update"), 1);
}
