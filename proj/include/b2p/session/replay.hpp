#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "b2p/error.hpp"
#include "b2p/session/session.hpp"

namespace b2p::session {

// Raised when a log cannot be reproduced; `position` is the entry index.
class LogCorrupt : public Error {
 public:
  LogCorrupt(std::size_t position, const std::string& msg)
      : Error(ErrorCode::LogCorrupt, "entry " + std::to_string(position) + ": " + msg), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

inline std::vector<nlohmann::json> read_log(std::istream& in) {
  std::vector<nlohmann::json> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      entries.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw LogCorrupt(entries.size(), std::string("unparsable line: ") + e.what());
    }
  }
  return entries;
}

inline std::vector<nlohmann::json> read_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedFile, "cannot open " + path.string());
  return read_log(in);
}

// Entry comparison ignores the wall-clock stamp in the header.
inline nlohmann::json comparable(nlohmann::json e) {
  if (e.is_object()) e.erase("wall_time");
  return e;
}

// Feeds the recorded inputs through a fresh session and checks that every
// recorded output (content, recipient and order) is produced again.
inline Session replay_session(const std::vector<nlohmann::json>& entries) {
  if (entries.empty() || entries[0].value("kind", "") != "header") throw LogCorrupt(0, "missing header");
  const auto& header = entries[0];
  task::GameConfig initial;
  try {
    initial = task::apply_overrides(task::GameConfig{}, header.at("initial_config"));
  } catch (const std::exception& e) {
    throw LogCorrupt(0, std::string("bad header: ") + e.what());
  }
  Session s(header.value("session_id", ""), initial);

  auto check = [&](std::size_t i) {
    const auto& produced = s.log().entries();
    if (i >= produced.size()) throw LogCorrupt(i, "recorded entry was not produced on replay");
    if (comparable(produced[i]) != comparable(entries[i]))
      throw LogCorrupt(i, "expected " + produced[i].dump() + " but log has " + entries[i].dump());
  };

  check(0);
  for (std::size_t i = 1; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const std::string kind = e.is_object() ? e.value("kind", "") : "";
    if (kind == "out") {
      check(i);
      continue;
    }
    if (s.log().size() != i) throw LogCorrupt(i, "replay produced an output missing from the log");
    try {
      if (kind == "in") {
        s.handle(e.at("conn").get<ConnId>(), e.at("msg"));
      } else if (kind == "tick") {
        s.tick_us(e.at("dt_us").get<std::int64_t>());
      } else if (kind == "workload") {
        s.publish_workload(e.at("sample").get<pipeline::WorkloadSample>());
      } else if (kind == "connect") {
        s.connect(e.at("conn").get<ConnId>());
      } else if (kind == "disconnect") {
        s.disconnect(e.at("conn").get<ConnId>());
      } else {
        throw LogCorrupt(i, "unknown entry kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& ex) {
      throw LogCorrupt(i, ex.what());
    }
    check(i);
  }
  if (s.log().size() != entries.size())
    throw LogCorrupt(entries.size(), "replay produced outputs past the end of the log");
  return s;
}

}  // namespace b2p::session
