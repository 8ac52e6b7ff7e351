#pragma once

// WebSocket front end for a single session. Everything that touches the
// Session runs on one io_context thread; the EEG pipeline runs on its own
// thread and posts finished WorkloadSamples into that loop.

#include <atomic>
#include <chrono>
#include <csignal>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "b2p/cli/commands.hpp"
#include "b2p/eeg/replay.hpp"
#include "b2p/pipeline/pipeline.hpp"
#include "b2p/session/session.hpp"

namespace b2p::server {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct ServeOptions {
  std::string listen = "127.0.0.1:8080";
  std::string eeg = "synthetic";  // synthetic | synthetic:<script.json> | replay:<file.csv>
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config_path;
  std::optional<std::string> session_id;
  std::string log_dir = "sessions";
  double speed = 1.0;  // EEG replay/pacing speed relative to wall time
};

// Where EEG comes from once the session starts.
struct EegPlan {
  std::optional<eeg::Recording> recording;
  eeg::WorkloadScript script = eeg::step_script(60.0);
  eeg::GeneratorParams params;

  std::unique_ptr<eeg::ChunkSource> open() const {
    if (recording) return std::make_unique<eeg::ReplaySource>(*recording, params.chunk_frames);
    return eeg::make_synthetic_source(script, params);
  }
  double sampling_rate_hz() const { return recording ? recording->sampling_rate_hz : params.sampling_rate_hz; }
  const pipeline::ChannelLayout& layout() const { return recording ? recording->layout : params.layout; }
  double start_time_s() const { return recording ? recording->start_time_s : 0.0; }
};

inline EegPlan plan_eeg(const ServeOptions& o, double duration_s) {
  EegPlan plan;
  plan.params.seed = mix_seed(o.seed.value_or(0), 10);
  const std::string replay_prefix = "replay:", synth_prefix = "synthetic:";
  if (o.eeg.rfind(replay_prefix, 0) == 0) {
    plan.recording = eeg::read_recording(o.eeg.substr(replay_prefix.size()));
  } else if (o.eeg.rfind(synth_prefix, 0) == 0) {
    plan.script = eeg::script_from_json(
        cli::read_json_file(o.eeg.substr(synth_prefix.size()), ErrorCode::InvalidScript), duration_s);
  } else if (o.eeg != "synthetic") {
    throw Error(ErrorCode::ConfigInvalid, "--eeg must be synthetic, synthetic:<script>, or replay:<file>");
  }
  plan.script.duration_s = duration_s;
  return plan;
}

inline tcp::endpoint parse_listen(const std::string& spec) {
  const auto colon = spec.rfind(':');
  const std::string host = colon == std::string::npos ? "127.0.0.1" : spec.substr(0, colon);
  const std::string port = colon == std::string::npos ? spec : spec.substr(colon + 1);
  boost::system::error_code ec;
  const auto addr = asio::ip::make_address(host.empty() ? "0.0.0.0" : host, ec);
  int p = -1;
  try {
    std::size_t used = 0;
    p = std::stoi(port, &used);
    if (used != port.size()) p = -1;
  } catch (const std::logic_error&) {
  }
  if (ec || p < 0 || p > 65535) throw Error(ErrorCode::ConfigInvalid, "--listen expects host:port, got '" + spec + "'");
  return {addr, static_cast<unsigned short>(p)};
}

class Server;

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Server& server, session::ConnId id)
      : ws_(std::move(socket)), server_(server), id_(id) {}

  void start();
  void send(std::string text) {
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write_next();
  }
  void close() {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void read_next();
  void write_next() {
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write_next();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Server& server_;
  session::ConnId id_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  bool closed_ = false;
};

class Server {
 public:
  Server(asio::io_context& ioc, tcp::acceptor acceptor, session::Session& session, EegPlan eeg, double speed)
      : ioc_(ioc), acceptor_(std::move(acceptor)), session_(session), eeg_(std::move(eeg)), speed_(speed),
        ticker_(ioc) {}

  ~Server() { stop_eeg(); }

  void start() {
    accept_next();
    schedule_tick();
  }

  void shutdown() {
    beast::error_code ec;
    acceptor_.close(ec);
    ticker_.cancel();
    stop_eeg();
    for (auto& [id, c] : conns_) c->close();
    conns_.clear();
  }

  void on_open(session::ConnId id, std::shared_ptr<Connection> c) {
    conns_[id] = std::move(c);
    dispatch(session_.connect(id));
  }

  void on_message(session::ConnId id, const std::string& text) {
    nlohmann::json msg = nlohmann::json::parse(text, nullptr, false);
    if (msg.is_discarded()) msg = text;  // logged verbatim, answered with bad_message
    const bool was_running = session_.state().phase == session::SessionPhase::Running;
    sync_clock();
    dispatch(session_.handle(id, msg));
    if (!was_running && session_.state().phase == session::SessionPhase::Running) begin_session();
  }

  void on_close(session::ConnId id) {
    conns_.erase(id);
    dispatch(session_.disconnect(id));
  }

 private:
  using Clock = std::chrono::steady_clock;

  void accept_next() {
    acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto c = std::make_shared<Connection>(std::move(socket), *this, next_id_++);
      c->start();
      accept_next();
    });
  }

  void dispatch(const std::vector<session::Outbound>& outs) {
    for (const auto& o : outs) {
      const std::string text = o.message.dump();
      if (o.to) {
        if (auto it = conns_.find(*o.to); it != conns_.end()) it->second->send(text);
        continue;
      }
      for (const auto& [id, role] : session_.subscribers())
        if (auto it = conns_.find(id); it != conns_.end()) it->second->send(text);
    }
    if (session_.state().phase == session::SessionPhase::Finished) stop_eeg();
  }

  void begin_session() {
    started_at_ = Clock::now();
    eeg_thread_ = std::jthread([this, origin = *started_at_](std::stop_token stop) { run_eeg(stop, origin); });
  }

  // Brings the session clock up to wall time; every input goes through here
  // first so timestamps and response times are as fresh as possible.
  void sync_clock() {
    if (!started_at_ || session_.state().phase != session::SessionPhase::Running) return;
    const auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - *started_at_).count();
    dispatch(session_.tick_us(elapsed - session_.state().clock_us));
  }

  void schedule_tick() {
    ticker_.expires_after(std::chrono::milliseconds(100));
    ticker_.async_wait([this](beast::error_code ec) {
      if (ec) return;
      sync_clock();
      schedule_tick();
    });
  }

  // Producer thread: paces chunks against wall time, runs the causal
  // pipeline, and hands each sample to the loop.
  void run_eeg(std::stop_token stop, Clock::time_point origin) {
    try {
      auto source = eeg_.open();
      pipeline::PipelineConfig cfg;
      cfg.sampling_rate_hz = eeg_.sampling_rate_hz();
      pipeline::WorkloadPipeline pipe(cfg, eeg_.layout());
      while (!stop.stop_requested()) {
        auto chunk = source->next();
        if (!chunk) break;
        const double offset_s = (chunk->end_time_s() - eeg_.start_time_s()) / speed_;
        const auto due = origin + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(offset_s));
        while (!stop.stop_requested() && Clock::now() < due)
          std::this_thread::sleep_for(std::min<Clock::duration>(due - Clock::now(), std::chrono::milliseconds(20)));
        if (stop.stop_requested()) break;
        for (auto& s : pipe.push(*chunk))
          asio::post(ioc_, [this, s] {
            sync_clock();
            dispatch(session_.publish_workload(s));
          });
      }
    } catch (const std::exception& e) {
      std::cerr << "b2p: eeg stream stopped: " << e.what() << '\n';
    }
  }

  void stop_eeg() {
    if (eeg_thread_.joinable() && eeg_thread_.get_id() != std::this_thread::get_id()) {
      eeg_thread_.request_stop();
      eeg_thread_.join();
    }
  }

  asio::io_context& ioc_;
  tcp::acceptor acceptor_;
  session::Session& session_;
  EegPlan eeg_;
  double speed_;
  asio::steady_timer ticker_;
  std::map<session::ConnId, std::shared_ptr<Connection>> conns_;
  session::ConnId next_id_ = 1;
  std::optional<Clock::time_point> started_at_;
  std::jthread eeg_thread_;
};

inline void Connection::start() {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
    if (ec) return;
    self->server_.on_open(self->id_, self);
    self->read_next();
  });
}

inline void Connection::read_next() {
  ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) {
      if (!self->closed_) self->server_.on_close(self->id_);
      self->closed_ = true;
      return;
    }
    self->server_.on_message(self->id_, beast::buffers_to_string(self->buffer_.data()));
    self->buffer_.consume(self->buffer_.size());
    self->read_next();
  });
}

inline std::string default_session_id() {
  std::string ts = cli::utc_timestamp();
  std::erase(ts, '-');
  std::erase(ts, ':');
  return "session-" + ts;
}

// Blocks until SIGINT/SIGTERM. Returns the process exit code.
inline int serve(const ServeOptions& o, std::ostream& out, std::ostream& err) {
  return cli::guarded(err, [&]() -> int {
    if (!(o.speed > 0.0)) throw Error(ErrorCode::ConfigInvalid, "--speed must be positive");
    task::GameConfig config = cli::load_game_config(o.config_path);
    if (o.seed) config.seed = *o.seed;
    task::validate(config);
    const auto endpoint = parse_listen(o.listen);
    EegPlan plan = plan_eeg(o, config.session_duration_s);

    asio::io_context ioc(1);
    tcp::acceptor acceptor(ioc);
    beast::error_code ec;
    acceptor.open(endpoint.protocol(), ec);
    if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(endpoint, ec);
    if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) {
      err << "b2p: cannot listen on " << o.listen << ": " << ec.message() << '\n';
      return cli::kEnvironment;
    }

    const std::string id = o.session_id.value_or(default_session_id());
    const auto log_path = std::filesystem::path(o.log_dir) / (id + ".jsonl");
    std::error_code fs_ec;
    std::filesystem::create_directories(o.log_dir, fs_ec);
    std::ofstream log(log_path);
    if (!log) {
      err << "b2p: cannot write session log " << log_path.string() << '\n';
      return cli::kEnvironment;
    }
    session::Session session(id, config, cli::utc_timestamp(), [&](const nlohmann::json& e) {
      log << e.dump() << '\n';
      log.flush();
    });

    const auto bound = acceptor.local_endpoint();
    Server server(ioc, std::move(acceptor), session, std::move(plan), o.speed);
    asio::signal_set signals(ioc, SIGINT, SIGTERM);
    signals.async_wait([&](beast::error_code, int) {
      server.shutdown();
      ioc.stop();
    });
    server.start();

    out << nlohmann::json{{"listening", bound.address().to_string() + ":" + std::to_string(bound.port())},
                          {"port", bound.port()},
                          {"session_id", id},
                          {"log", log_path.string()}}
               .dump()
        << std::endl;
    ioc.run();
    err << "b2p: shut down\n";
    return cli::kOk;
  });
}

}  // namespace b2p::server
