#include <iostream>

#include <CLI11.hpp>

#include "b2p/cli/commands.hpp"
#include "ws_server.hpp"

int main(int argc, char** argv) {
  using namespace b2p;
  CLI::App app{"Brain-to-pizza: N-back game server with live EEG workload estimation"};
  app.require_subcommand(1);

  server::ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "host a session over WebSocket");
  serve_cmd->add_option("--listen", serve.listen, "address to bind, host:port (port 0 picks a free one)")
      ->capture_default_str();
  serve_cmd->add_option("--eeg", serve.eeg, "synthetic, synthetic:<script.json>, or replay:<file.csv>")
      ->capture_default_str();
  serve_cmd->add_option("--seed", serve.seed, "seed for the order sequence and synthetic EEG");
  serve_cmd->add_option("--config", serve.config_path, "game configuration JSON");
  serve_cmd->add_option("--session-id", serve.session_id, "session id (default: timestamped)");
  serve_cmd->add_option("--log-dir", serve.log_dir, "directory for <session-id>.jsonl")->capture_default_str();
  serve_cmd->add_option("--speed", serve.speed, "EEG pacing relative to wall time")->capture_default_str();

  cli::SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "run a full session with a virtual player and synthetic EEG");
  sim_cmd->add_option("--script", sim.script_path, "workload script JSON (default: step to level 1 at 60 s)");
  sim_cmd->add_option("--config", sim.config_path, "game configuration JSON");
  sim_cmd->add_option("--player", sim.player, "virtual player, key=value list (accuracy, min_latency, max_latency)")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "master seed")->capture_default_str();
  sim_cmd->add_option("--session-id", sim.session_id, "session id (default: sim-<seed>)");
  sim_cmd->add_option("--log-dir", sim.log_dir, "directory for <session-id>.jsonl")->capture_default_str();
  sim_cmd->add_option("--log", sim.log_path, "explicit session log path");
  bool no_epochs = false;
  sim_cmd->add_flag("--no-epochs", no_epochs, "omit the per-epoch list from the summary");

  cli::AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "offline workload analysis of an EEG CSV file");
  analyze_cmd->add_option("file", analyze.input, "EEG CSV recording")->required();
  analyze_cmd->add_option("--bands", analyze.bands, "band edges, e.g. theta=4-8,alpha=8-12");
  analyze_cmd->add_option("--layout", analyze.layout, "named channel layout the file must match");
  analyze_cmd->add_option("--out", analyze.out_path, "write JSON lines here instead of stdout");

  cli::GenSequenceOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-sequence", "print an order sequence as JSON");
  gen_cmd->add_option("--n", gen.n_level, "N-back level");
  gen_cmd->add_option("--trials", gen.trial_count, "number of orders");
  gen_cmd->add_option("--target-rate", gen.target_rate, "fraction of eligible orders that are targets");
  gen_cmd->add_option("--seed", gen.seed, "sequence seed");
  gen_cmd->add_option("--config", gen.config_path, "base game configuration JSON");

  std::string log_file;
  auto* replay_cmd = app.add_subcommand("replay-log", "re-run a session log and verify every output");
  replay_cmd->add_option("log", log_file, "session log (.jsonl)")->required();

  cli::RecordOptions rec;
  auto* record_cmd = app.add_subcommand("record", "write a synthetic EEG recording as CSV");
  record_cmd->add_option("--script", rec.script_path, "workload script JSON (default: step at 60 s)");
  record_cmd->add_option("--seed", rec.seed, "generator seed")->capture_default_str();
  record_cmd->add_option("--duration", rec.duration_s, "seconds when the script gives none")->capture_default_str();
  record_cmd->add_option("--artifact-rate", rec.artifact_rate_per_min, "artifacts per minute");
  record_cmd->add_option("--out", rec.out_path, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kConfiguration;
  }

  if (serve_cmd->parsed()) return server::serve(serve, std::cout, std::cerr);
  if (sim_cmd->parsed()) {
    sim.include_epochs = !no_epochs;
    return cli::simulate(sim, std::cout, std::cerr);
  }
  if (analyze_cmd->parsed()) return cli::analyze(analyze, std::cout, std::cerr);
  if (gen_cmd->parsed()) return cli::gen_sequence(gen, std::cout, std::cerr);
  if (replay_cmd->parsed()) return cli::replay_log(log_file, std::cout, std::cerr);
  if (record_cmd->parsed()) return cli::record(rec, std::cout, std::cerr);
  return cli::kConfiguration;
}
