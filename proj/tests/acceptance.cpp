// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Scenario checks go through the b2p executable; numeric
// checks use oracles computed here rather than the library's own helpers.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "b2p/dsp/butterworth.hpp"
#include "b2p/dsp/welch.hpp"
#include "b2p/eeg/synthetic.hpp"
#include "b2p/pipeline/pipeline.hpp"
#include "b2p/random.hpp"
#include "b2p/session/replay.hpp"
#include "b2p/task/game_machine.hpp"
#include "process.hpp"
#include "session_fuzz.hpp"

using namespace b2p;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

const std::string kExe = B2P_EXE;

std::filesystem::path work_dir() {
  static const auto d = b2p::testing::scratch_dir("b2p-acceptance");
  return d;
}

b2p::testing::RunResult cli(const std::vector<std::string>& args) {
  return b2p::testing::run(kExe, args, work_dir(), 120s);
}

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1 ------------------------------------------------------------------

Verdict end_to_end() {
  std::ofstream(work_dir() / "step60.json") << R"([{"t": 0, "level": 0}, {"t": 60, "level": 1}])";
  Verdict v;
  double worst = 1.0, slowest = 0.0;
  int scored_min = 1 << 30;
  for (int seed = 0; seed < 20; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = cli({"simulate", "--script", "step60.json", "--seed", std::to_string(seed), "--log-dir",
                        "c1", "--no-epochs"});
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.exit_code != 0) return {false, "simulate exited " + std::to_string(r.exit_code) + ": " + r.err};
    const auto s = json::parse(r.out);
    const auto& w = s.at("workload");
    const double acc = w.at("accuracy").get<double>();
    worst = std::min(worst, acc);
    slowest = std::max(slowest, wall);
    scored_min = std::min(scored_min, w.at("scored_epochs").get<int>());
    if (acc < 0.9 || wall >= 10.0 || s.at("end_reason") != "clock_expired") v.pass = false;
  }
  if (scored_min < 200) v.pass = false;
  v.detail = fmt("20 seeds: worst accuracy %.3f (>= 0.90), >= %d scored epochs each, slowest run %.2f s wall (< 10 s)",
                 worst, scored_min, slowest);
  return v;
}

// ---- 2 ------------------------------------------------------------------

double integrated(const dsp::PsdEstimate& psd) {
  double s = 0.0;
  for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k) s += psd.power(0, k) * psd.df_hz;
  return s;
}

Verdict parseval() {
  const double fs = 250.0;
  const std::size_t n = 2500;
  double worst_rect = 0.0, worst_welch = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(mix_seed(seed, 77));
    std::vector<double> x(n, 0.0);
    switch (seed % 3) {
      case 0: {
        for (int k = 0; k < 3; ++k) {
          const double f = rng.uniform(1.0, 100.0), a = rng.uniform(1.0, 50.0), ph = rng.uniform(0.0, 6.28);
          for (std::size_t i = 0; i < n; ++i) x[i] += a * std::sin(2 * std::numbers::pi * f * i / fs + ph);
        }
        break;
      }
      case 1: {
        const double sigma = rng.uniform(1.0, 20.0);
        for (double& v : x) v = sigma * rng.normal();
        break;
      }
      default:
        x = eeg::pink_noise(n, fs, rng.uniform(0.5, 2.0), rng.uniform(1.0, 30.0), 0.5, seed);
    }
    double mean_power = 0.0;
    for (double v : x) mean_power += v * v;
    mean_power /= static_cast<double>(n);

    Matrix m(1, n);
    std::copy(x.begin(), x.end(), m.row(0).begin());
    dsp::WelchOptions rect{n, 0.0, dsp::Taper::Rectangular};
    const double e_rect = std::abs(integrated(dsp::welch_psd(m, fs, rect)) / mean_power - 1.0);
    pipeline::PipelineConfig defaults;
    dsp::WelchOptions welch{static_cast<std::size_t>(defaults.welch_segment_s * fs), defaults.welch_overlap,
                            dsp::Taper::Hann};
    const double e_welch = std::abs(integrated(dsp::welch_psd(m, fs, welch)) / mean_power - 1.0);
    worst_rect = std::max(worst_rect, e_rect);
    worst_welch = std::max(worst_welch, e_welch);
  }
  return {worst_rect <= 0.01 && worst_welch <= 0.10,
          fmt("20 signals: worst error %.2e single-segment rectangular (<= 1%%), %.2f%% Welch defaults (<= 10%%)",
              worst_rect, 100.0 * worst_welch)};
}

// ---- 3 ------------------------------------------------------------------

Verdict spectral_peaks() {
  const double fs = 250.0;
  const std::size_t n = 500;  // 2 s epoch
  pipeline::PipelineConfig defaults;
  dsp::WelchOptions opt{static_cast<std::size_t>(defaults.welch_segment_s * fs), defaults.welch_overlap,
                        dsp::Taper::Hann};
  Verdict v;
  std::string found;
  Rng rng(3);
  for (double f : {5.0, 10.0, 15.0, 20.0, 30.0}) {
    Matrix m(1, n);
    const double ph = rng.uniform(0.0, 6.28);
    for (std::size_t i = 0; i < n; ++i) m(0, i) = std::sin(2 * std::numbers::pi * f * i / fs + ph);
    const auto psd = dsp::welch_psd(m, fs, opt);
    std::size_t peak = 0;
    for (std::size_t k = 1; k < psd.freqs_hz.size(); ++k)
      if (psd.power(0, k) > psd.power(0, peak)) peak = k;
    const auto expected = static_cast<long>(std::lround(f / psd.df_hz));
    if (std::labs(static_cast<long>(peak) - expected) > 1) v.pass = false;
    found += fmt("%s%g->%g", found.empty() ? "" : ", ", f, psd.freqs_hz[peak]);
  }
  v.detail = "peak bins (Hz): " + found + " (+-1 bin of 1 Hz)";
  return v;
}

// ---- 4 ------------------------------------------------------------------

double response_db(const dsp::FilterCoefficients& c, double f) {
  const std::complex<double> z = std::polar(1.0, -2.0 * std::numbers::pi * f / c.sampling_rate_hz);
  std::complex<double> h = 1.0;
  for (const auto& s : c.sections) h *= (s.b0 + s.b1 * z + s.b2 * z * z) / (1.0 + s.a1 * z + s.a2 * z * z);
  return 20.0 * std::log10(std::abs(h));
}

double sine_gain_db(const dsp::FilterCoefficients& c, double f) {
  dsp::SosFilter filt(c);
  const double fs = c.sampling_rate_hz;
  const std::size_t settle = static_cast<std::size_t>(60 * fs), measure = static_cast<std::size_t>(20 * fs);
  double in = 0, out = 0;
  for (std::size_t i = 0; i < settle + measure; ++i) {
    const double x = std::sin(2 * std::numbers::pi * f * i / fs);
    const double y = filt.step(x);
    if (i >= settle) in += x * x, out += y * y;
  }
  return 10.0 * std::log10(out / in);
}

Verdict filter_response() {
  pipeline::PipelineConfig d;
  const auto c = dsp::design_bandpass(d.prefilter_low_hz, d.prefilter_high_hz, d.sampling_rate_hz, d.prefilter_order);
  double pass_min = 0.0;
  for (double f = 2.0; f <= 35.0 + 1e-9; f += 0.01) pass_min = std::min(pass_min, response_db(c, f));
  const double at_025 = response_db(c, 0.25), at_60 = response_db(c, 60.0);
  const double sine_025 = sine_gain_db(c, 0.25), sine_60 = sine_gain_db(c, 60.0);
  return {at_025 <= -20.0 && at_60 <= -20.0 && pass_min >= -3.0 && sine_025 <= -20.0 && sine_60 <= -20.0,
          fmt("order %d: %.1f dB @0.25 Hz, %.1f dB @60 Hz (sine test %.1f / %.1f), min %.2f dB over 2-35 Hz",
              d.prefilter_order, at_025, at_60, sine_025, sine_60, pass_min)};
}

// ---- 5 ------------------------------------------------------------------

Verdict sequence_stats() {
  task::GameConfig c;
  c.n_level = 1;
  c.trial_count = 31;
  c.target_rate = 0.3;
  std::set<std::size_t> covered;
  int bad_count = 0, warmup = 0, flag_mismatch = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    c.seed = seed;
    const auto seq = task::generate_sequence(c);
    int targets = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const auto n = static_cast<std::size_t>(c.n_level);
      const bool oracle = i >= n && seq.orders[i].drink == seq.orders[i - n].drink;
      if (oracle != seq.orders[i].is_target) ++flag_mismatch;
      if (!seq.orders[i].is_target) continue;
      ++targets;
      if (i < n) ++warmup;
      covered.insert(i);
    }
    if (targets != 9) ++bad_count;
  }
  // The executable must print the same sequences.
  int cli_mismatch = 0;
  for (std::uint64_t seed : {0u, 17u, 999u}) {
    c.seed = seed;
    const auto r = cli({"gen-sequence", "--n", "1", "--trials", "31", "--target-rate", "0.3", "--seed", std::to_string(seed)});
    if (r.exit_code != 0 || json::parse(r.out) != json(task::generate_sequence(c))) ++cli_mismatch;
  }
  const bool all_covered = covered.size() == 30 && *covered.begin() == 1 && *covered.rbegin() == 30;
  return {bad_count == 0 && warmup == 0 && flag_mismatch == 0 && all_covered && cli_mismatch == 0,
          fmt("1000 seeds: %d with target count != 9, %d warm-up targets, %d flags disagreeing with drink history, "
              "%zu/30 eligible indices covered, %d CLI mismatches",
              bad_count, warmup, flag_mismatch, covered.size(), cli_mismatch)};
}

// ---- 6 ------------------------------------------------------------------

// Reference transition table, written independently of advance_phase.
std::optional<task::GamePhase> reference_step(task::GamePhase p, task::EventKind e, std::size_t count) {
  using K = task::PhaseKind;
  using E = task::EventKind;
  if (p.kind == K::Finished) return std::nullopt;
  if (e == E::ClockExpired) return task::GamePhase{K::Finished, 0};
  struct Row { K from; E on; K to; };
  static const Row table[] = {{K::Idle, E::PresentNext, K::Presenting},
                              {K::Presenting, E::PresentNext, K::Judging},
                              {K::Judging, E::SubmitJudgment, K::SelectingDrink},
                              {K::SelectingDrink, E::SubmitDrink, K::SelectingIngredients},
                              {K::SelectingIngredients, E::SubmitIngredients, K::Feedback},
                              {K::Feedback, E::FeedbackDone, K::Presenting}};
  for (const auto& r : table) {
    if (r.from != p.kind || r.on != e) continue;
    if (p.kind == K::Idle) return task::GamePhase{K::Presenting, 0};
    if (p.kind == K::Feedback)
      return p.order_index + 1 >= count ? task::GamePhase{K::Finished, 0} : task::GamePhase{K::Presenting, p.order_index + 1};
    return task::GamePhase{r.to, p.order_index};
  }
  return std::nullopt;
}

Verdict fuzz_and_replay() {
  using task::EventKind;
  int wrong_accept = 0, wrong_reject = 0, wrong_target = 0, outcome_mismatch = 0, absorb_violations = 0,
      state_changed_on_reject = 0;
  // order_index carries no meaning once Finished, so only the kind is compared there.
  auto same_phase = [](const task::GamePhase& a, const task::GamePhase& b) {
    return a.kind == b.kind && (a.kind == task::PhaseKind::Finished || a.order_index == b.order_index);
  };
  task::GameConfig cfg;
  cfg.trial_count = 8;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    cfg.seed = seed % 50;
    task::GameMachine m(task::generate_sequence(cfg));
    const auto& seq = m.sequence();
    Rng rng(mix_seed(seed, 6));
    task::GamePhase ref;
    int cycles = 0;
    const int len = 20 + static_cast<int>(rng.below(200));
    for (int i = 0; i < len; ++i) {
      const auto kind = static_cast<EventKind>(rng.below(rng.bernoulli(0.02) ? 6 : 5));
      task::GameEvent ev;
      ev.kind = kind;
      ev.judgment = rng.bernoulli(0.5) ? task::Judgment::Yes : task::Judgment::No;
      ev.drink = seq.orders[rng.below(seq.size())].drink;
      ev.ingredients = seq.orders[rng.below(seq.size())].ingredients;
      const auto expect = reference_step(ref, kind, seq.size());
      const auto before_phase = m.phase();
      const auto before_outcomes = m.outcomes().size();
      bool accepted = true;
      task::StepEffects fx;
      try {
        fx = m.advance(ev, i * 0.5);
      } catch (const Error&) {
        accepted = false;
      }
      if (accepted && !expect) ++wrong_accept;
      if (!accepted && expect) ++wrong_reject;
      if (!accepted && (m.phase() != before_phase || m.outcomes().size() != before_outcomes)) ++state_changed_on_reject;
      if (before_phase.kind == task::PhaseKind::Finished && accepted) ++absorb_violations;
      if (accepted && expect) {
        if (!same_phase(m.phase(), *expect)) ++wrong_target;
        ref = *expect;
        if (kind == EventKind::SubmitIngredients) ++cycles;
        if (fx.outcome.has_value() != (kind == EventKind::SubmitIngredients)) ++outcome_mismatch;
      }
    }
    if (static_cast<int>(m.outcomes().size()) != cycles) ++outcome_mismatch;
  }

  int replay_ok = 0, full = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(mix_seed(seed, 60));
    session::Session s("fuzz-" + std::to_string(seed));
    b2p::testing::random_session_traffic(s, rng, 300);
    const auto sid = s.state().session_id;
    s.handle(2, b2p::testing::msg("start_session", sid));
    while (s.state().phase == session::SessionPhase::Running) s.tick(rng.uniform(0.1, 7.0));
    if (s.state().phase == session::SessionPhase::Finished) ++full;
    std::stringstream text;
    for (const auto& e : s.log().entries()) text << e.dump() << '\n';
    try {
      const auto r = session::replay_session(session::read_log(text));
      if (r.log().entries() == s.log().entries() && r.machine()->score() == s.machine()->score()) ++replay_ok;
    } catch (const Error&) {
    }
  }
  const bool ok = wrong_accept == 0 && wrong_reject == 0 && wrong_target == 0 && outcome_mismatch == 0 && absorb_violations == 0 &&
                  state_changed_on_reject == 0 && replay_ok == 100 && full == 100;
  return {ok, fmt("10000 streams: %d illegal accepted, %d legal rejected, %d wrong next phase, %d outcome/cycle "
                  "mismatches, %d Finished escapes, %d mutating rejections; replay exact %d/100 (%d finished)",
                  wrong_accept, wrong_reject, wrong_target, outcome_mismatch, absorb_violations, state_changed_on_reject, replay_ok,
                  full)};
}

// ---- 7 ------------------------------------------------------------------

std::string log_digest(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::uint64_t h = 1469598103934665603ull;
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) {
    auto e = json::parse(line);
    e.erase("wall_time");
    h = mix_seed(h, fnv1a64(e.dump()));
    ++lines;
  }
  return task::hex64(h) + "/" + std::to_string(lines);
}

Verdict determinism() {
  int differ = 0;
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"gen-sequence", "--n", "1", "--trials", "11", "--target-rate", "0.3", "--seed", "42"},
           {"gen-sequence", "--n", "3", "--trials", "60", "--seed", "7"}}) {
    const auto a = cli(args), b = cli(args);
    if (a.exit_code != 0 || a.out != b.out || a.out.empty()) ++differ;
  }
  std::string da, db, dc;
  bool stdout_same = true;
  {
    const auto a = cli({"simulate", "--seed", "11", "--player", "accuracy=0.8", "--log", "c7a.jsonl"});
    const auto b = cli({"simulate", "--seed", "11", "--player", "accuracy=0.8", "--log", "c7b.jsonl"});
    const auto c = cli({"simulate", "--seed", "12", "--player", "accuracy=0.8", "--log", "c7c.jsonl"});
    if (a.exit_code || b.exit_code || c.exit_code) return {false, "simulate failed: " + a.err + b.err + c.err};
    auto sa = json::parse(a.out), sb = json::parse(b.out);
    sa.erase("log");
    sb.erase("log");
    stdout_same = sa == sb;
    da = log_digest(work_dir() / "c7a.jsonl");
    db = log_digest(work_dir() / "c7b.jsonl");
    dc = log_digest(work_dir() / "c7c.jsonl");
  }
  return {differ == 0 && da == db && da != dc && stdout_same,
          fmt("gen-sequence byte-identical (%d differences); simulate log digest %s vs %s (seed 12: %s); summaries %s",
              differ, da.c_str(), db.c_str(), dc.c_str(), stdout_same ? "identical" : "differ")};
}

// ---- 8 ------------------------------------------------------------------

Verdict scale_invariance() {
  const auto rec = cli({"record", "--seed", "31", "--out", "c8.csv"});
  if (rec.exit_code != 0) return {false, "record failed: " + rec.err};
  {
    std::ifstream in(work_dir() / "c8.csv");
    std::ofstream out(work_dir() / "c8x10.csv");
    for (std::string line; std::getline(in, line);) {
      if (line.empty() || line[0] == '#' || line.rfind("time_s", 0) == 0) {
        out << line << '\n';
        continue;
      }
      std::stringstream ss(line);
      std::string field;
      std::getline(ss, field, ',');
      out << field;
      while (std::getline(ss, field, ',')) out << ',' << fmt("%.17g", std::stod(field) * 10.0);
      out << '\n';
    }
  }
  const auto a = cli({"analyze", "c8.csv", "--out", "c8.jsonl"});
  const auto b = cli({"analyze", "c8x10.csv", "--out", "c8x10.jsonl"});
  if (a.exit_code || b.exit_code) return {false, "analyze failed: " + a.err + b.err};
  std::ifstream fa(work_dir() / "c8.jsonl"), fb(work_dir() / "c8x10.jsonl");
  std::size_t n = 0, class_diff = 0, artifacts = 0, overload = 0;
  double worst = 0.0;
  std::string la, lb;
  while (std::getline(fa, la)) {
    if (!std::getline(fb, lb)) return {false, "scaled analysis produced fewer epochs"};
    const auto x = json::parse(la), y = json::parse(lb);
    ++n;
    if (x.at("class") != y.at("class") || x.at("artifact") != y.at("artifact")) ++class_diff;
    if (x.at("artifact").get<bool>()) ++artifacts;
    if (x.at("class") == "overload") ++overload;
    const double i0 = x.at("index").get<double>(), i1 = y.at("index").get<double>();
    worst = std::max(worst, std::abs(i1 - i0) / std::abs(i0));
  }
  const bool extra = static_cast<bool>(std::getline(fb, lb));
  return {n > 300 && class_diff == 0 && worst <= 1e-9 && !extra && overload > 0,
          fmt("%zu epochs (%zu overload, %zu artifact): %zu class differences, worst relative index change %.1e",
              n, overload, artifacts, class_diff, worst)};
}

// ---- 9 ------------------------------------------------------------------

Verdict latency() {
  const auto r = cli({"simulate", "--seed", "5", "--log", "c9.jsonl", "--no-epochs"});
  if (r.exit_code != 0) return {false, "simulate failed: " + r.err};
  pipeline::PipelineConfig d;
  const double bound = d.step_s + 0.1;
  std::ifstream in(work_dir() / "c9.jsonl");
  std::size_t updates = 0;
  double worst = 0.0;
  for (std::string line; std::getline(in, line);) {
    const auto e = json::parse(line);
    if (e.at("kind") != "out" || e.at("msg").at("type") != "workload_update") continue;
    const auto& m = e.at("msg");
    const double last_sample = m.at("sample").at("end_time_s").get<double>() - 1.0 / d.sampling_rate_hz;
    worst = std::max(worst, m.at("clock_s").get<double>() - last_sample);
    ++updates;
  }
  const double reported = json::parse(r.out).at("workload").at("max_latency_s").get<double>();
  return {updates >= 350 && worst <= bound && reported <= bound,
          fmt("%zu workload updates over a 180 s session: worst %.3f s after the epoch's last sample (bound %.2f s)",
              updates, worst, bound)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "end-to-end step scenario", end_to_end},  {2, "Parseval", parseval},
      {3, "spectral peak bins", spectral_peaks},      {4, "prefilter response", filter_response},
      {5, "sequence statistics", sequence_stats},    {6, "state-machine fuzz and replay", fuzz_and_replay},
      {7, "determinism", determinism},               {8, "scale invariance", scale_invariance},
      {9, "workload update latency", latency}};
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << v.detail
              << fmt(" [%.1f s]", secs) << std::endl;
    if (!v.pass) ++failed;
  }
  std::filesystem::remove_all(work_dir());
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed << "/" << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
