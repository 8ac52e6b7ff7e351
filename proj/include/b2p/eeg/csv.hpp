#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "b2p/error.hpp"
#include "b2p/pipeline/types.hpp"

namespace b2p::eeg {

using pipeline::Recording;

// Format:
//   # fs=<Hz> layout=<name>
//   time_s,<ch1>,...,<ch16>
//   <t>,<v1>,...,<v16>        (µV, 6 significant digits)
inline void write_recording(std::ostream& os, const Recording& rec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", rec.sampling_rate_hz);
  os << "# fs=" << buf << " layout=" << (rec.layout.name.empty() ? "custom" : rec.layout.name) << '\n';
  os << "time_s";
  for (const auto& n : rec.layout.channel_names) os << ',' << n;
  os << '\n';
  std::string line;
  for (std::size_t f = 0; f < rec.frames(); ++f) {
    std::snprintf(buf, sizeof buf, "%.6f", rec.start_time_s + static_cast<double>(f) / rec.sampling_rate_hz);
    line = buf;
    for (std::size_t c = 0; c < rec.samples.rows; ++c) {
      std::snprintf(buf, sizeof buf, ",%.6g", rec.samples(c, f));
      line += buf;
    }
    line += '\n';
    os << line;
  }
}

inline void write_recording(const std::string& path, const Recording& rec) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::MalformedFile, "cannot open " + path + " for writing");
  write_recording(os, rec);
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] inline void malformed(const std::string& where, std::size_t line, std::size_t column,
                                   const std::string& what) {
  throw Error(ErrorCode::MalformedFile,
              where + ": line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

}  // namespace detail

// Parses a recording. Errors name the line and column (both 1-based).
inline Recording read_recording(std::istream& is, const std::string& name = "<stream>") {
  using detail::malformed;
  Recording rec;
  std::string layout_name;
  bool have_fs = false;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> columns;
  std::vector<double> times;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string_view line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream tokens{std::string(line.substr(1))};
      std::string tok;
      while (tokens >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const auto key = tok.substr(0, eq);
        const auto value = tok.substr(eq + 1);
        if (key == "fs") {
          double fs = 0;
          auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), fs);
          if (ec != std::errc() || p != value.data() + value.size() || !(fs > 0))
            malformed(name, line_no, 1, "bad sampling rate '" + value + "'");
          rec.sampling_rate_hz = fs;
          have_fs = true;
        } else if (key == "layout") {
          layout_name = value;
        }
      }
      continue;
    }
    const auto fields = detail::split_commas(line);
    if (labels.empty()) {
      if (detail::trim(fields[0]) != "time_s") malformed(name, line_no, 1, "header must start with time_s");
      if (fields.size() != pipeline::kChannelCount + 1)
        malformed(name, line_no, fields.size(),
                  "expected " + std::to_string(pipeline::kChannelCount) + " channel columns, found " +
                      std::to_string(fields.size() - 1));
      for (std::size_t i = 1; i < fields.size(); ++i) labels.emplace_back(detail::trim(fields[i]));
      columns.resize(labels.size());
      continue;
    }
    if (fields.size() != labels.size() + 1)
      malformed(name, line_no, std::min(fields.size(), labels.size() + 1) + (fields.size() > labels.size() + 1),
                "expected " + std::to_string(labels.size() + 1) + " fields, found " + std::to_string(fields.size()));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto f = detail::trim(fields[i]);
      double v = 0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size() || f.empty())
        malformed(name, line_no, i + 1, "not a number: '" + std::string(f) + "'");
      if (!std::isfinite(v)) malformed(name, line_no, i + 1, "non-finite value");
      if (i == 0) times.push_back(v);
      else columns[i - 1].push_back(v);
    }
    if (!have_fs) throw Error(ErrorCode::MissingMetadata, name + ": no '# fs=<Hz>' line before data");
    const std::size_t j = times.size() - 1;
    const double expected = times.front() + static_cast<double>(j) / rec.sampling_rate_hz;
    if (std::abs(times.back() - expected) > 0.5 / rec.sampling_rate_hz)
      malformed(name, line_no, 1, "timestamp breaks the uniform sampling grid");
  }
  if (!have_fs) throw Error(ErrorCode::MissingMetadata, name + ": no '# fs=<Hz>' metadata line");
  if (labels.empty()) throw Error(ErrorCode::MalformedFile, name + ": missing header row");

  try {
    rec.layout = pipeline::layout_from_names(layout_name.empty() ? "custom" : layout_name, labels);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedFile, name + ": header: " + e.what());
  }
  rec.start_time_s = times.empty() ? 0.0 : times.front();
  rec.samples = Matrix(labels.size(), times.size());
  for (std::size_t c = 0; c < labels.size(); ++c)
    std::copy(columns[c].begin(), columns[c].end(), rec.samples.row(c).begin());
  return rec;
}

inline Recording read_recording(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::MalformedFile, "cannot open " + path);
  return read_recording(is, path);
}

}  // namespace b2p::eeg
