#pragma once

// Serialization of trajectories, oracle tables, and reports (CSV and JSON),
// plus the flat key=value config-file reader. Every output embeds the
// resolved configuration and the tool version; all numbers are written with
// 17 significant digits so files round-trip bit-exactly.

#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crpmat/crp.hpp"
#include "crpmat/report.hpp"
#include "crpmat/version.hpp"

namespace crpmat {

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

namespace detail {
inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}
}  // namespace detail

inline std::string trajectory_to_csv(const CycleTrajectory& traj, const ConfigEcho& config) {
  std::string s;
  s += "# crpmat version=" + std::string(kVersion) + "\n";
  for (const auto& [k, v] : config) s += "# " + k + "=" + v + "\n";
  s += "checkpoint_t,size,j,count\n";
  char buf[96];
  for (std::size_t i = 0; i < traj.sizes.size(); ++i) {
    for (const auto& [j, c] : traj.counts[i]) {
      std::snprintf(buf, sizeof(buf), "%.17g,%llu,%llu,%lld\n", traj.checkpoints[i],
                    static_cast<unsigned long long>(traj.sizes[i]),
                    static_cast<unsigned long long>(j), static_cast<long long>(c));
      s += buf;
    }
  }
  s += "checkpoint_t,size,blocks\n";
  for (std::size_t i = 0; i < traj.sizes.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%llu,%llu\n", traj.checkpoints[i],
                  static_cast<unsigned long long>(traj.sizes[i]),
                  static_cast<unsigned long long>(traj.blocks[i]));
    s += buf;
  }
  return s;
}

inline std::string trajectory_to_json(const CycleTrajectory& traj, const ConfigEcho& config) {
  std::string s = "{\n  \"version\": \"" + std::string(kVersion) + "\",\n  \"config\": {";
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (i) s += ",";
    s += "\n    \"" + detail::json_escape(config[i].first) + "\": \"" +
         detail::json_escape(config[i].second) + "\"";
  }
  s += "\n  },\n  \"n\": " + std::to_string(traj.n) + ",\n  \"checkpoints\": [";
  for (std::size_t i = 0; i < traj.sizes.size(); ++i) {
    if (i) s += ",";
    s += "\n    {\"t\": " + detail::fmt_double(traj.checkpoints[i]) +
         ", \"size\": " + std::to_string(traj.sizes[i]) +
         ", \"blocks\": " + std::to_string(traj.blocks[i]) + ", \"counts\": {";
    for (std::size_t q = 0; q < traj.counts[i].size(); ++q) {
      if (q) s += ", ";
      s += "\"" + std::to_string(traj.counts[i][q].first) +
           "\": " + std::to_string(traj.counts[i][q].second);
    }
    s += "}}";
  }
  s += "\n  ]\n}\n";
  return s;
}

inline void write_trajectory(const CycleTrajectory& traj, const ConfigEcho& config,
                             const std::string& path, const std::string& format) {
  if (format == "csv") {
    detail::write_file(path, trajectory_to_csv(traj, config));
  } else if (format == "json") {
    detail::write_file(path, trajectory_to_json(traj, config));
  } else {
    throw std::invalid_argument("write_trajectory: format must be csv or json");
  }
}

inline void write_report(const Report& rep, const std::string& path, const std::string& format,
                         bool include_timing = false) {
  if (format == "json") {
    detail::write_file(path, report_to_json(rep, include_timing));
  } else if (format == "csv") {
    detail::write_file(path, report_to_csv(rep));
  } else {
    throw std::invalid_argument("write_report: format must be csv or json");
  }
}

// Parses a serialized report back into memory (round-trip contract).
inline Report report_from_json(const std::string& text);

// Flat key=value config file; '#' starts a comment, blank lines ignored.
inline std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config file: expected key=value, got '" + line + "'");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    if (key.empty()) throw std::invalid_argument("config file: empty key");
    out.emplace_back(key, value);
  }
  return out;
}

// Parsers for the CLI value syntaxes.
inline std::vector<double> parse_checkpoints(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    const double v = std::stod(item, &pos);
    if (pos != item.size()) throw std::invalid_argument("bad checkpoint value: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty checkpoint list");
  return out;
}

inline std::complex<double> parse_complex(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("expected re:im complex value, got '" + s + "'");
  return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
}

inline std::vector<double> read_weight_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open weight file: " + path);
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::stringstream ss(line);
    double v;
    while (ss >> v) out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("weight file holds no values: " + path);
  return out;
}

}  // namespace crpmat

#include <json.hpp>

namespace crpmat {

inline Report report_from_json(const std::string& text) {
  const auto j = nlohmann::ordered_json::parse(text);
  Report rep;
  rep.name = j.at("name").get<std::string>();
  rep.env.version = j.at("version").get<std::string>();
  for (const auto& [k, v] : j.at("config").items()) {
    rep.config.emplace_back(k, v.get<std::string>());
  }
  for (const auto& r : j.at("records")) {
    Record rec;
    rec.statistic = r.at("statistic").get<std::string>();
    const std::string kind = r.at("kind").get<std::string>();
    rec.kind = kind == "tolerance" ? RecordKind::tolerance
               : kind == "p_value" ? RecordKind::p_value
                                   : RecordKind::exact;
    rec.observed = r.at("observed").get<double>();
    rec.expected = r.at("expected").get<double>();
    rec.threshold = rec.kind == RecordKind::p_value ? r.at("p_threshold").get<double>()
                                                    : r.at("tolerance").get<double>();
    rec.standard_error = r.contains("standard_error") ? r.at("standard_error").get<double>() : -1.0;
    rec.pass = r.at("pass").get<bool>();
    if (r.contains("note")) rec.note = r.at("note").get<std::string>();
    rep.records.push_back(std::move(rec));
  }
  const auto& env = j.at("environment");
  rep.env.seed = env.at("seed").get<std::uint64_t>();
  rep.env.n = env.at("n").get<std::uint64_t>();
  rep.env.replicas = env.at("replicas").get<std::uint64_t>();
  rep.env.wall_time_seconds = env.at("wall_time_seconds").get<double>();
  rep.overall_pass = j.at("pass").get<bool>();
  return rep;
}

}  // namespace crpmat
