#pragma once

// Experiment reports: one record per checked statistic, each carrying its
// acceptance threshold. Serialization is canonical (fixed key order, %.17g
// numbers) so identical configs produce byte-identical files; wall time is
// volatile and only written on request.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crpmat/version.hpp"

namespace crpmat {

enum class RecordKind { tolerance, p_value, exact };

struct Record {
  std::string statistic;
  RecordKind kind = RecordKind::tolerance;
  double observed = 0.0;
  double expected = 0.0;
  double threshold = 0.0;      // absolute tolerance, or p-value floor before Bonferroni
  double standard_error = -1.0;  // negative when not applicable
  bool pass = false;
  std::string note;

  static Record tolerance(std::string name, double observed, double expected, double threshold,
                          double se = -1.0, std::string note = {}) {
    Record r;
    r.statistic = std::move(name);
    r.kind = RecordKind::tolerance;
    r.observed = observed;
    r.expected = expected;
    r.threshold = threshold;
    r.standard_error = se;
    r.pass = std::fabs(observed - expected) <= threshold;
    r.note = std::move(note);
    return r;
  }

  static Record p_value(std::string name, double p, double floor, std::string note = {}) {
    Record r;
    r.statistic = std::move(name);
    r.kind = RecordKind::p_value;
    r.observed = p;
    r.expected = 1.0;
    r.threshold = floor;
    r.pass = false;  // set by Report::finalize (Bonferroni)
    r.note = std::move(note);
    return r;
  }

  static Record exact(std::string name, bool pass, double observed = 0.0, double expected = 0.0,
                      std::string note = {}) {
    Record r;
    r.statistic = std::move(name);
    r.kind = RecordKind::exact;
    r.observed = observed;
    r.expected = expected;
    r.threshold = 0.0;
    r.pass = pass;
    r.note = std::move(note);
    return r;
  }
};

struct ReportEnv {
  std::uint64_t seed = 0;
  std::uint64_t n = 0;
  std::uint64_t replicas = 0;
  int threads = 1;
  double wall_time_seconds = 0.0;
  std::string version = kVersion;
};

struct Report {
  std::string name;
  std::vector<std::pair<std::string, std::string>> config;  // resolved, ordered
  std::vector<Record> records;
  ReportEnv env;
  bool overall_pass = false;

  // Bonferroni across the p-value records: with m of them, each must clear
  // threshold/m for the family-wise level to stay at the stated threshold.
  void finalize() {
    std::size_t m = 0;
    for (const auto& r : records) {
      if (r.kind == RecordKind::p_value) ++m;
    }
    overall_pass = !records.empty();
    for (auto& r : records) {
      if (r.kind == RecordKind::p_value) {
        r.pass = r.observed > r.threshold / static_cast<double>(m == 0 ? 1 : m);
      }
      overall_pass = overall_pass && r.pass;
    }
  }
};

namespace detail {
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 8);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}
}  // namespace detail

inline const char* record_kind_name(RecordKind k) {
  switch (k) {
    case RecordKind::tolerance: return "tolerance";
    case RecordKind::p_value: return "p_value";
    default: return "exact";
  }
}

inline std::string report_to_json(const Report& rep, bool include_timing = false) {
  if (rep.records.empty())
    throw std::invalid_argument("report_to_json: reports must carry at least one record");
  std::string s;
  s += "{\n  \"name\": \"" + detail::json_escape(rep.name) + "\",\n";
  s += "  \"version\": \"" + detail::json_escape(rep.env.version) + "\",\n";
  s += "  \"config\": {";
  for (std::size_t i = 0; i < rep.config.size(); ++i) {
    if (i) s += ",";
    s += "\n    \"" + detail::json_escape(rep.config[i].first) + "\": \"" +
         detail::json_escape(rep.config[i].second) + "\"";
  }
  s += "\n  },\n  \"records\": [";
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const Record& r = rep.records[i];
    if (i) s += ",";
    s += "\n    {\"statistic\": \"" + detail::json_escape(r.statistic) + "\"";
    s += ", \"kind\": \"" + std::string(record_kind_name(r.kind)) + "\"";
    s += ", \"observed\": " + detail::fmt_double(r.observed);
    s += ", \"expected\": " + detail::fmt_double(r.expected);
    if (r.kind == RecordKind::p_value) {
      s += ", \"p_threshold\": " + detail::fmt_double(r.threshold);
    } else {
      s += ", \"tolerance\": " + detail::fmt_double(r.threshold);
    }
    if (r.standard_error >= 0.0) s += ", \"standard_error\": " + detail::fmt_double(r.standard_error);
    s += std::string(", \"pass\": ") + (r.pass ? "true" : "false");
    if (!r.note.empty()) s += ", \"note\": \"" + detail::json_escape(r.note) + "\"";
    s += "}";
  }
  // thread count is runtime-only and wall time is opt-in, so identical
  // configs serialize to identical bytes regardless of --threads
  s += "\n  ],\n  \"environment\": {";
  s += "\n    \"seed\": " + std::to_string(rep.env.seed);
  s += ",\n    \"n\": " + std::to_string(rep.env.n);
  s += ",\n    \"replicas\": " + std::to_string(rep.env.replicas);
  s += ",\n    \"wall_time_seconds\": " +
       detail::fmt_double(include_timing ? rep.env.wall_time_seconds : 0.0);
  s += "\n  },\n";
  s += std::string("  \"pass\": ") + (rep.overall_pass ? "true" : "false") + "\n}\n";
  return s;
}

inline std::string report_to_csv(const Report& rep) {
  if (rep.records.empty())
    throw std::invalid_argument("report_to_csv: reports must carry at least one record");
  std::string s;
  s += "# name=" + rep.name + "\n";
  s += "# version=" + rep.env.version + "\n";
  for (const auto& [k, v] : rep.config) s += "# " + k + "=" + v + "\n";
  s += "statistic,kind,observed,expected,threshold_or_p,standard_error,pass\n";
  for (const Record& r : rep.records) {
    s += "\"" + r.statistic + "\"," + record_kind_name(r.kind) + "," +
         detail::fmt_double(r.observed) + "," + detail::fmt_double(r.expected) + "," +
         detail::fmt_double(r.threshold) + "," +
         (r.standard_error >= 0.0 ? detail::fmt_double(r.standard_error) : "") + "," +
         (r.pass ? "true" : "false") + "\n";
  }
  s += std::string("# pass=") + (rep.overall_pass ? "true" : "false") + "\n";
  return s;
}

}  // namespace crpmat
