// Command-line front end.
//
// Subcommands: simulate, urn, enumerate, oracle, experiment, report.
// Exit codes: 0 success, 1 usage error, 2 validation error,
// 3 runtime/numerics error, 4 experiment did not pass.
//
// A flat key=value file passed through --config supplies defaults; explicit
// flags override file values. Every output embeds the resolved configuration.

#include <complex>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crpmat/crp.hpp"
#include "crpmat/experiments.hpp"
#include "crpmat/io.hpp"
#include "crpmat/limit_laws.hpp"
#include "crpmat/urn.hpp"
#include "crpmat/version.hpp"

namespace {

using namespace crpmat;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* kUsage = R"(crpmat - random permutation matrices from (alpha,theta)-seating

usage: crpmat <subcommand> [flags]

subcommands
  simulate    cycle-count trajectory of one seating process
  urn         occupancy trajectory of the infinite urn scheme
  enumerate   exact small-n law of the cycle-count vector (n <= 10)
  oracle      limit-law covariance tables (quadrature / series)
  experiment  monte carlo verification runs (clt|kingman|feller|charpoly)
  report      re-read, summarize, and re-emit a report file

common flags
  --alpha A --theta T       model parameters
  --n N --replicas R        sizes
  --seed S                  master seed (replica streams derive from it)
  --checkpoints t1,t2,...   sorted fractions in (0,1], must contain 1
  --weights SPEC            const | arc:c1:c2 | logz:re:im | file:PATH
  --z re:im                 z point (repeatable)
  --tol X                   oracle tolerance
  --out PATH --format F     output file and format (csv|json)
  --threads K               worker threads (0 = hardware)
  --config PATH             key=value defaults, overridden by explicit flags
  --timing                  include measured wall time in report files

oracle flags: --kind zj|zalpha|eta-series|eta-quad|sibuya plus
  --j-max M (zj), --k-max K (sibuya), --s S --t T (time pair)
experiment flags: --name clt|kingman|feller|charpoly, --source power|stick,
  --centering analytic|empirical, --zoom-z X, --n-grid n1,n2,...
)";

struct Args {
  std::string subcommand;
  std::map<std::string, std::string> kv;
  std::vector<std::string> z;
  bool timing = false;

  bool has(const std::string& k) const { return kv.count(k) > 0; }
  std::string get(const std::string& k, const std::string& fallback) const {
    const auto it = kv.find(k);
    return it == kv.end() ? fallback : it->second;
  }
  std::string require(const std::string& k) const {
    const auto it = kv.find(k);
    if (it == kv.end()) throw UsageError("missing required flag --" + k);
    return it->second;
  }
  double num(const std::string& k, double fallback) const {
    return parse_num(get(k, format_double(fallback)), k);
  }
  double num_required(const std::string& k) const { return parse_num(require(k), k); }
  std::uint64_t count(const std::string& k, std::uint64_t fallback) const {
    const auto it = kv.find(k);
    if (it == kv.end()) return fallback;
    return parse_count(it->second, k);
  }
  std::uint64_t count_required(const std::string& k) const {
    return parse_count(require(k), k);
  }

  static std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  static double parse_num(const std::string& s, const std::string& k) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError("malformed numeric value for --" + k + ": '" + s + "'");
    }
  }
  static std::uint64_t parse_count(const std::string& s, const std::string& k) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(s, &pos);
      if (pos != s.size() || v < 0) throw std::invalid_argument(s);
      return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
      throw UsageError("malformed count value for --" + k + ": '" + s + "'");
    }
  }
};

const std::set<std::string> kKnownFlags{
    "alpha", "theta", "n", "replicas", "seed", "checkpoints", "weights", "z", "tol",
    "out", "format", "threads", "config", "name", "kind", "source", "centering",
    "zoom-z", "n-grid", "series-n", "decay-replicas", "j-max", "k-max", "s", "t", "in",
    "center-tol", "cov-rel-tol", "se-mult", "corr-tol", "p-threshold",
    "freeze-threshold", "timing"};

Args parse_args(int argc, char** argv) {
  Args args;
  if (argc < 2) throw UsageError("missing subcommand");
  args.subcommand = argv[1];
  std::vector<std::pair<std::string, std::string>> raw;
  for (int i = 2; i < argc; ++i) {
    std::string flag = argv[i];
    if (flag.rfind("--", 0) != 0) throw UsageError("expected a --flag, got '" + flag + "'");
    flag = flag.substr(2);
    if (!kKnownFlags.count(flag)) throw UsageError("unknown flag --" + flag);
    if (flag == "timing") {
      args.timing = true;
      continue;
    }
    if (i + 1 >= argc) throw UsageError("flag --" + flag + " needs a value");
    raw.emplace_back(flag, argv[++i]);
  }
  for (const auto& [k, v] : raw) {
    if (k == "z") {
      args.z.push_back(v);
    } else {
      args.kv[k] = v;  // later occurrences win
    }
  }
  // config file fills in flags that were not given explicitly
  if (args.has("config")) {
    for (const auto& [k, v] : read_config_file(args.kv.at("config"))) {
      if (!kKnownFlags.count(k)) throw UsageError("unknown key in config file: " + k);
      if (k == "timing") {
        args.timing = args.timing || v == "true" || v == "1";
        continue;
      }
      if (k == "z") {
        if (args.z.empty()) {
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) args.z.push_back(item);
        }
        continue;
      }
      args.kv.emplace(k, v);  // emplace keeps explicit flags in charge
    }
  }
  return args;
}

WeightSpec parse_weights(const std::string& spec) {
  WeightSpec w;
  if (spec == "const") {
    w.kind = WeightSpec::Kind::constant;
    return w;
  }
  if (spec.rfind("arc:", 0) == 0) {
    const auto rest = spec.substr(4);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw UsageError("weights arc needs arc:c1:c2");
    w.kind = WeightSpec::Kind::arc;
    w.c1 = Args::parse_num(rest.substr(0, colon), "weights");
    w.c2 = Args::parse_num(rest.substr(colon + 1), "weights");
    return w;
  }
  if (spec.rfind("logz:", 0) == 0) {
    w.kind = WeightSpec::Kind::logz;
    w.z = parse_complex(spec.substr(5));
    return w;
  }
  if (spec.rfind("file:", 0) == 0) {
    w.kind = WeightSpec::Kind::table;
    w.table = read_weight_table(spec.substr(5));
    return w;
  }
  throw UsageError("bad --weights spec '" + spec + "'");
}

ConfigEcho base_echo(const Args& args, std::initializer_list<std::pair<std::string, std::string>>
                                           resolved) {
  ConfigEcho echo;
  echo.emplace_back("subcommand", args.subcommand);
  for (const auto& [k, v] : resolved) echo.emplace_back(k, v);
  return echo;
}

void emit(const std::string& text, const Args& args) {
  if (args.has("out")) {
    detail::write_file(args.kv.at("out"), text);
  } else {
    std::cout << text;
  }
}

int cmd_simulate(const Args& args) {
  const ModelParams params = make_params(args.num_required("alpha"), args.num_required("theta"));
  const std::uint64_t n = args.count_required("n");
  const std::uint64_t seed = args.count("seed", 12345);
  const auto checkpoints = parse_checkpoints(args.get("checkpoints", "1"));
  const auto traj = simulate_crp(params, n, checkpoints, seed);
  const auto echo = base_echo(
      args, {{"alpha", Args::format_double(params.alpha)},
             {"theta", Args::format_double(params.theta)},
             {"variant", variant_name(params.variant)},
             {"n", std::to_string(n)},
             {"seed", std::to_string(seed)},
             {"checkpoints", args.get("checkpoints", "1")}});
  if (args.has("out")) {
    write_trajectory(traj, echo, args.kv.at("out"), args.get("format", "csv"));
  } else {
    std::cout << (args.get("format", "csv") == "json" ? trajectory_to_json(traj, echo)
                                                      : trajectory_to_csv(traj, echo));
  }
  return 0;
}

int cmd_urn(const Args& args) {
  const double alpha = args.num_required("alpha");
  const std::string source = args.get("source", "power");
  const std::uint64_t n = args.count_required("n");
  const std::uint64_t seed = args.count("seed", 12345);
  const auto checkpoints = parse_checkpoints(args.get("checkpoints", "1"));
  FrequencySource src = source == "stick"
                            ? FrequencySource::stick_breaking(
                                  make_params(alpha, args.num_required("theta")),
                                  derive_seed(seed, 0))
                            : FrequencySource::power_law(alpha);
  const auto traj = sample_urn(src, n, checkpoints, derive_seed(seed, 1));
  const auto echo = base_echo(
      args, {{"alpha", Args::format_double(alpha)},
             {"source", source},
             {"theta", source == "stick" ? Args::format_double(args.num_required("theta")) : "-"},
             {"n", std::to_string(n)},
             {"seed", std::to_string(seed)},
             {"checkpoints", args.get("checkpoints", "1")}});
  if (args.has("out")) {
    write_trajectory(traj, echo, args.kv.at("out"), args.get("format", "csv"));
  } else {
    std::cout << (args.get("format", "csv") == "json" ? trajectory_to_json(traj, echo)
                                                      : trajectory_to_csv(traj, echo));
  }
  return 0;
}

int cmd_enumerate(const Args& args) {
  const ModelParams params = make_params(args.num_required("alpha"), args.num_required("theta"));
  const std::uint64_t n = args.count_required("n");
  const auto law = enumerate_crp(params, n);
  std::string s;
  const std::string format = args.get("format", "csv");
  if (format == "json") {
    s += "{\n  \"version\": \"" + std::string(kVersion) + "\",\n";
    s += "  \"alpha\": " + Args::format_double(params.alpha) + ",\n";
    s += "  \"theta\": " + Args::format_double(params.theta) + ",\n";
    s += "  \"n\": " + std::to_string(n) + ",\n  \"law\": [";
    bool first = true;
    for (const auto& [state, prob] : law) {
      if (!first) s += ",";
      first = false;
      s += "\n    {\"counts\": [";
      for (std::size_t i = 0; i < state.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(state[i]);
      }
      s += "], \"probability\": " + Args::format_double(prob) + "}";
    }
    s += "\n  ]\n}\n";
  } else if (format == "csv") {
    s += "# crpmat version=" + std::string(kVersion) + "\n";
    s += "# alpha=" + Args::format_double(params.alpha) +
         " theta=" + Args::format_double(params.theta) + " n=" + std::to_string(n) + "\n";
    for (std::uint64_t j = 1; j <= n; ++j) s += "c" + std::to_string(j) + ",";
    s += "probability\n";
    for (const auto& [state, prob] : law) {
      for (const auto c : state) s += std::to_string(c) + ",";
      s += Args::format_double(prob) + "\n";
    }
  } else {
    throw std::invalid_argument("enumerate: format must be csv or json");
  }
  emit(s, args);
  return 0;
}

int cmd_oracle(const Args& args) {
  const std::string kind = args.get("kind", "zj");
  const double alpha = args.num_required("alpha");
  const double tol = args.num("tol", 1e-8);
  std::string s = "# crpmat version=" + std::string(kVersion) + "\n# kind=" + kind +
                  " alpha=" + Args::format_double(alpha) + " tol=" + Args::format_double(tol) +
                  "\n";
  if (kind == "zj") {
    const std::uint64_t jmax = args.count("j-max", 6);
    const double sv = args.num("s", 1.0);
    const double tv = args.num("t", 1.0);
    s += "j,k,s,t,value\n";
    for (std::uint64_t j = 1; j <= jmax; ++j) {
      for (std::uint64_t k = 1; k <= jmax; ++k) {
        const double v = cov_zj(alpha, j, k, sv, tv, tol);
        s += std::to_string(j) + "," + std::to_string(k) + "," + Args::format_double(sv) + "," +
             Args::format_double(tv) + "," + Args::format_double(v) + "\n";
      }
    }
  } else if (kind == "zalpha") {
    const WeightSpec wspec = parse_weights(args.get("weights", "const"));
    const Weights w = wspec.real_weights();
    const auto times = parse_checkpoints(args.get("checkpoints", "1"));
    const auto cov = cov_matrix_zalpha(alpha, w, times, tol);
    s += "# weights=" + wspec.label() + "\nti,tj,value\n";
    for (std::size_t i = 0; i < cov.dim; ++i) {
      for (std::size_t j = 0; j < cov.dim; ++j) {
        s += Args::format_double(times[i]) + "," + Args::format_double(times[j]) + "," +
             Args::format_double(cov.at(i, j)) + "\n";
      }
    }
  } else if (kind == "eta-series" || kind == "eta-quad") {
    if (args.z.empty()) throw UsageError("oracle eta kinds need at least one --z");
    std::vector<std::complex<double>> zs;
    for (const auto& zstr : args.z) zs.push_back(parse_complex(zstr));
    const double sv = args.num("s", 1.0);
    const double tv = args.num("t", 1.0);
    s += "z_re,z_im,w_re,w_im,cov_re,cov_im\n";
    for (std::size_t a = 0; a < zs.size(); ++a) {
      for (std::size_t b = a; b < zs.size(); ++b) {
        const std::complex<double> v =
            kind == "eta-series" ? cov_eta_series(alpha, zs[a], zs[b], tol)
                                 : cov_eta_quadrature(alpha, zs[a], zs[b], sv, tv, tol);
        s += Args::format_double(zs[a].real()) + "," + Args::format_double(zs[a].imag()) + "," +
             Args::format_double(zs[b].real()) + "," + Args::format_double(zs[b].imag()) + "," +
             Args::format_double(v.real()) + "," + Args::format_double(v.imag()) + "\n";
      }
    }
  } else if (kind == "sibuya") {
    const std::uint64_t kmax = args.count("k-max", 30);
    s += "k,pmf,tail\n";
    for (std::uint64_t k = 1; k <= kmax; ++k) {
      s += std::to_string(k) + "," + Args::format_double(sibuya_pmf(alpha, k)) + "," +
           Args::format_double(sibuya_tail(alpha, k)) + "\n";
    }
  } else {
    throw UsageError("oracle: unknown --kind " + kind);
  }
  emit(s, args);
  return 0;
}

int cmd_experiment(const Args& args) {
  ExperimentConfig cfg;
  cfg.name = args.require("name");
  cfg.alpha = args.num("alpha", cfg.alpha);
  cfg.theta = args.num("theta", cfg.theta);
  cfg.source = args.get("source", cfg.source);
  cfg.n = args.count("n", cfg.n);
  cfg.replicas = args.count("replicas", cfg.replicas);
  cfg.checkpoints = parse_checkpoints(args.get("checkpoints", "1"));
  cfg.weights = parse_weights(args.get("weights", "const"));
  if (!args.z.empty()) {
    cfg.z_points.clear();
    for (const auto& zstr : args.z) cfg.z_points.push_back(parse_complex(zstr));
  }
  cfg.zoom_z = args.num("zoom-z", cfg.zoom_z);
  const std::string centering = args.get("centering", "analytic");
  if (centering != "analytic" && centering != "empirical")
    throw UsageError("--centering must be analytic or empirical");
  cfg.centering = centering == "analytic" ? CenteringMode::analytic : CenteringMode::empirical;
  cfg.seed = args.count("seed", cfg.seed);
  cfg.tol = args.num("tol", cfg.tol);
  cfg.center_tol = args.num("center-tol", cfg.center_tol);
  cfg.cov_rel_tol = args.num("cov-rel-tol", cfg.cov_rel_tol);
  cfg.se_mult = args.num("se-mult", cfg.se_mult);
  cfg.corr_tol = args.num("corr-tol", cfg.corr_tol);
  cfg.p_threshold = args.num("p-threshold", cfg.p_threshold);
  cfg.freeze_threshold = args.num("freeze-threshold", cfg.freeze_threshold);
  cfg.threads = static_cast<int>(args.count("threads", 0));
  if (args.has("n-grid")) {
    cfg.n_grid.clear();
    for (double v : parse_checkpoints(args.kv.at("n-grid")))
      cfg.n_grid.push_back(static_cast<std::uint64_t>(v));
  }
  cfg.decay_replicas = args.count("decay-replicas", cfg.decay_replicas);
  cfg.series_n = args.count("series-n", cfg.series_n);

  const Report rep = run_experiment(cfg);
  const std::string format = args.get("format", "json");
  if (args.has("out")) {
    write_report(rep, args.kv.at("out"), format, args.timing);
  } else {
    std::cout << (format == "csv" ? report_to_csv(rep) : report_to_json(rep, args.timing));
  }
  std::fprintf(stderr, "crpmat experiment %s: %zu records, %s (%.1fs)\n", rep.name.c_str(),
               rep.records.size(), rep.overall_pass ? "PASS" : "FAIL",
               rep.env.wall_time_seconds);
  return rep.overall_pass ? 0 : 4;
}

int cmd_report(const Args& args) {
  const std::string path = args.require("in");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open report: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const Report rep = report_from_json(buf.str());
  for (const auto& r : rep.records) {
    std::printf("%-36s %-9s observed=%-22.15g expected=%-22.15g %s\n", r.statistic.c_str(),
                record_kind_name(r.kind), r.observed, r.expected, r.pass ? "pass" : "FAIL");
  }
  std::printf("report %s: %s\n", rep.name.c_str(), rep.overall_pass ? "PASS" : "FAIL");
  if (args.has("out")) {
    write_report(rep, args.kv.at("out"), args.get("format", "json"), args.timing);
  }
  return rep.overall_pass ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    if (argc >= 2 && (std::string(argv[1]) == "--help" || std::string(argv[1]) == "-h")) {
      std::cout << kUsage;
      return 0;
    }
    if (argc >= 2 && std::string(argv[1]) == "--version") {
      std::cout << "crpmat " << crpmat::kVersion << "\n";
      return 0;
    }
    const Args args = parse_args(argc, argv);
    if (args.subcommand == "simulate") return cmd_simulate(args);
    if (args.subcommand == "urn") return cmd_urn(args);
    if (args.subcommand == "enumerate") return cmd_enumerate(args);
    if (args.subcommand == "oracle") return cmd_oracle(args);
    if (args.subcommand == "experiment") return cmd_experiment(args);
    if (args.subcommand == "report") return cmd_report(args);
    throw UsageError("unknown subcommand '" + args.subcommand + "'");
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n\n%s", e.what(), kUsage);
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
