#pragma once

// Monte Carlo experiment harness: conditional CLT checks against the
// covariance oracles, Kingman equivalence, the (0,theta) Feller suite, and
// the characteristic-polynomial CLT with the zoom-in limit.
//
// Every experiment is a pure function of its config: replica r draws its
// variates from the stream derive_seed(seed, r) (plus disjoint index blocks
// for auxiliary streams), replicas write to their own slots, and reductions
// run in replica order, so reports do not depend on the thread count.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crpmat/crp.hpp"
#include "crpmat/feller.hpp"
#include "crpmat/frequencies.hpp"
#include "crpmat/limit_laws.hpp"
#include "crpmat/parallel.hpp"
#include "crpmat/report.hpp"
#include "crpmat/stat_tests.hpp"
#include "crpmat/urn.hpp"
#include "crpmat/weights.hpp"

namespace crpmat {

enum class CenteringMode { analytic, empirical };

struct WeightSpec {
  enum class Kind { constant, arc, logz, table } kind = Kind::constant;
  double c1 = 0.0, c2 = 0.5;
  std::complex<double> z{0.5, 0.0};
  std::vector<double> table;

  std::string label() const {
    switch (kind) {
      case Kind::constant: return "const";
      case Kind::arc: return "arc:" + std::to_string(c1) + ":" + std::to_string(c2);
      case Kind::logz:
        return "logz:" + std::to_string(z.real()) + ":" + std::to_string(z.imag());
      case Kind::table: return "file:(" + std::to_string(table.size()) + " entries)";
    }
    return "?";
  }

  Weights real_weights() const {
    switch (kind) {
      case Kind::constant: return const_weights();
      case Kind::arc: return arc_weights(c1, c2);
      case Kind::table: return table_weights(table, "file");
      case Kind::logz: break;
    }
    throw std::invalid_argument("WeightSpec: complex weights not valid for this experiment");
  }
};

struct ExperimentConfig {
  std::string name = "clt";  // clt | kingman | feller | charpoly
  double alpha = 0.5;
  double theta = 0.5;
  std::string source = "power";  // power | stick (conditional experiments)
  std::uint64_t n = 100000;
  std::uint64_t replicas = 1000;
  std::vector<double> checkpoints{1.0};
  WeightSpec weights;
  std::vector<std::complex<double>> z_points{{0.5, 0.0}};
  double zoom_z = 1.0;
  CenteringMode centering = CenteringMode::analytic;
  std::uint64_t seed = 12345;
  double tol = 1e-8;          // oracle quadrature tolerance
  double center_tol = 0.05;   // absolute truncation error of centering terms
  double cov_rel_tol = 0.10;  // relative covariance agreement
  double se_mult = 3.0;       // sampling-allowance multiplier in cov records
  double corr_tol = 0.05;
  double p_threshold = 1e-3;
  double freeze_threshold = 1e-5;
  int threads = 0;
  std::vector<std::uint64_t> n_grid{1000, 10000, 100000};  // feller error decay
  std::uint64_t decay_replicas = 300000;  // feller error decay sample size
  std::uint64_t series_n = 10000;         // feller three-series size
};

namespace detail {

inline void echo_common(const ExperimentConfig& cfg, Report& rep) {
  auto put = [&rep](const std::string& k, const std::string& v) { rep.config.emplace_back(k, v); };
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  put("name", cfg.name);
  put("alpha", fmt(cfg.alpha));
  put("theta", fmt(cfg.theta));
  put("source", cfg.source);
  put("n", std::to_string(cfg.n));
  put("replicas", std::to_string(cfg.replicas));
  std::string cks;
  for (double t : cfg.checkpoints) cks += (cks.empty() ? "" : ",") + fmt(t);
  put("checkpoints", cks);
  put("weights", cfg.weights.label());
  std::string zs;
  for (const auto& z : cfg.z_points) zs += (zs.empty() ? "" : ",") + fmt(z.real()) + ":" + fmt(z.imag());
  put("z", zs);
  put("zoom_z", fmt(cfg.zoom_z));
  put("centering", cfg.centering == CenteringMode::analytic ? "analytic" : "empirical");
  put("seed", std::to_string(cfg.seed));
  put("tol", fmt(cfg.tol));
  put("center_tol", fmt(cfg.center_tol));
  put("cov_rel_tol", fmt(cfg.cov_rel_tol));
  put("se_mult", fmt(cfg.se_mult));
  put("corr_tol", fmt(cfg.corr_tol));
  put("p_threshold", fmt(cfg.p_threshold));
  put("freeze_threshold", fmt(cfg.freeze_threshold));
  std::string grid;
  for (auto v : cfg.n_grid) grid += (grid.empty() ? "" : ",") + std::to_string(v);
  put("n_grid", grid);
  put("decay_replicas", std::to_string(cfg.decay_replicas));
  put("series_n", std::to_string(cfg.series_n));
  // threads and wall time are runtime-only: outputs stay byte-identical
  // across --threads, as the determinism contract requires
}

inline void check_base(const ExperimentConfig& cfg) {
  if (cfg.replicas < 100) throw std::invalid_argument("experiment: replicas must be >= 100");
  validate_checkpoints(cfg.checkpoints);
}

// Frozen frequency source of the conditional setting plus its C0.
struct ConditionalSource {
  FrequencySource src;
  double c0 = 0.0;
  std::string c0_origin;
};

inline ConditionalSource make_conditional_source(const ExperimentConfig& cfg) {
  if (cfg.source == "power") {
    ConditionalSource out{FrequencySource::power_law(cfg.alpha), 0.0, "exact (power law)"};
    out.src.freeze(cfg.freeze_threshold);
    out.c0 = out.src.c0();
    return out;
  }
  if (cfg.source == "stick") {
    auto src = FrequencySource::stick_breaking(make_params(cfg.alpha, cfg.theta),
                                               derive_seed(cfg.seed, 0x517ul));
    src.freeze(std::max(cfg.freeze_threshold, 1e-6));
    ConditionalSource out{std::move(src), 0.0, "estimated (stick-breaking)"};
    const std::size_t depth = std::min<std::size_t>(out.src.generated(), 100000);
    out.c0 = estimate_c0(out.src, depth).c0;
    return out;
  }
  throw std::invalid_argument("experiment: source must be power or stick");
}

// Delta table for incremental trackers; sized to the expected count range.
template <class T>
std::vector<T> tracker_deltas(const BasicWeights<T>& w, std::uint64_t n, double p1) {
  std::uint64_t len = static_cast<std::uint64_t>(static_cast<double>(n) * p1 * 1.3) + 1024;
  if (len > n + 1) len = n + 1;
  if (w.support_end() > 0 && w.support_end() < len) len = w.support_end();
  if (w.const_from() > 0 && w.const_from() < len) len = w.const_from();
  return w.delta_table(len);
}

inline double sq(double x) { return x * x; }

struct MomentMatrix {
  std::size_t dim = 0;
  std::vector<double> mean;
  std::vector<double> cov;  // row-major, unbiased

  static MomentMatrix from_samples(const std::vector<std::vector<double>>& x) {
    MomentMatrix m;
    const std::size_t r = x.size();
    m.dim = x.empty() ? 0 : x[0].size();
    m.mean.assign(m.dim, 0.0);
    m.cov.assign(m.dim * m.dim, 0.0);
    for (const auto& row : x) {
      for (std::size_t i = 0; i < m.dim; ++i) m.mean[i] += row[i];
    }
    for (auto& v : m.mean) v /= static_cast<double>(r);
    for (const auto& row : x) {
      for (std::size_t i = 0; i < m.dim; ++i) {
        for (std::size_t j = 0; j < m.dim; ++j) {
          m.cov[i * m.dim + j] += (row[i] - m.mean[i]) * (row[j] - m.mean[j]);
        }
      }
    }
    for (auto& v : m.cov) v /= static_cast<double>(r - 1);
    return m;
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Conditional functional CLT: X_r(t) = (S_{a,floor(nt)} - E(S|P)) / n^{a/2}
// against C0^alpha-scaled covariance oracles and the sampled limit marginal.
// ---------------------------------------------------------------------------
inline Report run_clt_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::check_base(cfg);
  Report rep;
  rep.name = "clt";
  detail::echo_common(cfg, rep);
  rep.env = {cfg.seed, cfg.n, cfg.replicas, resolve_threads(cfg.threads), 0.0, kVersion};

  detail::ConditionalSource cond = detail::make_conditional_source(cfg);
  const Weights w = cfg.weights.real_weights();
  if (!w.bounded())
    throw std::invalid_argument("run_clt_experiment: weights must carry a beta = 0 certificate");
  rep.config.emplace_back("c0", std::to_string(cond.c0) + " [" + cond.c0_origin + "]");

  const std::size_t nck = cfg.checkpoints.size();
  const double norm = std::pow(static_cast<double>(cfg.n), cfg.alpha / 2.0);
  const double c0a = std::pow(cond.c0, cfg.alpha);

  // oracle covariance grid of the limit (scaled by C0^alpha)
  CovMatrix limit = cov_matrix_zalpha(cfg.alpha, w, cfg.checkpoints, cfg.tol);
  for (auto& v : limit.m) v *= c0a;
  limit.tol = cfg.tol * c0a * 10.0;

  // analytic centering
  std::vector<double> center(nck, 0.0);
  if (cfg.centering == CenteringMode::analytic) {
    for (std::size_t k = 0; k < nck; ++k) {
      const auto m = static_cast<std::uint64_t>(static_cast<double>(cfg.n) * cfg.checkpoints[k]);
      if (m == 0) continue;
      if (cfg.weights.kind == WeightSpec::Kind::constant) {
        center[k] = occupied_mean(cond.src, m, cfg.center_tol);
      } else {
        center[k] = weighted_occupancy_mean<double>(
            cond.src, [&w](std::uint64_t j) { return w(j); }, w.bound(), w.support_end(), m,
            cfg.center_tol);
      }
    }
  }

  // replicas
  const FrozenSampler sampler(cond.src);
  const double p1 = cond.src.prefix().empty() ? 1.0 : cond.src.prefix()[0];
  const std::vector<double> deltas = detail::tracker_deltas(w, cfg.n, p1);
  std::vector<std::vector<double>> raw(cfg.replicas, std::vector<double>(nck, 0.0));
  const int threads = resolve_threads(cfg.threads);
  std::vector<UrnScratch> scratch(threads);
  struct Hook {
    enum : bool { needs_histogram = false };
    WeightedStat<double> stat;
    std::vector<double>* out;
    void on_promote(std::uint64_t c) { stat.on_promote(c); }
    void at_checkpoint(std::size_t k, std::uint64_t, const OccupancyCounts&) {
      (*out)[k] = stat.value;
    }
  };
  parallel_replicas(cfg.replicas, cfg.threads, [&](int wid, std::uint64_t r) {
    Hook hook{{&deltas, &w, 0.0}, &raw[r]};
    run_urn_frozen(sampler, cfg.n, cfg.checkpoints, derive_seed(cfg.seed, r), scratch[wid], hook);
  });

  std::vector<std::vector<double>> x(cfg.replicas, std::vector<double>(nck, 0.0));
  std::vector<double> emp_center(nck, 0.0);
  if (cfg.centering == CenteringMode::empirical) {
    for (const auto& row : raw) {
      for (std::size_t k = 0; k < nck; ++k) emp_center[k] += row[k];
    }
    for (auto& v : emp_center) v /= static_cast<double>(cfg.replicas);
  }
  const std::vector<double>& use_center =
      cfg.centering == CenteringMode::empirical ? emp_center : center;
  for (std::uint64_t r = 0; r < cfg.replicas; ++r) {
    for (std::size_t k = 0; k < nck; ++k) x[r][k] = (raw[r][k] - use_center[k]) / norm;
  }

  const auto mm = detail::MomentMatrix::from_samples(x);
  const std::size_t last = nck - 1;
  const double rr = static_cast<double>(cfg.replicas);

  // centering identity: mean of X(1) vanishes within 4 SE
  if (cfg.centering == CenteringMode::analytic) {
    const double se = std::sqrt(std::max(mm.cov[last * nck + last], 0.0) / rr);
    rep.records.push_back(
        Record::tolerance("mean_X(1)", mm.mean[last], 0.0, 4.0 * se, se,
                          "conditional centering identity"));
  } else {
    rep.records.push_back(Record::exact("mean_X(1)", true, 0.0, 0.0,
                                        "empirical centering: mean removed by construction "
                                        "(one degree of freedom consumed)"));
  }

  const bool degenerate = limit.at(last, last) < 1e-300;
  for (std::size_t i = 0; i < nck; ++i) {
    for (std::size_t j = i; j < nck; ++j) {
      const double expect = limit.at(i, j);
      const double se =
          std::sqrt(std::max(limit.at(i, i) * limit.at(j, j) + detail::sq(expect), 0.0) / (rr - 1));
      const double thr = cfg.cov_rel_tol * std::fabs(expect) + cfg.se_mult * se;
      char label[64];
      std::snprintf(label, sizeof(label), "cov(X(%g),X(%g))", cfg.checkpoints[i],
                    cfg.checkpoints[j]);
      rep.records.push_back(
          Record::tolerance(label, mm.cov[i * nck + j], expect, thr, se,
                            i == j && j == last ? "marginal variance at t = 1" : ""));
    }
  }
  for (std::size_t i = 0; i < nck; ++i) {
    for (std::size_t j = i + 1; j < nck; ++j) {
      if (degenerate) break;
      const double denom = std::sqrt(mm.cov[i * nck + i] * mm.cov[j * nck + j]);
      const double oracle_denom = std::sqrt(limit.at(i, i) * limit.at(j, j));
      if (!(denom > 0.0) || !(oracle_denom > 0.0)) continue;
      char label[64];
      std::snprintf(label, sizeof(label), "corr(X(%g),X(%g))", cfg.checkpoints[i],
                    cfg.checkpoints[j]);
      rep.records.push_back(Record::tolerance(label, mm.cov[i * nck + j] / denom,
                                              limit.at(i, j) / oracle_denom, cfg.corr_tol));
    }
  }

  if (degenerate) {
    rep.records.push_back(Record::exact("ks_marginal_t1", true, 0.0, 0.0,
                                        "degenerate weights: statistic identically zero"));
  } else {
    CovMatrix marg;
    marg.dim = 1;
    marg.labels = {cfg.checkpoints[last]};
    marg.m = {limit.at(last, last)};
    marg.tol = limit.tol;
    LimitProcessSampler gauss(marg, derive_seed(cfg.seed, 0x9e3779b9ull));
    // With unit weights the raw statistic is integer-valued, so X(1) lives on
    // a lattice of width 1/n^{a/2} (~4% of a standard deviation here). A KS
    // test of a lattice sample against a continuous one carries a systematic
    // O(lattice) statistic; the randomized continuity correction -- the same
    // U * width smoothing added to both samples -- removes it without
    // touching the law being tested.
    const double lattice = cfg.weights.kind == WeightSpec::Kind::constant ? 1.0 / norm : 0.0;
    RandomStream dither(derive_seed(cfg.seed, 0xd17e7ull));
    std::vector<double> ref(5 * cfg.replicas);
    for (auto& v : ref) v = gauss.sample()[0] + lattice * dither.uniform();
    std::vector<double> xs(cfg.replicas);
    for (std::uint64_t r = 0; r < cfg.replicas; ++r) {
      xs[r] = x[r][last] + lattice * dither.uniform();
    }
    const auto ks = ks_two_sample(xs, ref);
    rep.records.push_back(Record::p_value(
        "ks_marginal_t1", ks.p_value, cfg.p_threshold,
        lattice > 0.0
            ? "two-sample KS against the sampled limit marginal (continuity-corrected)"
            : "two-sample KS against the sampled limit marginal"));
  }

  rep.env.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.finalize();
  return rep;
}

// ---------------------------------------------------------------------------
// Kingman equivalence: joint law of (C_{n,1..3}) from the restaurant vs
// (D_{n,1..3}) from stick-breaking urns, plus block-count mean checks.
// ---------------------------------------------------------------------------
inline Report run_kingman_equivalence(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::check_base(cfg);
  const ModelParams params = make_params(cfg.alpha, cfg.theta);
  if (params.variant != Variant::alpha_theta)
    throw std::invalid_argument("run_kingman_equivalence: requires the alpha_theta variant");
  Report rep;
  rep.name = "kingman";
  detail::echo_common(cfg, rep);
  rep.env = {cfg.seed, cfg.n, cfg.replicas, resolve_threads(cfg.threads), 0.0, kVersion};

  const std::uint64_t r_total = cfg.replicas;
  struct Joint {
    std::int64_t c1 = 0, c2 = 0, c3 = 0;
    std::uint64_t blocks = 0;
  };
  std::vector<Joint> crp(r_total), urn(r_total);

  parallel_replicas(r_total, cfg.threads, [&](int, std::uint64_t r) {
    CrpProcess proc(params, derive_seed(cfg.seed, r));
    proc.run_to(cfg.n);
    const auto& c = proc.counts();
    crp[r] = {c.count(1), c.count(2), c.count(3), c.blocks};
  });
  parallel_replicas(r_total, cfg.threads, [&](int, std::uint64_t r) {
    const OccupancyCounts occ = stick_occupancy_counts(params, cfg.n,
                                                       derive_seed(cfg.seed, r_total + r),
                                                       derive_seed(cfg.seed, 2 * r_total + r));
    urn[r] = {occ.count(1), occ.count(2), occ.count(3), occ.blocks};
  });

  // pooled quantization of the joint counts, then the two-sample chi-square
  auto moments = [&](int coord) {
    double s1 = 0, s2 = 0;
    auto get = [coord](const Joint& j) {
      return static_cast<double>(coord == 0 ? j.c1 : coord == 1 ? j.c2 : j.c3);
    };
    for (const auto& j : crp) {
      s1 += get(j);
      s2 += get(j) * get(j);
    }
    for (const auto& j : urn) {
      s1 += get(j);
      s2 += get(j) * get(j);
    }
    const double m = s1 / (2.0 * static_cast<double>(r_total));
    return std::pair<double, double>(m, std::sqrt(std::max(s2 / (2.0 * r_total) - m * m, 0.0)));
  };
  std::int64_t width[3];
  for (int c = 0; c < 3; ++c) {
    const auto [m, sd] = moments(c);
    width[c] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::lround(sd / 2.0)));
  }
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>,
           std::pair<std::int64_t, std::int64_t>>
      bins;
  for (const auto& j : crp) ++bins[{j.c1 / width[0], j.c2 / width[1], j.c3 / width[2]}].first;
  for (const auto& j : urn) ++bins[{j.c1 / width[0], j.c2 / width[1], j.c3 / width[2]}].second;
  std::vector<std::pair<std::int64_t, std::int64_t>> paired;
  paired.reserve(bins.size());
  for (const auto& [key, cnts] : bins) paired.push_back(cnts);
  const auto chi2 = chi2_two_sample(paired);
  if (chi2.ok) {
    rep.records.push_back(Record::p_value(
        "joint_law_chi2", chi2.p_value, cfg.p_threshold,
        "joint (C1,C2,C3) vs (D1,D2,D3), " + std::to_string(chi2.bins_used) + " bins"));
  } else {
    rep.records.push_back(
        Record::exact("joint_law_chi2", false, 0.0, 0.0, "binning failed: " + chi2.note));
  }

  const double expect_blocks = block_count_mean(params, cfg.n);
  for (int side = 0; side < 2; ++side) {
    const auto& data = side == 0 ? crp : urn;
    double s1 = 0, s2 = 0;
    for (const auto& j : data) {
      s1 += static_cast<double>(j.blocks);
      s2 += detail::sq(static_cast<double>(j.blocks));
    }
    const double mean = s1 / static_cast<double>(r_total);
    const double se =
        std::sqrt(std::max(s2 / static_cast<double>(r_total) - mean * mean, 0.0) /
                  static_cast<double>(r_total - 1));
    rep.records.push_back(Record::tolerance(
        side == 0 ? "crp_block_mean" : "urn_occupied_mean", mean, expect_blocks, 4.0 * se, se,
        "against the exact block-count recursion"));
  }

  rep.env.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.finalize();
  return rep;
}

// ---------------------------------------------------------------------------
// Feller suite for the (0,theta) model.
// ---------------------------------------------------------------------------
inline Report run_feller_checks(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::check_base(cfg);
  if (!(cfg.theta > 0.0))
    throw std::invalid_argument("run_feller_checks: requires theta > 0 (zero_theta variant)");
  const ModelParams params = make_params(0.0, cfg.theta);
  Report rep;
  rep.name = "feller";
  detail::echo_common(cfg, rep);
  rep.env = {cfg.seed, cfg.n, cfg.replicas, resolve_threads(cfg.threads), 0.0, kVersion};

  const std::uint64_t r_total = cfg.replicas;
  constexpr std::size_t m_max = 5;

  // (a) + (b): coupled draws at size n, plus W moments from the same draws
  struct FellerObs {
    std::int64_t c1, c2, c3;
    std::array<std::int64_t, m_max> w;
  };
  std::vector<FellerObs> fell(r_total);
  parallel_replicas(r_total, cfg.threads, [&](int, std::uint64_t r) {
    const auto draw = feller_coupling(cfg.theta, cfg.n, m_max, derive_seed(cfg.seed, r));
    FellerObs o{};
    for (const auto& [j, c] : draw.c_hat) {
      if (j == 1) o.c1 = c;
      if (j == 2) o.c2 = c;
      if (j == 3) o.c3 = c;
    }
    for (std::size_t k = 0; k < m_max; ++k) o.w[k] = draw.w[k];
    fell[r] = o;
  });
  std::vector<std::array<std::int64_t, 3>> crp(r_total);
  parallel_replicas(r_total, cfg.threads, [&](int, std::uint64_t r) {
    CrpProcess proc(params, derive_seed(cfg.seed, r_total + r));
    proc.run_to(cfg.n);
    const auto& c = proc.counts();
    crp[r] = {c.count(1), c.count(2), c.count(3)};
  });

  // joint two-sample chi-square, same machinery as the Kingman report
  {
    std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>,
             std::pair<std::int64_t, std::int64_t>>
        bins;
    for (const auto& o : fell) ++bins[{o.c1, o.c2, o.c3}].first;
    for (const auto& o : crp) ++bins[{o[0], o[1], o[2]}].second;
    std::vector<std::pair<std::int64_t, std::int64_t>> paired;
    for (const auto& [k, v] : bins) paired.push_back(v);
    const auto chi2 = chi2_two_sample(paired);
    if (chi2.ok) {
      rep.records.push_back(Record::p_value(
          "coupled_vs_crp_chi2", chi2.p_value, cfg.p_threshold,
          "joint (C1,C2,C3): coupled construction vs sequential seating"));
    } else {
      rep.records.push_back(
          Record::exact("coupled_vs_crp_chi2", false, 0.0, 0.0, "binning failed: " + chi2.note));
    }
  }

  // (b) W_j ~ Poisson(theta/j): means, variances, pairwise correlations
  const double rr = static_cast<double>(r_total);
  std::array<double, m_max> s1{}, s2{};
  std::array<std::array<double, m_max>, m_max> cross{};
  for (const auto& o : fell) {
    for (std::size_t j = 0; j < m_max; ++j) {
      const auto wj = static_cast<double>(o.w[j]);
      s1[j] += wj;
      s2[j] += wj * wj;
      for (std::size_t k = 0; k < m_max; ++k) cross[j][k] += wj * static_cast<double>(o.w[k]);
    }
  }
  for (std::size_t j = 0; j < m_max; ++j) {
    const double lambda = cfg.theta / static_cast<double>(j + 1);
    const double mean = s1[j] / rr;
    const double var = s2[j] / rr - mean * mean;
    const double se_mean = std::sqrt(lambda / rr);
    const double se_var = std::sqrt(lambda * (1.0 + 3.0 * lambda) / rr);
    rep.records.push_back(Record::tolerance("W" + std::to_string(j + 1) + "_mean", mean, lambda,
                                            3.0 * se_mean, se_mean));
    rep.records.push_back(Record::tolerance("W" + std::to_string(j + 1) + "_var", var, lambda,
                                            3.0 * se_var, se_var));
  }
  for (std::size_t j = 0; j < m_max; ++j) {
    for (std::size_t k = j + 1; k < m_max; ++k) {
      const double mj = s1[j] / rr, mk = s1[k] / rr;
      const double vj = s2[j] / rr - mj * mj, vk = s2[k] / rr - mk * mk;
      const double rho = (cross[j][k] / rr - mj * mk) / std::sqrt(vj * vk);
      rep.records.push_back(Record::tolerance(
          "corr_W" + std::to_string(j + 1) + "_W" + std::to_string(k + 1), rho, 0.0,
          3.0 / std::sqrt(rr)));
    }
  }

  // (c) E|C-hat_{n,1} - W_1| strictly decreasing along the n grid. The
  // means scale like theta^2/n, so this check draws its own larger sample.
  {
    const std::uint64_t r_decay = std::max(cfg.decay_replicas, r_total);
    std::vector<double> decay;
    std::string note;
    for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
      const std::uint64_t ng = cfg.n_grid[gi];
      std::vector<double> acc(r_decay, 0.0);
      parallel_replicas(r_decay, cfg.threads, [&](int, std::uint64_t r) {
        const auto draw = feller_coupling(
            cfg.theta, ng, 1, derive_seed(cfg.seed, (3 + gi) * r_decay + r));
        std::int64_t c1 = 0;
        for (const auto& [j, c] : draw.c_hat) {
          if (j == 1) c1 = c;
        }
        acc[r] = std::fabs(static_cast<double>(c1 - draw.w[0]));
      });
      double mean = 0.0;
      for (double v : acc) mean += v;
      decay.push_back(mean / static_cast<double>(r_decay));
      note += (note.empty() ? "" : ", ") + std::to_string(ng) + " -> " + std::to_string(decay.back());
    }
    bool strict = true;
    for (std::size_t i = 1; i < decay.size(); ++i) strict = strict && decay[i] < decay[i - 1];
    rep.records.push_back(Record::exact("coupling_error_decreasing", strict, decay.back(),
                                        decay.front(), "E|C-hat_{n,1} - W_1|: " + note));
  }

  // (d) three-series stability: a_j = 1/j, law stabilizes from n to 2n
  {
    auto run_series = [&](std::uint64_t ns, std::uint64_t stream) {
      std::vector<double> ew(ns + 1, 0.0);
      double esum = 0.0;
      for (std::uint64_t j = 1; j <= ns; ++j)
        esum += ewens_cycle_mean(cfg.theta, ns, j) / static_cast<double>(j);
      std::vector<double> out(r_total);
      parallel_replicas(r_total, cfg.threads, [&](int, std::uint64_t r) {
        CrpProcess proc(params, derive_seed(cfg.seed, stream * r_total + r));
        double s = 0.0;
        struct Hook {
          double* s;
          void on_promote(std::uint64_t c) {
            if (c == 0) {
              *s += 1.0;
            } else {
              *s += 1.0 / static_cast<double>(c + 1) - 1.0 / static_cast<double>(c);
            }
          }
        } hook{&s};
        proc.run_to(ns, hook);
        out[r] = s - esum;
      });
      return out;
    };
    const auto law_n = run_series(cfg.series_n, 16);
    const auto law_2n = run_series(2 * cfg.series_n, 17);
    const auto ks = ks_two_sample(law_n, law_2n);
    rep.records.push_back(Record::p_value(
        "three_series_stability", ks.p_value, cfg.p_threshold,
        "sum a_j (C_j - E C_j), a_j = 1/j, n vs 2n"));
  }

  rep.env.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.finalize();
  return rep;
}

// ---------------------------------------------------------------------------
// Characteristic polynomial CLT inside the disc, plus the zoom-in limit.
// ---------------------------------------------------------------------------
inline Report run_charpoly_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::check_base(cfg);
  Report rep;
  rep.name = "charpoly";
  detail::echo_common(cfg, rep);
  rep.env = {cfg.seed, cfg.n, cfg.replicas, resolve_threads(cfg.threads), 0.0, kVersion};
  if (cfg.z_points.empty())
    throw std::invalid_argument("run_charpoly_experiment: needs at least one z point");
  for (const auto& z : cfg.z_points) {
    if (!(std::abs(z) < 1.0))
      throw std::invalid_argument("run_charpoly_experiment: z must lie inside the unit disc");
  }

  detail::ConditionalSource cond = detail::make_conditional_source(cfg);
  rep.config.emplace_back("c0", std::to_string(cond.c0) + " [" + cond.c0_origin + "]");
  rep.config.emplace_back("charpoly_time", "statistics recorded at t = 1");
  const double c0a = std::pow(cond.c0, cfg.alpha);
  const double norm = std::pow(static_cast<double>(cfg.n), cfg.alpha / 2.0);

  const std::size_t nz = cfg.z_points.size();
  std::vector<ComplexWeights> zw;
  zw.reserve(nz + 1);
  for (const auto& z : cfg.z_points) zw.push_back(log_charpoly_weights(z));
  const double zoom_point = cfg.zoom_z / norm;
  if (!(std::fabs(zoom_point) < 1.0))
    throw std::invalid_argument("run_charpoly_experiment: zoom point z/n^{a/2} must be inside");
  zw.push_back(log_charpoly_weights(std::complex<double>(zoom_point, 0.0)));

  // analytic centering per tracked weight sequence at t = 1
  std::vector<std::complex<double>> center(nz + 1, 0.0);
  for (std::size_t q = 0; q < nz + 1; ++q) {
    const auto& w = zw[q];
    center[q] = weighted_occupancy_mean<std::complex<double>>(
        cond.src, [&w](std::uint64_t j) { return w(j); }, w.bound(), w.support_end(), cfg.n,
        cfg.center_tol);
  }

  const FrozenSampler sampler(cond.src);
  const double p1 = cond.src.prefix().empty() ? 1.0 : cond.src.prefix()[0];
  std::vector<std::vector<std::complex<double>>> deltas;
  deltas.reserve(nz + 1);
  for (const auto& w : zw) deltas.push_back(detail::tracker_deltas(w, cfg.n, p1));

  std::vector<std::vector<std::complex<double>>> raw(cfg.replicas,
                                                     std::vector<std::complex<double>>(nz + 1));
  const int threads = resolve_threads(cfg.threads);
  std::vector<UrnScratch> scratch(threads);
  struct Hook {
    enum : bool { needs_histogram = false };
    std::vector<WeightedStat<std::complex<double>>> stats;
    std::vector<std::complex<double>>* out;
    void on_promote(std::uint64_t c) {
      for (auto& s : stats) s.on_promote(c);
    }
    void at_checkpoint(std::size_t, std::uint64_t, const OccupancyCounts&) {
      for (std::size_t q = 0; q < stats.size(); ++q) (*out)[q] = stats[q].value;
    }
  };
  parallel_replicas(cfg.replicas, cfg.threads, [&](int wid, std::uint64_t r) {
    Hook hook;
    hook.stats.reserve(nz + 1);
    for (std::size_t q = 0; q < nz + 1; ++q)
      hook.stats.push_back(WeightedStat<std::complex<double>>{&deltas[q], &zw[q], 0.0});
    hook.out = &raw[r];
    run_urn_frozen(sampler, cfg.n, {1.0}, derive_seed(cfg.seed, r), scratch[wid], hook);
  });

  const double rr = static_cast<double>(cfg.replicas);
  auto var_of = [&](const std::vector<double>& v) {
    double m = 0;
    for (double t : v) m += t;
    m /= rr;
    double s = 0;
    for (double t : v) s += (t - m) * (t - m);
    return std::pair<double, double>(m, s / (rr - 1));
  };

  // per-z records against the Re/Im oracle blocks
  for (std::size_t q = 0; q < nz; ++q) {
    const auto z = cfg.z_points[q];
    const ReImCov oracle = cov_eta_reim(cfg.alpha, z, z, 1.0, 1.0, cfg.tol);
    std::vector<double> re(cfg.replicas), im(cfg.replicas);
    for (std::uint64_t r = 0; r < cfg.replicas; ++r) {
      const auto v = (raw[r][q] - center[q]) / norm;
      re[r] = v.real();
      im[r] = v.imag();
    }
    char zlabel[48];
    std::snprintf(zlabel, sizeof(zlabel), "z=%g%+gi", z.real(), z.imag());
    const auto [re_mean, re_var] = var_of(re);
    {
      const double expect = c0a * oracle.rr;
      const double se = std::sqrt(2.0 / (rr - 1)) * std::max(expect, re_var);
      rep.records.push_back(Record::tolerance(std::string("var_re[") + zlabel + "]", re_var,
                                              expect,
                                              cfg.cov_rel_tol * std::fabs(expect) + cfg.se_mult * se,
                                              se, "Re log char poly, normalized"));
      const double se_mean = std::sqrt(std::max(re_var, 0.0) / rr);
      rep.records.push_back(Record::tolerance(std::string("mean_re[") + zlabel + "]", re_mean, 0.0,
                                              4.0 * se_mean, se_mean));
    }
    const double im_oracle = c0a * oracle.ii;
    if (std::fabs(im_oracle) > 1e-9) {
      const auto [im_mean, im_var] = var_of(im);
      (void)im_mean;
      const double se = std::sqrt(2.0 / (rr - 1)) * std::max(im_oracle, im_var);
      rep.records.push_back(Record::tolerance(std::string("var_im[") + zlabel + "]", im_var,
                                              im_oracle,
                                              cfg.cov_rel_tol * std::fabs(im_oracle) + cfg.se_mult * se,
                                              se));
      double cross = 0.0, rem = 0.0, imm = 0.0;
      for (std::uint64_t r = 0; r < cfg.replicas; ++r) {
        rem += re[r];
        imm += im[r];
      }
      rem /= rr;
      imm /= rr;
      for (std::uint64_t r = 0; r < cfg.replicas; ++r) cross += (re[r] - rem) * (im[r] - imm);
      cross /= (rr - 1);
      const double ri_expect = c0a * 0.5 * (oracle.ri + oracle.ir);
      const double se_cross = std::sqrt((re_var * im_var + detail::sq(ri_expect)) / (rr - 1));
      rep.records.push_back(Record::tolerance(std::string("cov_re_im[") + zlabel + "]", cross,
                                              ri_expect,
                                              cfg.cov_rel_tol * std::fabs(ri_expect) +
                                                  cfg.se_mult * se_cross + cfg.tol * 10.0,
                                              se_cross,
                                              "real and imaginary parts are correlated"));
    }
  }

  // cross-covariance between distinct z points (real parts)
  for (std::size_t q1 = 0; q1 < nz; ++q1) {
    for (std::size_t q2 = q1 + 1; q2 < nz; ++q2) {
      const ReImCov oracle =
          cov_eta_reim(cfg.alpha, cfg.z_points[q1], cfg.z_points[q2], 1.0, 1.0, cfg.tol);
      double m1 = 0, m2 = 0;
      std::vector<double> a(cfg.replicas), b(cfg.replicas);
      for (std::uint64_t r = 0; r < cfg.replicas; ++r) {
        a[r] = ((raw[r][q1] - center[q1]) / norm).real();
        b[r] = ((raw[r][q2] - center[q2]) / norm).real();
        m1 += a[r];
        m2 += b[r];
      }
      m1 /= rr;
      m2 /= rr;
      double cov = 0, v1 = 0, v2 = 0;
      for (std::uint64_t r = 0; r < cfg.replicas; ++r) {
        cov += (a[r] - m1) * (b[r] - m2);
        v1 += detail::sq(a[r] - m1);
        v2 += detail::sq(b[r] - m2);
      }
      cov /= (rr - 1);
      v1 /= (rr - 1);
      v2 /= (rr - 1);
      const double expect = c0a * oracle.rr;
      const double se = std::sqrt((v1 * v2 + detail::sq(expect)) / (rr - 1));
      char label[96];
      std::snprintf(label, sizeof(label), "cross_cov_re[z%zu,z%zu]", q1 + 1, q2 + 1);
      rep.records.push_back(Record::tolerance(
          label, cov, expect, cfg.cov_rel_tol * std::fabs(expect) + cfg.se_mult * se, se));
    }
  }

  // zoom-in: Var(log chi(z/n^{a/2}) - center) -> |z|^2 C0^a Var(Z_{alpha,1}(1))
  {
    std::vector<double> zoom(cfg.replicas);
    for (std::uint64_t r = 0; r < cfg.replicas; ++r)
      zoom[r] = (raw[r][nz] - center[nz]).real();
    const auto [zm, zv] = var_of(zoom);
    (void)zm;
    const double expect =
        detail::sq(cfg.zoom_z) * c0a * cov_zj(cfg.alpha, 1, 1, 1.0, 1.0, cfg.tol);
    const double se = std::sqrt(2.0 / (rr - 1)) * std::max(expect, zv);
    rep.records.push_back(Record::tolerance(
        "zoom_var", zv, expect, cfg.cov_rel_tol * std::fabs(expect) + cfg.se_mult * se, se,
        "un-normalized statistic at z/n^{a/2}"));
  }

  rep.env.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.finalize();
  return rep;
}

inline Report run_experiment(const ExperimentConfig& cfg) {
  if (cfg.name == "clt") return run_clt_experiment(cfg);
  if (cfg.name == "kingman") return run_kingman_equivalence(cfg);
  if (cfg.name == "feller") return run_feller_checks(cfg);
  if (cfg.name == "charpoly") return run_charpoly_experiment(cfg);
  throw std::invalid_argument("run_experiment: unknown experiment name " + cfg.name);
}

}  // namespace crpmat
