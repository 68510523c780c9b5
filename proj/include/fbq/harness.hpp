#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fbq/asymptotics.hpp"
#include "fbq/channels.hpp"
#include "fbq/codebook.hpp"
#include "fbq/corelin.hpp"
#include "fbq/rng.hpp"
#include "fbq/trees.hpp"

namespace fbq {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Scenario { kMimo, kCdma };

enum class Scheme { kRvqFull, kNnExhaustive, kGlaTree, kKdTree, kKdModified, kRandom };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kRvqFull: return "rvq_full";
    case Scheme::kNnExhaustive: return "nn_exhaustive";
    case Scheme::kGlaTree: return "gla_tree";
    case Scheme::kKdTree: return "kd_tree";
    case Scheme::kKdModified: return "kd_modified";
    case Scheme::kRandom: return "random";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "rvq_full") return Scheme::kRvqFull;
  if (s == "nn_exhaustive") return Scheme::kNnExhaustive;
  if (s == "gla_tree") return Scheme::kGlaTree;
  if (s == "kd_tree") return Scheme::kKdTree;
  if (s == "kd_modified") return Scheme::kKdModified;
  if (s == "random") return Scheme::kRandom;
  throw ConfigError("unknown scheme: " + s);
}

struct ExperimentConfig {
  Scenario scenario = Scenario::kMimo;
  // mimo
  std::size_t n_t = 3;
  std::size_t n_r = 4;
  double rho_db = 10.0;
  // cdma
  std::size_t n = 10;
  std::size_t k = 5;
  std::size_t l = 1;
  double sigma2 = 0.1;
  double alpha = 1.0;

  std::vector<unsigned> bits_sweep = {0, 1, 2, 3, 4, 5, 6};
  std::vector<Scheme> schemes = {Scheme::kRvqFull, Scheme::kNnExhaustive, Scheme::kGlaTree,
                                 Scheme::kKdTree, Scheme::kKdModified, Scheme::kRandom};
  std::size_t trials = 2000;
  std::uint64_t seed = 1;
  std::string out_path;
  std::size_t codebook_cap = kDefaultCodebookCap;

  std::size_t quantized_dim() const { return scenario == Scenario::kMimo ? n_t : n; }

  void validate() const {
    if (bits_sweep.empty()) throw ConfigError("bits sweep is empty");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (schemes.empty()) throw ConfigError("scheme list is empty");
    if (scenario == Scenario::kMimo && (n_t < 1 || n_r < 1))
      throw ConfigError("mimo: antenna counts must be >= 1");
    if (scenario == Scenario::kCdma && (n < 1 || k < 1 || l < 1 || l > n))
      throw ConfigError("cdma: need N >= 1, K >= 1, 1 <= L <= N");
  }
};

struct ResultRow {
  std::string scheme;
  unsigned bits = 0;
  double b_bar = 0.0;
  std::string metric;
  double mean = 0.0;
  double stderr_mean = 0.0;
  double mean_equiv_inner_products = 0.0;
  double mean_macs = 0.0;
  std::size_t trials = 0;
};

namespace detail {

inline std::size_t thread_budget() {
  const char* env = std::getenv("FBQ_THREADS");
  std::size_t cap = 0;
  if (env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end && *end == '\0') cap = static_cast<std::size_t>(v);
  }
  if (cap == 0) {
    const unsigned hc = std::thread::hardware_concurrency();
    cap = hc == 0 ? 1 : hc;
  }
  return cap;
}

// Runs fn(trial) for every trial index.  Results must go into preallocated
// per-trial slots; the caller reduces them in index order afterwards, so the
// output is identical for any thread count.
template <typename Fn>
void parallel_trials(std::size_t trials, Fn&& fn) {
  const std::size_t want = std::min(thread_budget(), trials);
  if (want <= 1) {
    for (std::size_t t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(want);
  const std::size_t chunk = (trials + want - 1) / want;
  for (std::size_t w = 0; w < want; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(trials, lo + chunk);
    pool.emplace_back([&, lo, hi, w]() {
      try {
        for (std::size_t t = lo; t < hi; ++t) fn(t);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

struct TrialOutcome {
  double perf = 0.0;       // capacity (bits/use) or SINR (linear)
  double objective = 0.0;  // quadratic-form value the scheme targeted
  std::uint64_t macs = 0;
};

struct Accum {
  double sum = 0.0;
  double sumsq = 0.0;
  double mac_sum = 0.0;
  std::size_t n = 0;

  void add(double x, double macs) {
    sum += x;
    sumsq += x * x;
    mac_sum += macs;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double stderr_mean() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sumsq - static_cast<double>(n) * m * m) /
                                         static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

}  // namespace detail

// Per-trial selection shared by both scenarios: given the covariance, the
// quantized eigenvector, the codebook and prebuilt trees, run one scheme and
// report the chosen entry plus its search cost.
namespace detail {

struct SchemeRun {
  std::size_t index = 0;
  std::uint64_t macs = 0;
};

inline SchemeRun run_scheme(Scheme scheme, Objective obj, const Codebook& cb,
                            const CovarianceMatrix& m, const UnitVector* quant_target,
                            const KdTree* kd, const GlaTree* gla) {
  OpCounter counter;
  SchemeRun out;
  switch (scheme) {
    case Scheme::kRvqFull: {
      const Selection sel = obj == Objective::kMaximize ? select_max_quadratic(cb, m, counter)
                                                        : select_min_quadratic(cb, m, counter);
      out.index = sel.index;
      break;
    }
    case Scheme::kNnExhaustive: {
      const Selection sel = select_nearest_neighbor(cb, *quant_target, counter);
      out.index = sel.index;
      break;
    }
    case Scheme::kGlaTree: {
      const SearchReport rep = tree_nearest_neighbor(*gla, *quant_target, counter);
      out.index = rep.index;
      break;
    }
    case Scheme::kKdTree: {
      const SearchReport rep = tree_nearest_neighbor(*kd, *quant_target, counter);
      out.index = rep.index;
      break;
    }
    case Scheme::kKdModified: {
      const SearchReport rep = modified_kd_search(*kd, m, obj, counter);
      out.index = rep.index;
      break;
    }
    case Scheme::kRandom:
      out.index = 0;  // entry 0 of an RVQ codebook is itself a uniform draw
      break;
  }
  out.macs = counter.macs;
  return out;
}

inline bool needs_eigenvector(Scheme s) {
  return s == Scheme::kNnExhaustive || s == Scheme::kGlaTree || s == Scheme::kKdTree;
}

inline bool needs_kd(Scheme s) { return s == Scheme::kKdTree || s == Scheme::kKdModified; }

}  // namespace detail

inline std::vector<ResultRow> run_mimo_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.scenario != Scenario::kMimo) throw ConfigError("run_mimo_sweep: scenario is not mimo");
  const double rho = std::pow(10.0, cfg.rho_db / 10.0);
  const Rng master(cfg.seed);
  const bool want_eigen = std::any_of(cfg.schemes.begin(), cfg.schemes.end(),
                                      detail::needs_eigenvector);
  const bool want_kd = std::any_of(cfg.schemes.begin(), cfg.schemes.end(), detail::needs_kd);
  const bool want_gla = std::count(cfg.schemes.begin(), cfg.schemes.end(), Scheme::kGlaTree) > 0;
  const bool have_full = std::count(cfg.schemes.begin(), cfg.schemes.end(), Scheme::kRvqFull) > 0;

  std::vector<ResultRow> rows;
  for (unsigned bits : cfg.bits_sweep) {
    if (bits >= 63 || (std::size_t{1} << bits) > cfg.codebook_cap) {
      std::cerr << "warning: skipping B=" << bits << " (codebook exceeds entry cap)\n";
      continue;
    }
    std::vector<std::vector<detail::TrialOutcome>> slots(
        cfg.schemes.size(), std::vector<detail::TrialOutcome>(cfg.trials));

    detail::parallel_trials(cfg.trials, [&](std::size_t t) {
      const Rng channel_rng = master.derive({1, t});
      const Rng codebook_rng = master.derive({2, t});
      const MimoChannel ch = sample_mimo(cfg.n_t, cfg.n_r, channel_rng);
      const CovarianceMatrix m = mimo_covariance(ch);
      const Codebook cb = generate_rvq(cfg.n_t, bits, codebook_rng, cfg.codebook_cap);

      UnitVector u1;
      if (want_eigen) u1 = UnitVector::normalized(eigen_decompose(m).eigenvectors.front());
      KdTree kd;
      if (want_kd) kd = build_kd_tree(cb);
      GlaTree gla;
      if (want_gla) gla = build_gla_tree(cb);

      OpCounter scratch;
      for (std::size_t si = 0; si < cfg.schemes.size(); ++si) {
        const detail::SchemeRun run = detail::run_scheme(
            cfg.schemes[si], Objective::kMaximize, cb, m, want_eigen ? &u1 : nullptr,
            want_kd ? &kd : nullptr, want_gla ? &gla : nullptr);
        detail::TrialOutcome& out = slots[si][t];
        out.objective = quadratic_form(cb.entry_vec(run.index), m, scratch);
        out.perf = std::log2(1.0 + rho * out.objective);
        out.macs = run.macs;
      }
      if (have_full) {
        double full_obj = 0.0;
        for (std::size_t si = 0; si < cfg.schemes.size(); ++si)
          if (cfg.schemes[si] == Scheme::kRvqFull) full_obj = slots[si][t].objective;
        for (std::size_t si = 0; si < cfg.schemes.size(); ++si)
          if (slots[si][t].objective > full_obj + 1e-12)
            throw std::logic_error("scheme dominance violated in mimo sweep");
      }
    });

    for (std::size_t si = 0; si < cfg.schemes.size(); ++si) {
      detail::Accum acc;
      for (std::size_t t = 0; t < cfg.trials; ++t)
        acc.add(slots[si][t].perf, static_cast<double>(slots[si][t].macs));
      ResultRow row;
      row.scheme = scheme_name(cfg.schemes[si]);
      row.bits = bits;
      row.b_bar = static_cast<double>(bits) / static_cast<double>(cfg.n_t);
      row.metric = "capacity_bpcu";
      row.mean = acc.mean();
      row.stderr_mean = acc.stderr_mean();
      row.mean_macs = acc.mac_sum / static_cast<double>(cfg.trials);
      row.mean_equiv_inner_products = row.mean_macs / static_cast<double>(cfg.n_t);
      row.trials = cfg.trials;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::vector<ResultRow> run_cdma_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.scenario != Scenario::kCdma) throw ConfigError("run_cdma_sweep: scenario is not cdma");
  const Rng master(cfg.seed);
  const bool want_eigen = std::any_of(cfg.schemes.begin(), cfg.schemes.end(),
                                      detail::needs_eigenvector);
  const bool want_kd = std::any_of(cfg.schemes.begin(), cfg.schemes.end(), detail::needs_kd);
  const bool want_gla = std::count(cfg.schemes.begin(), cfg.schemes.end(), Scheme::kGlaTree) > 0;
  const bool have_full = std::count(cfg.schemes.begin(), cfg.schemes.end(), Scheme::kRvqFull) > 0;
  const PowerProfile user1 = PowerProfile::uniform(cfg.l, cfg.alpha);

  std::vector<ResultRow> rows;
  for (unsigned bits : cfg.bits_sweep) {
    if (bits >= 63 || (std::size_t{1} << bits) > cfg.codebook_cap) {
      std::cerr << "warning: skipping B=" << bits << " (codebook exceeds entry cap)\n";
      continue;
    }
    std::vector<std::vector<detail::TrialOutcome>> slots(
        cfg.schemes.size(), std::vector<detail::TrialOutcome>(cfg.trials));

    detail::parallel_trials(cfg.trials, [&](std::size_t t) {
      const Rng channel_rng = master.derive({1, t});
      const Rng codebook_rng = master.derive({2, t});
      const CdmaInstance inst = sample_cdma(cfg.n, cfg.k, cfg.l, user1, cfg.sigma2, channel_rng);
      const CovarianceMatrix m = interference_covariance(inst);
      const Codebook cb = generate_rvq(cfg.n, bits, codebook_rng, cfg.codebook_cap);

      UnitVector u_min;
      if (want_eigen) u_min = UnitVector::normalized(eigen_decompose(m).eigenvectors.back());
      KdTree kd;
      if (want_kd) kd = build_kd_tree(cb);
      GlaTree gla;
      if (want_gla) gla = build_gla_tree(cb);

      OpCounter scratch;
      for (std::size_t si = 0; si < cfg.schemes.size(); ++si) {
        const detail::SchemeRun run = detail::run_scheme(
            cfg.schemes[si], Objective::kMinimize, cb, m, want_eigen ? &u_min : nullptr,
            want_kd ? &kd : nullptr, want_gla ? &gla : nullptr);
        detail::TrialOutcome& out = slots[si][t];
        const UnitVector s1 = UnitVector::normalized(cb.entry_vec(run.index));
        out.objective = quadratic_form(s1, m, scratch);
        out.perf = sinr_matched_filter(s1, inst);
        out.macs = run.macs;
      }
      if (have_full) {
        double full_obj = 0.0;
        for (std::size_t si = 0; si < cfg.schemes.size(); ++si)
          if (cfg.schemes[si] == Scheme::kRvqFull) full_obj = slots[si][t].objective;
        for (std::size_t si = 0; si < cfg.schemes.size(); ++si)
          if (slots[si][t].objective < full_obj - 1e-12)
            throw std::logic_error("scheme dominance violated in cdma sweep");
      }
    });

    for (std::size_t si = 0; si < cfg.schemes.size(); ++si) {
      detail::Accum lin, db;
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        const double macs = static_cast<double>(slots[si][t].macs);
        lin.add(slots[si][t].perf, macs);
        db.add(to_db(slots[si][t].perf), macs);
      }
      for (const auto* acc : {&lin, &db}) {
        ResultRow row;
        row.scheme = scheme_name(cfg.schemes[si]);
        row.bits = bits;
        row.b_bar = static_cast<double>(bits) / static_cast<double>(cfg.n);
        row.metric = acc == &lin ? "sinr_linear" : "sinr_db";
        row.mean = acc->mean();
        row.stderr_mean = acc->stderr_mean();
        row.mean_macs = acc->mac_sum / static_cast<double>(cfg.trials);
        row.mean_equiv_inner_products = row.mean_macs / static_cast<double>(cfg.n);
        row.trials = cfg.trials;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// Performance-vs-cost rows for complexity plots; the sweep rows already
// carry the counter aggregates, so this just dispatches on the scenario.
inline std::vector<ResultRow> run_complexity_profile(const ExperimentConfig& cfg) {
  return cfg.scenario == Scenario::kMimo ? run_mimo_sweep(cfg) : run_cdma_sweep(cfg);
}

inline std::string format_csv(std::vector<ResultRow> rows) {
  if (rows.empty()) throw std::invalid_argument("format_csv: no rows");
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.scheme != b.scheme) return a.scheme < b.scheme;
    if (a.bits != b.bits) return a.bits < b.bits;
    return a.metric < b.metric;
  });
  std::string out = "scheme,B,b_bar,metric,mean,stderr,mean_equiv_inner_products,mean_macs,trials\n";
  char buf[512];
  for (const ResultRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%u,%.10g,%s,%.10g,%.10g,%.10g,%.10g,%zu\n",
                  r.scheme.c_str(), r.bits, r.b_bar, r.metric.c_str(), r.mean, r.stderr_mean,
                  r.mean_equiv_inner_products, r.mean_macs, r.trials);
    out += buf;
  }
  return out;
}

inline void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  const std::string body = format_csv(rows);  // throws before any file is touched
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("emit_csv: cannot open " + path);
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw std::runtime_error("emit_csv: short write to " + path);
}

// --- flat key = value config files -----------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (...) {
    throw ConfigError("bad numeric value for " + key + ": " + v);
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t d = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (...) {
    throw ConfigError("bad integer value for " + key + ": " + v);
  }
}

}  // namespace detail

inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
  if (key == "scenario") {
    if (value == "mimo")
      cfg.scenario = Scenario::kMimo;
    else if (value == "cdma")
      cfg.scenario = Scenario::kCdma;
    else
      throw ConfigError("scenario must be mimo or cdma, got: " + value);
  } else if (key == "nt") {
    cfg.n_t = detail::parse_u64(key, value);
  } else if (key == "nr") {
    cfg.n_r = detail::parse_u64(key, value);
  } else if (key == "rho_db") {
    cfg.rho_db = detail::parse_double(key, value);
  } else if (key == "n") {
    cfg.n = detail::parse_u64(key, value);
  } else if (key == "k") {
    cfg.k = detail::parse_u64(key, value);
  } else if (key == "l") {
    cfg.l = detail::parse_u64(key, value);
  } else if (key == "sigma2") {
    cfg.sigma2 = detail::parse_double(key, value);
  } else if (key == "alpha") {
    cfg.alpha = detail::parse_double(key, value);
  } else if (key == "bits") {
    cfg.bits_sweep.clear();
    for (const std::string& b : detail::split_list(value))
      cfg.bits_sweep.push_back(static_cast<unsigned>(detail::parse_u64(key, b)));
    if (cfg.bits_sweep.empty()) throw ConfigError("bits list is empty");
  } else if (key == "schemes") {
    cfg.schemes.clear();
    for (const std::string& s : detail::split_list(value)) cfg.schemes.push_back(parse_scheme(s));
    if (cfg.schemes.empty()) throw ConfigError("scheme list is empty");
  } else if (key == "trials") {
    cfg.trials = detail::parse_u64(key, value);
  } else if (key == "seed") {
    cfg.seed = detail::parse_u64(key, value);
  } else if (key == "out") {
    cfg.out_path = value;
  } else if (key == "codebook_cap") {
    cfg.codebook_cap = detail::parse_u64(key, value);
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config: " + path);
  ExperimentConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    apply_config_entry(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

}  // namespace fbq
