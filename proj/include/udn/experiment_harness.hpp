#pragma once

// Monte Carlo runner: seeded drops, every requested algorithm under an N
// policy, per-run records and per-algorithm aggregates, CSV/JSON emission.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "udn/assignment.hpp"
#include "udn/errors.hpp"
#include "udn/exact_optimizer.hpp"
#include "udn/greedy_coordinator.hpp"
#include "udn/network_model.hpp"
#include "udn/power_control.hpp"
#include "udn/serialization.hpp"

namespace udn {

enum class AlgorithmId {
  JointExact,
  FixedPairingExact,
  PowerAwareExact,
  PowerAwareApprox,
  PowerUnaware,
  RandomPartition,
  FullReuse,
  FullOrth,
};

inline constexpr AlgorithmId kAllAlgorithms[] = {
    AlgorithmId::JointExact,     AlgorithmId::FixedPairingExact, AlgorithmId::PowerAwareExact,
    AlgorithmId::PowerAwareApprox, AlgorithmId::PowerUnaware,    AlgorithmId::RandomPartition,
    AlgorithmId::FullReuse,      AlgorithmId::FullOrth,
};

inline std::string_view algorithm_name(AlgorithmId id) {
  switch (id) {
    case AlgorithmId::JointExact: return "joint-exact";
    case AlgorithmId::FixedPairingExact: return "fixed-pairing-exact";
    case AlgorithmId::PowerAwareExact: return "power-aware-exact";
    case AlgorithmId::PowerAwareApprox: return "power-aware-approx";
    case AlgorithmId::PowerUnaware: return "power-unaware";
    case AlgorithmId::RandomPartition: return "random-partition";
    case AlgorithmId::FullReuse: return "full-reuse";
    case AlgorithmId::FullOrth: return "full-orth";
  }
  return "unknown";
}

inline AlgorithmId parse_algorithm(std::string_view name) {
  for (AlgorithmId id : kAllAlgorithms)
    if (algorithm_name(id) == name) return id;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

/// Algorithms whose N is fixed by definition ignore the N policy.
inline bool has_intrinsic_n(AlgorithmId id) { return id == AlgorithmId::FullReuse || id == AlgorithmId::FullOrth; }

inline bool is_exact(AlgorithmId id) { return id == AlgorithmId::JointExact || id == AlgorithmId::FixedPairingExact; }

struct NPolicy {
  enum class Kind { Fixed, ExhaustiveBest, IntraAn };
  Kind kind = Kind::Fixed;
  std::size_t n = 1;                  // Fixed
  std::optional<std::size_t> n_max;   // ExhaustiveBest: N in [1, n_max], default K

  static NPolicy fixed(std::size_t n) { return {Kind::Fixed, n, std::nullopt}; }
  static NPolicy best(std::optional<std::size_t> n_max = std::nullopt) { return {Kind::ExhaustiveBest, 1, n_max}; }
  static NPolicy intra_an() { return {Kind::IntraAn, 1, std::nullopt}; }
};

/// "3", "fixed:3", "best", "best:4", "intra-an".
inline NPolicy parse_n_policy(std::string_view text) {
  auto number = [&](std::string_view s) {
    std::size_t pos = 0;
    const std::string str(s);
    unsigned long long v = 0;
    try {
      v = std::stoull(str, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    const bool digits = !str.empty() && std::all_of(str.begin(), str.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (!digits || pos != str.size() || v < 1) throw std::invalid_argument("bad N in policy '" + std::string(text) + "'");
    return static_cast<std::size_t>(v);
  };
  if (text == "intra-an") return NPolicy::intra_an();
  if (text == "best") return NPolicy::best();
  if (text.starts_with("best:")) return NPolicy::best(number(text.substr(5)));
  if (text.starts_with("fixed:")) return NPolicy::fixed(number(text.substr(6)));
  return NPolicy::fixed(number(text));
}

inline std::string format_n_policy(const NPolicy& p) {
  switch (p.kind) {
    case NPolicy::Kind::Fixed: return "fixed:" + std::to_string(p.n);
    case NPolicy::Kind::ExhaustiveBest: return p.n_max ? "best:" + std::to_string(*p.n_max) : "best";
    case NPolicy::Kind::IntraAn: return "intra-an";
  }
  return "";
}

struct ScenarioSpec {
  std::size_t m_count = 10;
  std::size_t k_count = 10;
  NPolicy n_policy;
  std::vector<AlgorithmId> algorithms{AlgorithmId::PowerAwareApprox, AlgorithmId::FullOrth};
  std::size_t realizations = 1;
  std::uint64_t base_seed = 0;
  SystemConfig config;
  std::size_t workers = 0;  // 0: hardware concurrency
  ExactOptions exact;       // p_max is taken from config

  void validate() const {
    if (m_count < 1 || k_count < 1) throw std::invalid_argument("scenario: AN and UE counts must be >= 1");
    if (m_count < k_count) throw std::invalid_argument("scenario: dense deployments need at least as many ANs as UEs");
    if (realizations < 1) throw std::invalid_argument("scenario: realizations must be >= 1");
    if (algorithms.empty()) throw std::invalid_argument("scenario: no algorithms requested");
    if (n_policy.kind == NPolicy::Kind::Fixed && (n_policy.n < 1 || n_policy.n > k_count))
      throw std::invalid_argument("scenario: fixed N must lie in [1, K]");
    if (n_policy.n_max && *n_policy.n_max < 1) throw std::invalid_argument("scenario: n_max must be >= 1");
    config.validate();
  }
};

inline void to_json(json& j, const ScenarioSpec& s) {
  std::vector<std::string> algs;
  for (AlgorithmId a : s.algorithms) algs.emplace_back(algorithm_name(a));
  j = {{"m_count", s.m_count},         {"k_count", s.k_count},     {"n_policy", format_n_policy(s.n_policy)},
       {"algorithms", algs},           {"realizations", s.realizations}, {"base_seed", s.base_seed},
       {"config", s.config},           {"workers", s.workers}};
}

/// n_policy may be a string ("best:4") or an integer (fixed N).
inline void from_json(const json& j, ScenarioSpec& s) {
  ScenarioSpec out;
  out.m_count = j.at("m_count").get<std::size_t>();
  out.k_count = j.at("k_count").get<std::size_t>();
  if (j.contains("n_policy")) {
    const json& p = j.at("n_policy");
    out.n_policy = p.is_number_unsigned() ? NPolicy::fixed(p.get<std::size_t>()) : parse_n_policy(p.get<std::string>());
  }
  if (j.contains("algorithms")) {
    out.algorithms.clear();
    for (const auto& a : j.at("algorithms")) out.algorithms.push_back(parse_algorithm(a.get<std::string>()));
  }
  out.realizations = j.value("realizations", out.realizations);
  out.base_seed = j.value("base_seed", out.base_seed);
  out.workers = j.value("workers", out.workers);
  if (j.contains("config")) out.config = j.at("config").get<SystemConfig>();
  out.validate();
  s = std::move(out);
}

struct RunRecord {
  std::size_t realization = 0;
  std::uint64_t seed = 0;
  AlgorithmId algorithm = AlgorithmId::FullOrth;
  std::size_t n = 1;
  double theta = 0.0;        // 0 when the algorithm found no valid assignment
  double common_rate = 0.0;  // (1/N) log2(1 + theta)
  double sum_rate = 0.0;     // K * common_rate
  double wall_ms = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double median = 0.0;
  double p5 = 0.0;
};

struct AlgorithmSummary {
  AlgorithmId algorithm = AlgorithmId::FullOrth;
  std::size_t runs = 0;
  std::size_t infeasible = 0;
  Aggregate common_rate;
  Aggregate sum_rate;
  double mean_n = 0.0;
};

struct AlgorithmError {
  AlgorithmId algorithm = AlgorithmId::FullOrth;
  std::string message;
};

struct ScenarioResult {
  std::vector<RunRecord> records;
  std::vector<AlgorithmSummary> summary;
  std::vector<AlgorithmError> errors;
};

/// Largest number of UEs sharing one AN, at least 1.
inline std::size_t dynamic_n_intra_an(const NetworkInstance& instance, std::span<const std::size_t> pairing) {
  if (pairing.size() != instance.ue_count()) throw std::invalid_argument("dynamic_n_intra_an: pairing must cover every UE");
  std::vector<std::size_t> load(instance.an_count(), 0);
  std::size_t n = 1;
  for (std::size_t an : pairing) {
    if (an >= instance.an_count()) throw std::invalid_argument("dynamic_n_intra_an: unknown AN in pairing");
    n = std::max(n, ++load[an]);
  }
  return n;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Uniform random partition labels. Each UE, in index order, draws among the
/// partitions that do not yet hold a UE of its AN, or among all partitions
/// when every one does.
inline std::vector<std::size_t> random_partition(std::span<const std::size_t> pairing, std::size_t n_partitions,
                                                 std::uint64_t seed) {
  if (n_partitions < 1) throw std::invalid_argument("random_partition: N must be >= 1");
  std::mt19937_64 rng(splitmix64(seed));
  std::map<std::size_t, std::vector<char>> an_used;
  std::vector<std::size_t> label(pairing.size());
  for (std::size_t k = 0; k < pairing.size(); ++k) {
    auto& used = an_used.try_emplace(pairing[k], n_partitions, 0).first->second;
    std::vector<std::size_t> allowed;
    for (std::size_t n = 0; n < n_partitions; ++n)
      if (!used[n]) allowed.push_back(n);
    if (allowed.empty()) {
      allowed.resize(n_partitions);
      std::iota(allowed.begin(), allowed.end(), std::size_t{0});
    }
    label[k] = allowed[rng() % allowed.size()];
    used[label[k]] = 1;
  }
  return label;
}

/// Per-realization knobs shared by every algorithm.
struct RunContext {
  double p_max = 1.0;
  std::uint64_t seed = 0;  // random-partition stream
  ExactOptions exact;
  PerronBoundParams bounds;
};

/// One algorithm at one N. nullopt when it finds no valid assignment
/// (pairing contention, same-AN clash, full reuse with a shared closest AN).
inline std::optional<CoordinationSolution> run_algorithm(const NetworkInstance& instance, AlgorithmId id,
                                                         std::size_t n_partitions, const RunContext& ctx) {
  ExactOptions exact = ctx.exact;
  exact.p_max = ctx.p_max;
  try {
    switch (id) {
      case AlgorithmId::JointExact:
        return solve_joint_ppp(instance, n_partitions, exact);
      case AlgorithmId::FixedPairingExact:
        return solve_fixed_pairing(instance, pair_best_gain(instance), n_partitions, exact);
      case AlgorithmId::PowerAwareExact:
      case AlgorithmId::PowerAwareApprox: {
        GreedyConfig cfg;
        cfg.rate_mode = id == AlgorithmId::PowerAwareExact ? RateMode::Exact : RateMode::Approx;
        cfg.bound_params = ctx.bounds;
        cfg.p_max = ctx.p_max;
        return evaluate_assignment(instance, power_aware_partition(instance, n_partitions, cfg), ctx.p_max);
      }
      case AlgorithmId::PowerUnaware: {
        const auto pairing = pair_best_gain(instance);
        return evaluate_assignment(instance, power_unaware_assignment(instance, pairing, n_partitions), ctx.p_max);
      }
      case AlgorithmId::RandomPartition: {
        const auto pairing = pair_best_gain(instance);
        Assignment a{pairing, random_partition(pairing, n_partitions, ctx.seed ^ (n_partitions * 0x100000001B3ULL)),
                     n_partitions};
        return evaluate_assignment(instance, a, ctx.p_max);
      }
      case AlgorithmId::FullReuse:
        return baseline_full_spatial_reuse(instance, ctx.p_max);
      case AlgorithmId::FullOrth:
        return baseline_full_orthogonalization(instance, ctx.p_max);
    }
  } catch (const InfeasibleError&) {
    return std::nullopt;
  } catch (const ConstraintViolation&) {
    return std::nullopt;
  }
  return std::nullopt;
}

struct BestN {
  std::size_t n = 1;
  std::optional<CoordinationSolution> solution;
};

/// Runs solve(N) for N = 1..n_max and keeps the highest common rate; ties go
/// to the smaller N. A nullopt result counts as rate 0.
inline BestN exhaustive_best_n(std::size_t n_max,
                               const std::function<std::optional<CoordinationSolution>(std::size_t)>& solve) {
  if (n_max < 1) throw std::invalid_argument("exhaustive_best_n: n_max must be >= 1");
  BestN best;
  double best_rate = -1.0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    auto s = solve(n);
    const double rate = s ? s->common_rate : 0.0;
    if (rate > best_rate) {
      best_rate = rate;
      best = {n, std::move(s)};
    }
  }
  return best;
}

inline BestN exhaustive_best_n(const NetworkInstance& instance, AlgorithmId id, std::size_t n_max,
                               const RunContext& ctx = {}) {
  return exhaustive_best_n(std::min(n_max, instance.ue_count()),
                           [&](std::size_t n) { return run_algorithm(instance, id, n, ctx); });
}

inline RunRecord make_record(std::size_t realization, std::uint64_t seed, AlgorithmId id, std::size_t k_count,
                             std::size_t n, const std::optional<CoordinationSolution>& s, double wall_ms) {
  RunRecord r{realization, seed, id, n, 0.0, 0.0, 0.0, wall_ms};
  if (s) {
    r.n = s->assignment.n_partitions;
    r.theta = s->common_sinr;
    r.common_rate = s->common_rate;
    r.sum_rate = static_cast<double>(k_count) * s->common_rate;
  }
  return r;
}

/// Every requested algorithm on one realization.
inline std::vector<RunRecord> run_realization(const ScenarioSpec& spec, std::size_t index,
                                              const std::vector<AlgorithmId>& algorithms) {
  const std::uint64_t seed = spec.base_seed + index;
  SystemConfig config = spec.config;
  config.rng_seed = seed;
  const NetworkInstance instance = generate_instance(spec.m_count, spec.k_count, config);
  RunContext ctx{config.p_max, seed, spec.exact, {}};
  const std::size_t k = instance.ue_count();
  std::vector<RunRecord> out;
  for (AlgorithmId id : algorithms) {
    const auto start = std::chrono::steady_clock::now();
    std::size_t n = 1;
    std::optional<CoordinationSolution> sol;
    if (has_intrinsic_n(id)) {
      n = id == AlgorithmId::FullOrth ? k : 1;
      sol = run_algorithm(instance, id, n, ctx);
    } else {
      switch (spec.n_policy.kind) {
        case NPolicy::Kind::Fixed:
          n = spec.n_policy.n;
          sol = run_algorithm(instance, id, n, ctx);
          break;
        case NPolicy::Kind::IntraAn:
          n = dynamic_n_intra_an(instance, pair_best_gain(instance));
          sol = run_algorithm(instance, id, n, ctx);
          break;
        case NPolicy::Kind::ExhaustiveBest: {
          BestN b = exhaustive_best_n(instance, id, spec.n_policy.n_max.value_or(k), ctx);
          n = b.n;
          sol = std::move(b.solution);
          break;
        }
      }
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    out.push_back(make_record(index, seed, id, k, n, sol, ms));
  }
  return out;
}

/// Linear interpolation between order statistics at position q (n - 1).
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  a.median = quantile(values, 0.5);
  a.p5 = quantile(values, 0.05);
  return a;
}

/// Per-algorithm aggregates in first-appearance order of the algorithms.
inline std::vector<AlgorithmSummary> summarize(const std::vector<RunRecord>& records) {
  std::vector<AlgorithmId> order;
  for (const auto& r : records)
    if (std::find(order.begin(), order.end(), r.algorithm) == order.end()) order.push_back(r.algorithm);
  std::vector<AlgorithmSummary> out;
  for (AlgorithmId id : order) {
    std::vector<double> common, sum;
    AlgorithmSummary s;
    s.algorithm = id;
    double n_total = 0.0;
    for (const auto& r : records) {
      if (r.algorithm != id) continue;
      common.push_back(r.common_rate);
      sum.push_back(r.sum_rate);
      n_total += static_cast<double>(r.n);
      if (r.theta == 0.0) ++s.infeasible;
    }
    s.runs = common.size();
    s.common_rate = aggregate(common);
    s.sum_rate = aggregate(sum);
    s.mean_n = n_total / static_cast<double>(s.runs);
    out.push_back(s);
  }
  return out;
}

/// Realizations run on up to spec.workers threads; records come back sorted
/// by (realization, algorithm). Exact algorithms whose size cap the scenario
/// exceeds are reported in errors and skipped; the rest still run.
inline ScenarioResult run_scenario(const ScenarioSpec& spec) {
  spec.validate();
  ScenarioResult result;
  std::vector<AlgorithmId> runnable;
  for (AlgorithmId id : spec.algorithms) {
    if (std::find(runnable.begin(), runnable.end(), id) != runnable.end()) continue;
    if (is_exact(id)) {
      const std::size_t cap = id == AlgorithmId::JointExact ? spec.exact.free_pairing_cap : spec.exact.fixed_pairing_cap;
      if (spec.k_count > cap) {
        result.errors.push_back({id, std::string(algorithm_name(id)) + ": K = " + std::to_string(spec.k_count) +
                                         " exceeds the exact solver cap of " + std::to_string(cap)});
        continue;
      }
    }
    runnable.push_back(id);
  }

  std::vector<std::vector<RunRecord>> per_realization(spec.realizations);
  if (!runnable.empty()) {
    std::size_t workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, spec.realizations);
    std::size_t next = 0;
    std::mutex mu;
    std::exception_ptr failure;
    auto work = [&] {
      for (;;) {
        std::size_t index;
        {
          std::lock_guard lock(mu);
          if (failure || next >= spec.realizations) return;
          index = next++;
        }
        try {
          per_realization[index] = run_realization(spec, index, runnable);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    if (workers <= 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
  }
  for (auto& recs : per_realization)
    for (auto& r : recs) result.records.push_back(r);
  std::stable_sort(result.records.begin(), result.records.end(), [](const RunRecord& a, const RunRecord& b) {
    if (a.realization != b.realization) return a.realization < b.realization;
    return static_cast<int>(a.algorithm) < static_cast<int>(b.algorithm);
  });
  result.summary = summarize(result.records);
  return result;
}

inline constexpr std::string_view kCsvHeader =
    "realization,seed,algorithm,n,theta,common_rate_bps_hz,sum_rate_bps_hz,wall_ms";

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// wall_ms is written as 0 unless include_timing is set, so that repeated
/// runs produce identical files.
inline void write_csv(std::ostream& out, const std::vector<RunRecord>& records, bool include_timing = false) {
  out << kCsvHeader << '\n';
  for (const auto& r : records)
    out << r.realization << ',' << r.seed << ',' << algorithm_name(r.algorithm) << ',' << r.n << ','
        << format_double(r.theta) << ',' << format_double(r.common_rate) << ',' << format_double(r.sum_rate) << ','
        << format_double(include_timing ? r.wall_ms : 0.0) << '\n';
}

inline std::vector<RunRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw Error("CSV: missing or unexpected header");
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw Error("CSV: expected 8 fields in '" + line + "'");
    RunRecord r;
    r.realization = std::stoull(f[0]);
    r.seed = std::stoull(f[1]);
    r.algorithm = parse_algorithm(f[2]);
    r.n = std::stoull(f[3]);
    r.theta = std::stod(f[4]);
    r.common_rate = std::stod(f[5]);
    r.sum_rate = std::stod(f[6]);
    r.wall_ms = std::stod(f[7]);
    out.push_back(r);
  }
  return out;
}

inline json aggregate_json(const Aggregate& a) { return {{"mean", a.mean}, {"median", a.median}, {"p5", a.p5}}; }

inline json summary_json(const std::vector<AlgorithmSummary>& summary, const std::vector<AlgorithmError>& errors = {}) {
  json algs = json::object();
  for (const auto& s : summary)
    algs[std::string(algorithm_name(s.algorithm))] = {{"runs", s.runs},
                                                      {"infeasible", s.infeasible},
                                                      {"mean_n", s.mean_n},
                                                      {"common_rate_bps_hz", aggregate_json(s.common_rate)},
                                                      {"sum_rate_bps_hz", aggregate_json(s.sum_rate)}};
  json errs = json::array();
  for (const auto& e : errors) errs.push_back({{"algorithm", algorithm_name(e.algorithm)}, {"message", e.message}});
  return {{"algorithms", algs}, {"errors", errs}};
}

/// Writes the CSV to csv_path and the aggregate summary to json_path.
inline void emit_results(const ScenarioResult& result, const std::string& csv_path, const std::string& json_path,
                         bool include_timing = false) {
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw Error("cannot open " + csv_path + " for writing");
    write_csv(out, result.records, include_timing);
    if (!out) throw Error("write failed: " + csv_path);
  }
  write_json_file(json_path, summary_json(summarize(result.records), result.errors));
}

}  // namespace udn
