#pragma once

// Exact joint pairing/partitioning/power optimization at desk scale.
//
// For a fixed assignment the continuous part of the feasibility problem is
// the per-partition power problem, so a target theta0 is reachable iff every
// partition admits powers in [0, p_max]^L with SINR >= theta0. That holds iff
// the minimal power vector p = theta0 (I - theta0 F)^-1 v exists, is positive
// and stays below p_max. The search enumerates assignments with that test,
// pruning partial partitions that already fail (adding a pair never helps),
// and a bisection over theta0 wraps it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "udn/assignment.hpp"
#include "udn/errors.hpp"
#include "udn/network_model.hpp"
#include "udn/power_control.hpp"

namespace udn {

struct ExactOptions {
  double p_max = 1.0;
  /// Absolute bisection tolerance. When unset, relative_epsilon times the
  /// common SINR of a simple valid reference assignment (a certified lower
  /// bound on the optimum) is used.
  std::optional<double> epsilon;
  double relative_epsilon = 1e-3;
  std::size_t free_pairing_cap = 8;
  std::size_t fixed_pairing_cap = 12;
  /// After bisection, search the final bracket for the best witness so the
  /// reported theta is the exact optimum rather than a point within epsilon.
  bool polish = true;
};

/// True iff some powers in [0, p_max]^L give every member SINR >= theta0.
inline bool partition_supports(const PartitionGroup& group, double theta0, double p_max) {
  const std::size_t n = group.size();
  if (n == 1) return p_max * group.direct_gains[0] >= theta0;
  Matrix sys = Matrix::identity(n) + group.cross * (-theta0);
  std::vector<double> rhs(group.inverse_gains);
  for (double& r : rhs) r *= theta0;
  const auto p = solve_linear(std::move(sys), std::move(rhs));
  if (!p) return false;
  return std::all_of(p->begin(), p->end(), [&](double x) { return x > 0.0 && x <= p_max; });
}

/// Ceiling on any common SINR: the worst UE's best interference-free link.
inline double interference_free_bound(const NetworkInstance& instance, double p_max,
                                      std::optional<std::span<const std::size_t>> pairing = std::nullopt) {
  double bound = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < instance.ue_count(); ++k) {
    double best = 0.0;
    if (pairing) {
      best = instance.gain(k, (*pairing)[k]);
    } else {
      for (std::size_t m = 0; m < instance.an_count(); ++m) best = std::max(best, instance.gain(k, m));
    }
    bound = std::min(bound, p_max * best);
  }
  return bound;
}

/// Number of halvings needed to shrink a bracket of the given width to eps.
inline std::size_t bisection_iterations(double width, double epsilon) {
  if (!(width > epsilon)) return 0;
  return static_cast<std::size_t>(std::ceil(std::log2(width / epsilon)));
}

namespace detail {

/// Depth-first search over assignments, UEs in a fixed order. Partitions are
/// unlabeled: a UE may join an opened partition or open the next one, so each
/// set partition is visited once.
class AssignmentSearch {
 public:
  AssignmentSearch(const NetworkInstance& instance, std::size_t n_partitions, double p_max,
                   std::optional<std::span<const std::size_t>> fixed_pairing)
      : inst_(instance), n_parts_(n_partitions), p_max_(p_max) {
    const std::size_t k_count = instance.ue_count();
    const std::size_t m_count = instance.an_count();
    if (fixed_pairing) pairing_.assign(fixed_pairing->begin(), fixed_pairing->end());
    // Hardest UEs (weakest best link) first so failures surface early.
    order_.resize(k_count);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    auto best = [&](std::size_t k) {
      if (!pairing_.empty()) return instance.gain(k, pairing_[k]);
      double b = 0.0;
      for (std::size_t m = 0; m < m_count; ++m) b = std::max(b, instance.gain(k, m));
      return b;
    };
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return best(a) < best(b); });
    an_order_.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      if (!pairing_.empty()) {
        an_order_[k] = {pairing_[k]};
        continue;
      }
      auto& ans = an_order_[k];
      ans.resize(m_count);
      std::iota(ans.begin(), ans.end(), std::size_t{0});
      std::stable_sort(ans.begin(), ans.end(),
                       [&](std::size_t a, std::size_t b) { return instance.gain(k, a) > instance.gain(k, b); });
    }
    cacheable_ = k_count <= 16 && m_count < 255;
  }

  /// First assignment meeting theta0, if any.
  std::optional<Assignment> find(double theta0) {
    reset(theta0);
    on_leaf_ = [](const Assignment&) { return true; };
    return run();
  }

  /// Best assignment (by exact partition optimum) among those meeting theta0.
  std::optional<CoordinationSolution> best(double theta0) {
    reset(theta0);
    std::optional<CoordinationSolution> incumbent;
    on_leaf_ = [&](const Assignment& a) {
      CoordinationSolution s = evaluate_assignment(inst_, a, p_max_);
      if (!incumbent || s.common_sinr > incumbent->common_sinr) {
        if (s.common_sinr > threshold_) {
          threshold_ = s.common_sinr;
          cache_.clear();
        }
        incumbent = std::move(s);
      }
      return false;
    };
    run();
    return incumbent;
  }

  std::uint64_t nodes() const { return nodes_; }

 private:
  struct Key {
    std::uint64_t lo = 0, hi = 0;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return std::hash<std::uint64_t>{}(k.lo * 0x9E3779B97F4A7C15ULL ^ k.hi); }
  };

  void reset(double theta0) {
    threshold_ = theta0;
    cache_.clear();
    const std::size_t k_count = inst_.ue_count();
    serving_.assign(k_count, 0);
    part_.assign(k_count, 0);
    members_.assign(n_parts_, {});
    an_used_.assign(n_parts_ * inst_.an_count(), 0);
    opened_ = 0;
  }

  std::optional<Assignment> run() {
    found_.reset();
    recurse(0);
    return found_;
  }

  bool supports(std::size_t partition) {
    const auto& mem = members_[partition];
    Key key;
    if (cacheable_) {
      for (std::size_t ue : mem) {
        const std::uint64_t code = static_cast<std::uint64_t>(serving_[ue] + 1) << (8 * (ue % 8));
        (ue < 8 ? key.lo : key.hi) |= code;
      }
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    const PartitionGroup g = build_partition_group(inst_, serving_, mem);
    const bool ok = partition_supports(g, threshold_, p_max_);
    if (cacheable_) cache_.emplace(key, ok);
    return ok;
  }

  // Returns true to stop the whole search.
  bool recurse(std::size_t depth) {
    ++nodes_;
    if (depth == order_.size()) {
      Assignment a{serving_, part_, n_parts_};
      if (on_leaf_(a)) {
        found_ = std::move(a);
        return true;
      }
      return false;
    }
    const std::size_t ue = order_[depth];
    const std::size_t m_count = inst_.an_count();
    const std::size_t limit = std::min(opened_ + 1, n_parts_);
    for (std::size_t p = 0; p < limit; ++p) {
      const bool opening = p == opened_;
      for (std::size_t an : an_order_[ue]) {
        if (p_max_ * inst_.gain(ue, an) < threshold_) {
          if (pairing_.empty()) break;  // ANs sorted by gain: the rest are weaker
          continue;
        }
        if (an_used_[p * m_count + an]) continue;
        serving_[ue] = an;
        part_[ue] = p;
        members_[p].push_back(ue);
        an_used_[p * m_count + an] = 1;
        if (opening) ++opened_;
        const bool ok = supports(p);
        bool stop = false;
        if (ok) stop = recurse(depth + 1);
        if (opening) --opened_;
        an_used_[p * m_count + an] = 0;
        members_[p].pop_back();
        if (stop) return true;
      }
    }
    return false;
  }

  const NetworkInstance& inst_;
  std::size_t n_parts_;
  double p_max_;
  std::vector<std::size_t> pairing_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::size_t>> an_order_;
  bool cacheable_ = false;

  double threshold_ = 0.0;
  std::vector<std::size_t> serving_, part_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<char> an_used_;
  std::size_t opened_ = 0;
  std::unordered_map<Key, bool, KeyHash> cache_;
  std::function<bool(const Assignment&)> on_leaf_;
  std::optional<Assignment> found_;
  std::uint64_t nodes_ = 0;
};

inline void check_capacity(const NetworkInstance& instance, std::size_t n_partitions, bool fixed, const ExactOptions& o) {
  if (n_partitions < 1) throw std::invalid_argument("exact solver: N must be >= 1");
  const std::size_t cap = fixed ? o.fixed_pairing_cap : o.free_pairing_cap;
  if (instance.ue_count() > cap)
    throw CapacityError(std::string("exact solver: K = ") + std::to_string(instance.ue_count()) + " exceeds the " +
                        (fixed ? "fixed" : "free") + "-pairing cap of " + std::to_string(cap));
}

inline void check_pairing(const NetworkInstance& instance, std::span<const std::size_t> pairing, std::size_t n_partitions) {
  if (pairing.size() != instance.ue_count()) throw std::invalid_argument("fixed pairing must map every UE");
  std::vector<std::size_t> load(instance.an_count(), 0);
  for (std::size_t k = 0; k < pairing.size(); ++k) {
    if (pairing[k] >= instance.an_count()) throw std::invalid_argument("fixed pairing references an unknown AN");
    if (++load[pairing[k]] > n_partitions)
      throw InfeasibleError("fixed pairing: AN " + std::to_string(pairing[k]) + " serves more UEs than the " +
                            std::to_string(n_partitions) + " available partitions");
  }
}

/// A valid assignment used to seed the bisection: UEs spread round-robin over
/// partitions with per-partition exclusive best-gain pairing, or, under a
/// fixed pairing, UEs of the same AN placed in distinct partitions.
inline Assignment reference_assignment(const NetworkInstance& instance, std::size_t n_partitions,
                                       std::optional<std::span<const std::size_t>> pairing) {
  const std::size_t k_count = instance.ue_count();
  const std::size_t m_count = instance.an_count();
  Assignment a{std::vector<std::size_t>(k_count), std::vector<std::size_t>(k_count), n_partitions};
  if (pairing) {
    std::vector<std::size_t> seen(m_count, 0);
    for (std::size_t k = 0; k < k_count; ++k) {
      a.serving_an[k] = (*pairing)[k];
      a.partition_of[k] = seen[(*pairing)[k]]++;
    }
    return a;
  }
  if (k_count > n_partitions * m_count)
    throw InfeasibleError("exact solver: K exceeds N * M, no valid assignment exists");
  std::vector<char> used(n_partitions * m_count, 0);
  for (std::size_t k = 0; k < k_count; ++k) {
    const std::size_t p = k % n_partitions;
    std::size_t best = m_count;
    for (std::size_t m = 0; m < m_count; ++m)
      if (!used[p * m_count + m] && (best == m_count || instance.gain(k, m) > instance.gain(k, best))) best = m;
    used[p * m_count + best] = 1;
    a.serving_an[k] = best;
    a.partition_of[k] = p;
  }
  return a;
}

inline CoordinationSolution bisect(const NetworkInstance& instance, std::size_t n_partitions,
                                   std::optional<std::span<const std::size_t>> pairing, const ExactOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  AssignmentSearch search(instance, n_partitions, opts.p_max, pairing);
  const Assignment ref = reference_assignment(instance, n_partitions, pairing);
  CoordinationSolution incumbent = evaluate_assignment(instance, ref, opts.p_max);

  const double epsilon = opts.epsilon.value_or(opts.relative_epsilon * incumbent.common_sinr);
  if (!(epsilon > 0.0)) throw std::invalid_argument("exact solver: epsilon must be positive");
  double lo = 0.0;
  double hi = interference_free_bound(instance, opts.p_max, pairing);
  const std::size_t iterations = bisection_iterations(hi - lo, epsilon);
  std::optional<Assignment> witness;
  for (std::size_t it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (auto w = search.find(mid)) {
      lo = mid;
      witness = std::move(w);
    } else {
      hi = mid;
    }
  }
  if (witness) {
    CoordinationSolution s = evaluate_assignment(instance, *witness, opts.p_max);
    if (s.common_sinr > incumbent.common_sinr) incumbent = std::move(s);
  }
  if (opts.polish) {
    if (auto best = search.best(std::max(lo, incumbent.common_sinr)))
      if (best->common_sinr > incumbent.common_sinr) incumbent = std::move(*best);
  }
  incumbent.stats.nodes_explored = search.nodes();
  incumbent.stats.bisection_iterations = iterations;
  incumbent.stats.bracket_low = lo;
  incumbent.stats.bracket_high = hi;
  incumbent.stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return incumbent;
}

}  // namespace detail

/// Witness assignment whose every partition can reach theta0, or nullopt.
inline std::optional<Assignment> assignment_feasible(const NetworkInstance& instance, double theta0,
                                                     std::size_t n_partitions,
                                                     std::optional<std::span<const std::size_t>> fixed_pairing = std::nullopt,
                                                     const ExactOptions& opts = {}, SolverStats* stats = nullptr) {
  if (!(theta0 > 0.0)) throw std::invalid_argument("assignment_feasible: theta0 must be positive");
  detail::check_capacity(instance, n_partitions, fixed_pairing.has_value(), opts);
  if (fixed_pairing) {
    try {
      detail::check_pairing(instance, *fixed_pairing, n_partitions);
    } catch (const InfeasibleError&) {
      return std::nullopt;
    }
  }
  detail::AssignmentSearch search(instance, n_partitions, opts.p_max, fixed_pairing);
  auto out = search.find(theta0);
  if (stats) stats->nodes_explored += search.nodes();
  return out;
}

inline CoordinationSolution solve_joint_ppp(const NetworkInstance& instance, std::size_t n_partitions,
                                            const ExactOptions& opts = {}) {
  detail::check_capacity(instance, n_partitions, false, opts);
  return detail::bisect(instance, n_partitions, std::nullopt, opts);
}

inline CoordinationSolution solve_fixed_pairing(const NetworkInstance& instance, std::span<const std::size_t> pairing,
                                                std::size_t n_partitions, const ExactOptions& opts = {}) {
  detail::check_capacity(instance, n_partitions, true, opts);
  detail::check_pairing(instance, pairing, n_partitions);
  return detail::bisect(instance, n_partitions, pairing, opts);
}

}  // namespace udn
