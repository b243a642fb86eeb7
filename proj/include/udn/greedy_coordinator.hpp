#pragma once

// Suboptimal coordination: best-gain pairing, power-aware greedy partitioning
// with swap refinement, power-unaware interference-weight partitioning, and
// the full-reuse / full-orthogonalization baselines.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "udn/assignment.hpp"
#include "udn/errors.hpp"
#include "udn/matrix.hpp"
#include "udn/network_model.hpp"
#include "udn/power_control.hpp"

namespace udn {

inline constexpr std::size_t kNoAn = std::numeric_limits<std::size_t>::max();

enum class RateMode { Exact, Approx };

struct GreedyConfig {
  RateMode rate_mode = RateMode::Exact;
  bool enable_refinement = true;
  PerronBoundParams bound_params;
  double p_max = 1.0;
};

/// UE -> argmax-gain AN for the UEs in ue_subset (kNoAn for the rest).
/// With exclusive set, UEs are served in descending order of their best gain
/// and each takes its best AN not already taken.
inline std::vector<std::size_t> pair_best_gain(const NetworkInstance& instance, std::span<const std::size_t> ue_subset,
                                               bool exclusive = false) {
  const std::size_t m_count = instance.an_count();
  if (exclusive && ue_subset.size() > m_count)
    throw InfeasibleError("pair_best_gain: " + std::to_string(ue_subset.size()) + " UEs cannot hold exclusive ANs among " +
                          std::to_string(m_count));
  auto best_an = [&](std::size_t k, const std::vector<char>* taken) {
    std::size_t best = kNoAn;
    for (std::size_t m = 0; m < m_count; ++m) {
      if (taken && (*taken)[m]) continue;
      if (best == kNoAn || instance.gain(k, m) > instance.gain(k, best)) best = m;
    }
    return best;
  };
  std::vector<std::size_t> pairing(instance.ue_count(), kNoAn);
  if (!exclusive) {
    for (std::size_t k : ue_subset) pairing.at(k) = best_an(k, nullptr);
    return pairing;
  }
  std::vector<std::size_t> order(ue_subset.begin(), ue_subset.end());
  std::vector<double> best_gain(instance.ue_count(), 0.0);
  for (std::size_t k : order) best_gain.at(k) = instance.gain(k, best_an(k, nullptr));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return best_gain[a] > best_gain[b]; });
  std::vector<char> taken(m_count, 0);
  for (std::size_t k : order) {
    const std::size_t m = best_an(k, &taken);
    pairing[k] = m;
    taken[m] = 1;
  }
  return pairing;
}

/// Every UE on its best-gain (equivalently closest) AN.
inline std::vector<std::size_t> pair_best_gain(const NetworkInstance& instance) {
  std::vector<std::size_t> all(instance.ue_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return pair_best_gain(instance, all, false);
}

namespace detail {

/// Growing partitions with per-partition AN exclusivity.
class PartitionState {
 public:
  PartitionState(const NetworkInstance& instance, std::size_t n_partitions, const GreedyConfig& config)
      : inst_(instance),
        config_(config),
        n_(n_partitions),
        members_(n_partitions),
        serving_(instance.ue_count(), kNoAn),
        part_(instance.ue_count(), kNoAn),
        rate_(n_partitions, std::numeric_limits<double>::infinity()) {}

  double rate_of(const std::vector<std::size_t>& ues, const std::vector<std::size_t>& serving) const {
    if (ues.empty()) return std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < ues.size(); ++a)
      for (std::size_t b = 0; b < a; ++b)
        if (serving[ues[a]] == serving[ues[b]]) return -std::numeric_limits<double>::infinity();
    const PartitionGroup g = build_partition_group(inst_, serving, ues);
    const double sinr = config_.rate_mode == RateMode::Exact ? optimal_common_sinr(g, config_.p_max)
                                                             : approx_common_sinr(g, config_.p_max, config_.bound_params);
    return common_rate(std::max(sinr, 0.0), n_);
  }

  bool an_free(std::size_t partition, std::size_t an) const {
    return std::none_of(members_[partition].begin(), members_[partition].end(),
                        [&](std::size_t k) { return serving_[k] == an; });
  }

  std::size_t best_free_an(std::size_t partition, std::size_t ue) const {
    std::size_t best = kNoAn;
    for (std::size_t m = 0; m < inst_.an_count(); ++m)
      if (an_free(partition, m) && (best == kNoAn || inst_.gain(ue, m) > inst_.gain(ue, best))) best = m;
    return best;
  }

  void place(std::size_t ue, std::size_t an, std::size_t partition) {
    serving_[ue] = an;
    part_[ue] = partition;
    members_[partition].push_back(ue);
    rate_[partition] = rate_of(members_[partition], serving_);
  }

  /// Rate of a partition if ue joins it on an (without committing).
  double rate_with(std::size_t partition, std::size_t ue, std::size_t an) const {
    std::vector<std::size_t> ues = members_[partition];
    ues.push_back(ue);
    std::vector<std::size_t> serving = serving_;
    serving[ue] = an;
    return rate_of(ues, serving);
  }

  void refine() {
    constexpr double kMinGain = 1e-12;
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t n = 0; n < n_; ++n)
        for (std::size_t q = n + 1; q < n_; ++q)
          for (std::size_t a = 0; a < members_[n].size(); ++a)
            for (std::size_t b = 0; b < members_[q].size(); ++b) improved |= try_swap(n, a, q, b, kMinGain);
    }
  }

  Assignment assignment() const { return Assignment{serving_, part_, n_}; }
  const std::vector<double>& rates() const { return rate_; }
  const std::vector<std::vector<std::size_t>>& members() const { return members_; }

 private:
  // Best-gain AN for ue among those not used by the given members.
  std::size_t best_an_excluding(const std::vector<std::size_t>& others, std::size_t ue) const {
    std::size_t best = kNoAn;
    for (std::size_t m = 0; m < inst_.an_count(); ++m) {
      const bool taken = std::any_of(others.begin(), others.end(), [&](std::size_t k) { return serving_[k] == m; });
      if (!taken && (best == kNoAn || inst_.gain(ue, m) > inst_.gain(ue, best))) best = m;
    }
    return best;
  }

  // Exchanges members_[n][a] and members_[q][b]; each moved UE is re-paired
  // to its best free AN in the partition it joins. Accepted when the two
  // partitions' summed rate strictly improves and neither falls below the
  // current network-wide minimum.
  bool try_swap(std::size_t n, std::size_t a, std::size_t q, std::size_t b, double min_gain) {
    const std::size_t ka = members_[n][a], kb = members_[q][b];
    std::vector<std::size_t> ln = members_[n], lq = members_[q];
    ln.erase(ln.begin() + static_cast<std::ptrdiff_t>(a));
    lq.erase(lq.begin() + static_cast<std::ptrdiff_t>(b));
    const std::size_t ma = best_an_excluding(lq, ka);
    const std::size_t mb = best_an_excluding(ln, kb);
    if (ma == kNoAn || mb == kNoAn) return false;
    std::vector<std::size_t> serving = serving_;
    serving[ka] = ma;
    serving[kb] = mb;
    ln.push_back(kb);
    lq.push_back(ka);
    const double rn = rate_of(ln, serving);
    const double rq = rate_of(lq, serving);
    if (!std::isfinite(rn) || !std::isfinite(rq)) return false;
    const double before = rate_[n] + rate_[q];
    const double after = rn + rq;
    if (!(after - before > min_gain * std::max(1.0, std::abs(before)))) return false;
    const double floor = *std::min_element(rate_.begin(), rate_.end());
    if (std::min(rn, rq) < floor) return false;
    std::sort(ln.begin(), ln.end());
    std::sort(lq.begin(), lq.end());
    serving_ = std::move(serving);
    part_[ka] = q;
    part_[kb] = n;
    members_[n] = std::move(ln);
    members_[q] = std::move(lq);
    rate_[n] = rn;
    rate_[q] = rq;
    return true;
  }

  const NetworkInstance& inst_;
  GreedyConfig config_;
  std::size_t n_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::size_t> serving_;
  std::vector<std::size_t> part_;
  std::vector<double> rate_;
};

}  // namespace detail

/// Greedy power-aware partitioning. Seeds each partition with the strongest
/// remaining (UE, AN) link, then repeatedly lets the partition with the
/// highest current rate take the unassigned UE that leaves it the highest
/// rate (the UE joins on its best free AN there). A partition that cannot
/// take any UE (AN clash on every candidate) yields to the next best one.
inline Assignment power_aware_partition(const NetworkInstance& instance, std::size_t n_partitions,
                                        const GreedyConfig& config = {}) {
  const std::size_t k_count = instance.ue_count();
  const std::size_t m_count = instance.an_count();
  if (n_partitions < 1) throw std::invalid_argument("power_aware_partition: N must be >= 1");
  if (n_partitions > k_count) throw std::invalid_argument("power_aware_partition: N must not exceed K");
  detail::PartitionState state(instance, n_partitions, config);
  std::vector<char> pending(k_count, 1);

  for (std::size_t n = 0; n < n_partitions; ++n) {
    std::size_t bk = kNoAn, bm = kNoAn;
    for (std::size_t k = 0; k < k_count; ++k) {
      if (!pending[k]) continue;
      for (std::size_t m = 0; m < m_count; ++m)
        if (bk == kNoAn || instance.gain(k, m) > instance.gain(bk, bm)) {
          bk = k;
          bm = m;
        }
    }
    state.place(bk, bm, n);
    pending[bk] = 0;
  }

  for (std::size_t step = n_partitions; step < k_count; ++step) {
    std::vector<std::size_t> by_rate(n_partitions);
    std::iota(by_rate.begin(), by_rate.end(), std::size_t{0});
    std::stable_sort(by_rate.begin(), by_rate.end(),
                     [&](std::size_t a, std::size_t b) { return state.rates()[a] > state.rates()[b]; });
    bool placed = false;
    for (std::size_t n : by_rate) {
      std::size_t best_k = kNoAn, best_m = kNoAn;
      double best_rate = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < k_count; ++k) {
        if (!pending[k]) continue;
        const std::size_t m = state.best_free_an(n, k);
        if (m == kNoAn) continue;
        const double r = state.rate_with(n, k, m);
        if (r > best_rate) {
          best_rate = r;
          best_k = k;
          best_m = m;
        }
      }
      if (best_k == kNoAn) continue;
      state.place(best_k, best_m, n);
      pending[best_k] = 0;
      placed = true;
      break;
    }
    if (!placed) throw InfeasibleError("power_aware_partition: no partition has a free AN for the remaining UEs");
  }

  if (config.enable_refinement) state.refine();
  return state.assignment();
}

struct InterferenceWeights {
  Matrix weights;  // symmetric K x K, zero diagonal
  std::size_t dominant_count = 3;
  double same_an_penalty = 1e5;
};

inline constexpr double kDefaultSameAnPenalty = 1e5;

/// Estimated co-partition interference weights. For victim j, its dominant
/// interferers are the dominant_count UEs i (not sharing j's AN) with the
/// largest gain from j to i's serving AN m; for those e_ij = g[j][m]. UEs on
/// the same AN get the penalty, the rest 0, and E is symmetrized by max.
/// The penalty is raised above 10 K times the largest gain weight so that it
/// always dominates any sum of genuine weights.
inline InterferenceWeights interference_weight_matrix(const NetworkInstance& instance,
                                                      std::span<const std::size_t> pairing,
                                                      std::size_t dominant_count = 3,
                                                      double same_an_penalty = kDefaultSameAnPenalty) {
  const std::size_t k_count = instance.ue_count();
  if (pairing.size() != k_count) throw std::invalid_argument("interference_weight_matrix: pairing must cover every UE");
  if (dominant_count < 1) throw std::invalid_argument("interference_weight_matrix: dominant_count must be >= 1");
  for (std::size_t an : pairing)
    if (an >= instance.an_count()) throw std::invalid_argument("interference_weight_matrix: unknown AN in pairing");
  Matrix e(k_count, k_count);
  double max_weight = 0.0;
  for (std::size_t j = 0; j < k_count; ++j) {
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < k_count; ++i)
      if (i != j && pairing[i] != pairing[j]) cand.push_back(i);
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
      return instance.gain(j, pairing[a]) > instance.gain(j, pairing[b]);
    });
    cand.resize(std::min(cand.size(), dominant_count));
    for (std::size_t i : cand) {
      e(i, j) = instance.gain(j, pairing[i]);
      max_weight = std::max(max_weight, e(i, j));
    }
  }
  const double penalty = std::max(same_an_penalty, 10.0 * static_cast<double>(k_count) * max_weight);
  for (std::size_t i = 0; i < k_count; ++i)
    for (std::size_t j = 0; j < k_count; ++j)
      if (i != j && pairing[i] == pairing[j]) e(i, j) = penalty;
  for (std::size_t i = 0; i < k_count; ++i)
    for (std::size_t j = i + 1; j < k_count; ++j) e(i, j) = e(j, i) = std::max(e(i, j), e(j, i));
  return {std::move(e), dominant_count, penalty};
}

/// Greedy interference-minimizing partition labels. Each cycle takes the
/// unassigned UE with the largest incoming weight from the other unassigned
/// UEs (ties: lower index) and puts it in the partition whose weight sum
/// grows least (ties: fewer members, then lower index).
inline std::vector<std::size_t> power_unaware_partition(const InterferenceWeights& w, std::size_t n_partitions) {
  const Matrix& e = w.weights;
  const std::size_t k_count = e.rows();
  if (n_partitions < 1) throw std::invalid_argument("power_unaware_partition: N must be >= 1");
  if (n_partitions > k_count) throw std::invalid_argument("power_unaware_partition: N must not exceed K");
  std::vector<char> pending(k_count, 1);
  std::vector<std::vector<std::size_t>> parts(n_partitions);
  std::vector<std::size_t> label(k_count, 0);
  for (std::size_t cycle = 0; cycle < k_count; ++cycle) {
    std::size_t j = k_count;
    double j_key = -1.0;
    for (std::size_t c = 0; c < k_count; ++c) {
      if (!pending[c]) continue;
      double key = 0.0;
      for (std::size_t i = 0; i < k_count; ++i)
        if (pending[i] && i != c) key += e(i, c);
      if (key > j_key) {
        j = c;
        j_key = key;
      }
    }
    pending[j] = 0;
    std::size_t best = 0;
    double best_inc = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < n_partitions; ++n) {
      double inc = 0.0;
      for (std::size_t i : parts[n]) inc += e(i, j);
      if (inc < best_inc || (inc == best_inc && parts[n].size() < parts[best].size())) {
        best = n;
        best_inc = inc;
      }
    }
    parts[best].push_back(j);
    label[j] = best;
  }
  return label;
}

/// Sum of intra-partition weights over unordered UE pairs.
inline double intra_partition_weight(const InterferenceWeights& w, std::span<const std::size_t> partition_of) {
  double total = 0.0;
  for (std::size_t i = 0; i < partition_of.size(); ++i)
    for (std::size_t j = i + 1; j < partition_of.size(); ++j)
      if (partition_of[i] == partition_of[j]) total += w.weights(i, j);
  return total;
}

/// Pairing by best gain, partitioning by interference weights, then optimal
/// power per partition (applied by the caller through evaluate_assignment).
inline Assignment power_unaware_assignment(const NetworkInstance& instance, std::span<const std::size_t> pairing,
                                           std::size_t n_partitions, std::size_t dominant_count = 3) {
  const InterferenceWeights w = interference_weight_matrix(instance, pairing, dominant_count);
  return Assignment{std::vector<std::size_t>(pairing.begin(), pairing.end()), power_unaware_partition(w, n_partitions),
                    n_partitions};
}

/// N = 1, every UE on its closest AN, optimal power control.
inline CoordinationSolution baseline_full_spatial_reuse(const NetworkInstance& instance, double p_max) {
  const auto pairing = pair_best_gain(instance);
  std::vector<std::size_t> owner(instance.an_count(), kNoAn);
  for (std::size_t k = 0; k < pairing.size(); ++k) {
    if (owner[pairing[k]] != kNoAn)
      throw InfeasibleError("full spatial reuse: UEs " + std::to_string(owner[pairing[k]]) + " and " + std::to_string(k) +
                            " share closest AN " + std::to_string(pairing[k]));
    owner[pairing[k]] = k;
  }
  return evaluate_assignment(instance, Assignment{pairing, std::vector<std::size_t>(pairing.size(), 0), 1}, p_max);
}

/// N = K, every UE alone on its best AN at full power.
inline CoordinationSolution baseline_full_orthogonalization(const NetworkInstance& instance, double p_max) {
  const auto pairing = pair_best_gain(instance);
  std::vector<std::size_t> part(pairing.size());
  std::iota(part.begin(), part.end(), std::size_t{0});
  return evaluate_assignment(instance, Assignment{pairing, std::move(part), pairing.size()}, p_max);
}

}  // namespace udn
