#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "udn/errors.hpp"
#include "udn/network_model.hpp"

namespace udn {

/// Joint pairing + partitioning decision. Sparse form of the binary
/// rho[k][m][n] tensor: rho = 1 iff serving_an[k] == m and partition_of[k] == n.
struct Assignment {
  std::vector<std::size_t> serving_an;    // per UE
  std::vector<std::size_t> partition_of;  // per UE, in [0, n_partitions)
  std::size_t n_partitions = 1;

  std::size_t ue_count() const { return serving_an.size(); }

  /// UEs of one partition in ascending identifier order.
  std::vector<std::size_t> members(std::size_t partition) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < partition_of.size(); ++k)
      if (partition_of[k] == partition) out.push_back(k);
    return out;
  }

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct SolverStats {
  std::uint64_t nodes_explored = 0;
  std::size_t bisection_iterations = 0;
  double wall_ms = 0.0;
  double bracket_low = 0.0;   // final bisection bracket
  double bracket_high = 0.0;
};

struct CoordinationSolution {
  Assignment assignment;
  std::vector<double> powers;        // per UE, watts
  double common_sinr = 0.0;          // theta = min over partitions of the partition optimum
  double common_rate = 0.0;          // (1/N) log2(1 + theta), bps/Hz
  std::vector<double> per_ue_sinr;   // per UE, its partition's optimal common SINR
  std::vector<double> per_ue_rate;   // (1/N) log2(1 + per_ue_sinr)
  SolverStats stats;
};

/// Throws ConstraintViolation naming the violated clause.
inline void validate_assignment(const NetworkInstance& instance, const Assignment& a) {
  const std::size_t k_count = instance.ue_count();
  const std::size_t m_count = instance.an_count();
  if (a.n_partitions < 1) throw ConstraintViolation("assignment: number of partitions must be >= 1");
  if (a.serving_an.size() != k_count)
    throw ConstraintViolation("assignment: each UE must be served by exactly one AN (serving_an size " +
                              std::to_string(a.serving_an.size()) + " != K " + std::to_string(k_count) + ")");
  if (a.partition_of.size() != k_count)
    throw ConstraintViolation("assignment: each UE must be assigned to a single partition (partition_of size " +
                              std::to_string(a.partition_of.size()) + " != K " + std::to_string(k_count) + ")");
  std::vector<int> used(m_count * a.n_partitions, -1);
  for (std::size_t k = 0; k < k_count; ++k) {
    if (a.serving_an[k] >= m_count)
      throw ConstraintViolation("assignment: UE " + std::to_string(k) + " served by unknown AN " +
                                std::to_string(a.serving_an[k]));
    if (a.partition_of[k] >= a.n_partitions)
      throw ConstraintViolation("assignment: UE " + std::to_string(k) +
                                " must be assigned to a single partition in [0, N)");
    int& slot = used[a.partition_of[k] * m_count + a.serving_an[k]];
    if (slot >= 0)
      throw ConstraintViolation("assignment: each AN serves at most one UE per partition (AN " +
                                std::to_string(a.serving_an[k]) + " serves UEs " + std::to_string(slot) + " and " +
                                std::to_string(k) + " in partition " + std::to_string(a.partition_of[k]) + ")");
    slot = static_cast<int>(k);
  }
}

}  // namespace udn
