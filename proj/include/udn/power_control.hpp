#pragma once

// Per-partition max-min power coordination.
//
// A partition with L active AN-UE pairs is described by its link gains
// g~[i][j]: the noise-normalized gain between UE i and the serving AN of
// UE j (the direct link when i == j). With F[i][j] = g~[i][j] / g~[i][i]
// (zero diagonal) and v[i] = 1 / g~[i][i], the SINR of pair i under powers p
// is p_i / (v_i + sum_j F[i][j] p_j), and the largest common SINR reachable
// inside the power box [0, p_max]^L is
//
//     1 / gamma* = max_i rho(F + v e_i^T / p_max).
//
// rho() is the Perron root, computed by a shifted power iteration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "udn/assignment.hpp"
#include "udn/errors.hpp"
#include "udn/matrix.hpp"
#include "udn/network_model.hpp"

namespace udn {

struct PartitionGroup {
  std::vector<std::size_t> ues;  // ascending UE identifiers
  std::vector<std::size_t> ans;  // serving AN of each member
  std::vector<double> direct_gains;
  Matrix cross;                  // F
  std::vector<double> inverse_gains;  // v

  std::size_t size() const { return ues.size(); }

  /// Builds a group straight from an L x L link-gain matrix (members 0..L-1).
  static PartitionGroup from_link_gains(const Matrix& link_gains) {
    if (!link_gains.square() || link_gains.rows() == 0)
      throw std::invalid_argument("PartitionGroup: link gains must be a non-empty square matrix");
    const std::size_t n = link_gains.rows();
    PartitionGroup g;
    g.ues.resize(n);
    std::iota(g.ues.begin(), g.ues.end(), std::size_t{0});
    g.ans = g.ues;
    g.direct_gains.resize(n);
    g.inverse_gains.resize(n);
    g.cross = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const double gii = link_gains(i, i);
      if (!(gii > 0.0) || !std::isfinite(gii)) throw std::invalid_argument("PartitionGroup: direct gains must be positive");
      g.direct_gains[i] = gii;
      g.inverse_gains[i] = 1.0 / gii;
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double gij = link_gains(i, j);
        if (!(gij >= 0.0) || !std::isfinite(gij)) throw std::invalid_argument("PartitionGroup: cross gains must be non-negative");
        g.cross(i, j) = gij / gii;
      }
    }
    return g;
  }
};

struct PerronBoundParams {
  unsigned a = 1;
  unsigned b = 1;
  std::optional<unsigned> matrix_power_exponent;  // defaults to L - 1
};

struct PowerIterationOptions {
  std::size_t max_iterations = 100000;
  double ratio_tolerance = 1e-12;
  double residual_tolerance = 1e-10;
};

struct PerronPair {
  double value = 0.0;
  std::vector<double> vector;  // non-negative right eigenvector, max component 1
  std::size_t iterations = 0;
};

namespace detail {

inline void check_nonnegative_square(const Matrix& a) {
  if (!a.square() || a.rows() == 0) throw std::invalid_argument("perron_root: matrix must be square and non-empty");
  for (double x : a.data())
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("perron_root: entries must be finite and non-negative");
}

inline bool is_nilpotent(const Matrix& a) {
  const Matrix p = power(a, static_cast<unsigned>(a.rows()));
  return std::all_of(p.data().begin(), p.data().end(), [](double x) { return x == 0.0; });
}

/// Diagonal similarity D A D^-1 that equalizes off-diagonal row and column
/// sums. Returns the scaling d; the spectrum is unchanged.
inline std::vector<double> balance(Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<double> d(n, 1.0);
  for (int sweep = 0; sweep < 32; ++sweep) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        r += a(i, j);
        c += a(j, i);
      }
      if (r <= 0.0 || c <= 0.0) continue;
      const double f = std::sqrt(c / r);
      if (std::abs(f - 1.0) < 1e-3) continue;
      changed = true;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        a(i, j) *= f;
        a(j, i) /= f;
      }
      d[i] *= f;
    }
    if (!changed) break;
  }
  return d;
}

/// Strongly connected components of the directed graph a(i, j) > 0, each in
/// ascending order, via transitive closure (groups are small).
inline std::vector<std::vector<std::size_t>> strong_components(const Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<char> reach(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    reach[i * n + i] = 1;
    for (std::size_t j = 0; j < n; ++j)
      if (a(i, j) > 0.0) reach[i * n + j] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i * n + k])
        for (std::size_t j = 0; j < n; ++j)
          if (reach[k * n + j]) reach[i * n + j] = 1;
  std::vector<std::size_t> label(n, n);
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != n) continue;
    std::vector<std::size_t> comp;
    for (std::size_t j = i; j < n; ++j)
      if (reach[i * n + j] && reach[j * n + i]) {
        label[j] = comps.size();
        comp.push_back(j);
      }
    comps.push_back(std::move(comp));
  }
  return comps;
}

inline Matrix principal_submatrix(const Matrix& a, std::span<const std::size_t> idx) {
  Matrix s(idx.size(), idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c) s(r, c) = a(idx[r], idx[c]);
  return s;
}

/// Shift for power iteration on B + sI: strictly positive diagonal makes an
/// irreducible matrix primitive.
inline double iteration_shift(const Matrix& b) {
  const std::vector<double> rs = b.row_sums();
  const double lo = *std::min_element(rs.begin(), rs.end());
  const double hi = *std::max_element(rs.begin(), rs.end());
  return lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
}

inline void undo_balance(std::vector<double>& x, const std::vector<double>& scaling) {
  double vmax = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] /= scaling[i];
    vmax = std::max(vmax, x[i]);
  }
  for (double& xi : x) xi /= vmax;
}

}  // namespace detail

/// Perron root and right eigenvector of a non-negative square matrix.
/// Irreducible input: power iteration on the balanced, shifted matrix from
/// the all-ones vector until the Collatz-Wielandt bracket closes, which
/// certifies the root. Reducible input: the root is the largest root over
/// the strongly connected blocks, and the eigenvector is iterated until its
/// residual against that root is small. Throws ConvergenceError at the cap.
inline PerronPair perron_pair(const Matrix& matrix, const PowerIterationOptions& opts = {}) {
  detail::check_nonnegative_square(matrix);
  const std::size_t n = matrix.rows();
  if (n == 1) return {matrix(0, 0), {1.0}, 0};

  Matrix b = matrix;
  const std::vector<double> scaling = detail::balance(b);
  const auto comps = detail::strong_components(matrix);
  const double shift = detail::iteration_shift(b);
  if (shift == 0.0) return {0.0, std::vector<double>(n, 1.0), 0};

  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  auto step = [&] {
    std::vector<double> bx = b.apply(x);
    double sum_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      bx[i] += shift * x[i];
      sum_y += bx[i];
    }
    for (double& y : bx) y /= sum_y;
    x.swap(bx);
  };

  if (comps.size() > 1) {
    double value = 0.0;
    for (const auto& comp : comps) {
      const double v = comp.size() == 1 ? matrix(comp[0], comp[0])
                                        : perron_pair(detail::principal_submatrix(matrix, comp), opts).value;
      value = std::max(value, v);
    }
    if (value == 0.0) return {0.0, std::vector<double>(n, 1.0), 0};
    for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
      step();
      const std::vector<double> ax = b.apply(x);
      double res = 0.0, xmax = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        res = std::max(res, std::abs(ax[i] - value * x[i]));
        xmax = std::max(xmax, x[i]);
      }
      if (res <= opts.residual_tolerance * value * xmax) {
        detail::undo_balance(x, scaling);
        return {value, std::move(x), it};
      }
    }
    throw ConvergenceError("perron_root: eigenvector of a reducible matrix did not converge within " +
                           std::to_string(opts.max_iterations) + " iterations");
  }

  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    step();
    const std::vector<double> ax = b.apply(x);
    double cw_lo = std::numeric_limits<double>::infinity(), cw_hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ratio = ax[i] / x[i];
      cw_lo = std::min(cw_lo, ratio);
      cw_hi = std::max(cw_hi, ratio);
    }
    if (cw_hi - cw_lo <= opts.ratio_tolerance * cw_hi) {
      detail::undo_balance(x, scaling);
      return {0.5 * (cw_lo + cw_hi), std::move(x), it};
    }
  }
  throw ConvergenceError("perron_root: power iteration did not converge within " + std::to_string(opts.max_iterations) +
                         " iterations");
}

inline double perron_root(const Matrix& matrix, const PowerIterationOptions& opts = {}) {
  return perron_pair(matrix, opts).value;
}

/// Pairs of the given UEs under a UE -> AN pairing, in ascending UE order.
inline PartitionGroup build_partition_group(const NetworkInstance& instance, std::span<const std::size_t> pairing,
                                            std::span<const std::size_t> ue_subset) {
  if (pairing.size() != instance.ue_count())
    throw std::invalid_argument("build_partition_group: pairing must cover every UE");
  std::vector<std::size_t> ues(ue_subset.begin(), ue_subset.end());
  std::sort(ues.begin(), ues.end());
  if (ues.empty()) throw std::invalid_argument("build_partition_group: empty UE subset");
  if (std::adjacent_find(ues.begin(), ues.end()) != ues.end())
    throw std::invalid_argument("build_partition_group: duplicate UE in subset");
  const std::size_t n = ues.size();
  PartitionGroup g;
  g.ues = ues;
  g.ans.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (ues[i] >= instance.ue_count()) throw std::invalid_argument("build_partition_group: unknown UE");
    g.ans[i] = pairing[ues[i]];
    if (g.ans[i] >= instance.an_count()) throw std::invalid_argument("build_partition_group: unknown AN");
    for (std::size_t j = 0; j < i; ++j)
      if (g.ans[j] == g.ans[i])
        throw ConstraintViolation("build_partition_group: AN " + std::to_string(g.ans[i]) + " serves both UE " +
                                  std::to_string(ues[j]) + " and UE " + std::to_string(ues[i]) + " in one partition");
  }
  g.direct_gains.resize(n);
  g.inverse_gains.resize(n);
  g.cross = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double gii = instance.gain(ues[i], g.ans[i]);
    g.direct_gains[i] = gii;
    g.inverse_gains[i] = 1.0 / gii;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) g.cross(i, j) = instance.gain(ues[i], g.ans[j]) / gii;
  }
  return g;
}

/// F + (1/p_max) v e_col^T
inline Matrix perron_matrix(const PartitionGroup& group, double p_max, std::size_t col) {
  Matrix a = group.cross;
  for (std::size_t i = 0; i < group.size(); ++i) a(i, col) += group.inverse_gains[i] / p_max;
  return a;
}

/// SINR of every member under the given powers, by direct substitution.
inline std::vector<double> group_sinrs(const PartitionGroup& group, std::span<const double> powers) {
  const std::size_t n = group.size();
  if (powers.size() != n) throw std::invalid_argument("group_sinrs: power vector size mismatch");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double interference = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) interference += group.direct_gains[i] * group.cross(i, j) * powers[j];
    out[i] = powers[i] * group.direct_gains[i] / (1.0 + interference);
  }
  return out;
}

namespace detail {

/// Connected components of the undirected interference graph of F.
inline std::vector<std::vector<std::size_t>> interference_components(const Matrix& f) {
  const std::size_t n = f.rows();
  std::vector<std::size_t> label(n, n);
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] != n) continue;
    std::vector<std::size_t> comp{s};
    label[s] = comps.size();
    for (std::size_t head = 0; head < comp.size(); ++head) {
      const std::size_t u = comp[head];
      for (std::size_t w = 0; w < n; ++w)
        if (label[w] == n && (f(u, w) > 0.0 || f(w, u) > 0.0)) {
          label[w] = comps.size();
          comp.push_back(w);
        }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

inline PartitionGroup subgroup(const PartitionGroup& g, std::span<const std::size_t> idx) {
  PartitionGroup s;
  const std::size_t n = idx.size();
  s.cross = Matrix(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    s.ues.push_back(g.ues[idx[a]]);
    s.ans.push_back(g.ans[idx[a]]);
    s.direct_gains.push_back(g.direct_gains[idx[a]]);
    s.inverse_gains.push_back(g.inverse_gains[idx[a]]);
    for (std::size_t b = 0; b < n; ++b) s.cross(a, b) = g.cross(idx[a], idx[b]);
  }
  return s;
}

struct BlockOptimum {
  std::vector<std::size_t> members;
  double sinr = 0.0;          // 1 / max_i rho(F + v e_i^T / p_max)
  std::size_t binding = 0;    // argmax i, local index
  std::vector<double> eigenvector;
};

inline BlockOptimum solve_block(const PartitionGroup& block, double p_max) {
  BlockOptimum best;
  if (block.size() == 1) {
    best.sinr = p_max * block.direct_gains[0];
    best.eigenvector = {1.0};
    return best;
  }
  double worst = -1.0;
  for (std::size_t i = 0; i < block.size(); ++i) {
    PerronPair pp = perron_pair(perron_matrix(block, p_max, i));
    if (pp.value > worst) {
      worst = pp.value;
      best.binding = i;
      best.eigenvector = std::move(pp.vector);
    }
  }
  best.sinr = 1.0 / worst;
  return best;
}

struct GroupOptimum {
  double sinr = 0.0;
  std::vector<BlockOptimum> blocks;
};

/// Non-interacting blocks are solved separately; the group optimum is the
/// worst block.
inline GroupOptimum solve_group(const PartitionGroup& group, double p_max) {
  if (group.size() == 0) throw std::invalid_argument("optimal_common_sinr: empty group");
  if (!(p_max > 0.0)) throw std::invalid_argument("optimal_common_sinr: p_max must be positive");
  GroupOptimum out;
  out.sinr = std::numeric_limits<double>::infinity();
  for (auto& comp : interference_components(group.cross)) {
    BlockOptimum b = solve_block(subgroup(group, comp), p_max);
    b.members = std::move(comp);
    out.sinr = std::min(out.sinr, b.sinr);
    out.blocks.push_back(std::move(b));
  }
  return out;
}

}  // namespace detail

inline double optimal_common_sinr(const PartitionGroup& group, double p_max) {
  return detail::solve_group(group, p_max).sinr;
}

/// Relative tolerance used when checking the returned powers by substitution.
inline constexpr double kPowerSubstitutionTolerance = 1e-8;

/// Powers that equalize every member's SINR at the group optimum gamma*.
/// The binding block uses the Perron eigenvector of its argmax matrix scaled
/// so the binding pair transmits at p_max; other non-interacting blocks get
/// the minimal power vector gamma* (I - gamma* F)^-1 v for the same target.
inline std::vector<double> optimal_power_vector(const PartitionGroup& group, double p_max, double* sinr_out = nullptr) {
  const detail::GroupOptimum opt = detail::solve_group(group, p_max);
  const double gamma = opt.sinr;
  std::vector<double> powers(group.size(), 0.0);
  for (const auto& block : opt.blocks) {
    const bool binding = block.sinr <= gamma * (1.0 + 1e-12);
    const bool positive =
        std::all_of(block.eigenvector.begin(), block.eigenvector.end(), [](double x) { return x > 0.0; });
    if (binding && positive) {
      const double scale = p_max / block.eigenvector[block.binding];
      for (std::size_t a = 0; a < block.members.size(); ++a)
        powers[block.members[a]] = std::min(p_max, block.eigenvector[a] * scale);
      continue;
    }
    const PartitionGroup sub = detail::subgroup(group, block.members);
    Matrix sys = Matrix::identity(sub.size()) + sub.cross * (-gamma);
    std::vector<double> rhs(sub.inverse_gains);
    for (double& r : rhs) r *= gamma;
    auto sol = solve_linear(std::move(sys), std::move(rhs));
    if (!sol) throw ConvergenceError("optimal_power_vector: singular minimal-power system");
    for (std::size_t a = 0; a < block.members.size(); ++a) {
      const double p = (*sol)[a];
      if (!(p > 0.0)) throw ConvergenceError("optimal_power_vector: non-positive power component");
      powers[block.members[a]] = std::min(p_max, p);
    }
  }
  const std::vector<double> check = group_sinrs(group, powers);
  for (std::size_t i = 0; i < check.size(); ++i)
    if (std::abs(check[i] / gamma - 1.0) > kPowerSubstitutionTolerance)
      throw ConvergenceError("optimal_power_vector: substituted SINR " + std::to_string(check[i]) +
                             " deviates from the common optimum " + std::to_string(gamma));
  if (sinr_out) *sinr_out = gamma;
  return powers;
}

struct SinrBounds {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t worst_link = 0;  // l = argmax v
};

/// Row/column-sum Perron bounds on the single matrix A = F + (1/p_max) v e_l^T,
/// l the weakest direct link, using B = (A + I)^(L-1):
///   delta_l  = (rs_l(A^a B^b) / rs_l(B^b))^(1/a), delta'_l likewise on columns,
///   min delta <= rho(A) <= max delta (same for delta').
/// The returned SINR interval brackets 1 / rho(A). Zero deltas carry no
/// information and are left out of the min/max.
inline SinrBounds sinr_bounds(const PartitionGroup& group, double p_max, const PerronBoundParams& params = {}) {
  const std::size_t n = group.size();
  if (n == 0) throw std::invalid_argument("sinr_bounds: empty group");
  if (params.a < 1 || params.b < 1) throw std::invalid_argument("sinr_bounds: a and b must be positive");
  if (!(p_max > 0.0)) throw std::invalid_argument("sinr_bounds: p_max must be positive");
  const auto& v = group.inverse_gains;
  const std::size_t l = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  const Matrix a = perron_matrix(group, p_max, l);
  const unsigned exponent = params.matrix_power_exponent.value_or(static_cast<unsigned>(n - 1));
  const Matrix bb = power(power(a + Matrix::identity(n), exponent), params.b);
  const Matrix c = power(a, params.a) * bb;

  auto extremes = [&](const std::vector<double>& num, const std::vector<double>& den) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(den[i] > 0.0)) continue;
      const double delta = std::pow(num[i] / den[i], 1.0 / static_cast<double>(params.a));
      if (!(delta > 0.0)) continue;
      lo = std::min(lo, delta);
      hi = std::max(hi, delta);
    }
    if (hi == 0.0) throw std::domain_error("sinr_bounds: every row/column sum is zero");
    return std::pair{lo, hi};
  };
  const auto [row_lo, row_hi] = extremes(c.row_sums(), bb.row_sums());
  const auto [col_lo, col_hi] = extremes(c.col_sums(), bb.col_sums());
  SinrBounds out;
  out.lower = std::max(1.0 / row_hi, 1.0 / col_hi);
  out.upper = std::min(1.0 / row_lo, 1.0 / col_lo);
  out.worst_link = l;
  return out;
}

inline double approx_common_sinr(const PartitionGroup& group, double p_max, const PerronBoundParams& params = {}) {
  const SinrBounds b = sinr_bounds(group, p_max, params);
  return 0.5 * (b.lower + b.upper);
}

/// (1/N) log2(1 + gamma) in bps/Hz.
inline double common_rate(double sinr, std::size_t n_partitions) {
  if (n_partitions < 1) throw std::invalid_argument("common_rate: N must be >= 1");
  if (!(sinr >= 0.0)) throw std::invalid_argument("common_rate: SINR must be non-negative");
  return std::log2(1.0 + sinr) / static_cast<double>(n_partitions);
}

/// Per-partition optimal powers; partitions are orthogonal, so the network
/// common SINR is the worst partition optimum. Empty partitions are allowed.
inline CoordinationSolution evaluate_assignment(const NetworkInstance& instance, const Assignment& assignment,
                                                double p_max) {
  validate_assignment(instance, assignment);
  const std::size_t k_count = instance.ue_count();
  CoordinationSolution sol;
  sol.assignment = assignment;
  sol.powers.assign(k_count, 0.0);
  sol.per_ue_sinr.assign(k_count, 0.0);
  sol.per_ue_rate.assign(k_count, 0.0);
  double theta = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < assignment.n_partitions; ++n) {
    const auto members = assignment.members(n);
    if (members.empty()) continue;
    const PartitionGroup g = build_partition_group(instance, assignment.serving_an, members);
    double gamma = 0.0;
    const auto powers = optimal_power_vector(g, p_max, &gamma);
    for (std::size_t i = 0; i < g.size(); ++i) {
      sol.powers[g.ues[i]] = powers[i];
      sol.per_ue_sinr[g.ues[i]] = gamma;
      sol.per_ue_rate[g.ues[i]] = common_rate(gamma, assignment.n_partitions);
    }
    theta = std::min(theta, gamma);
  }
  sol.common_sinr = theta;
  sol.common_rate = common_rate(theta, assignment.n_partitions);
  return sol;
}

}  // namespace udn
