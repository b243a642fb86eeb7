#pragma once

// Feasibility ILP for a common SINR target theta0, with the binary x
// continuous products z_kn * P_imn linearized through u_imnk and a big-M
// constant. Emitted as MPS for external solvers; the same model drives an
// internal row checker used to validate solver output.
//
// Variables (indices are 0-based):
//   P_k_m_n    power of UE k on AN m in partition n, 0 <= P <= p_max * rho
//   z_k_n      binary, UE k active in partition n (= sum_m rho_k_m_n)
//   u_i_m_n_k  z_k_n * P_i_m_n for i != k
//   rho_k_m_n  binary, UE k served by AN m in partition n
// Rows:
//   ue_k_n      sum_m rho_kmn <= 1
//   an_m_n      sum_k rho_kmn <= 1
//   one_k       sum_mn rho_kmn = 1
//   pw_k_m_n    P_kmn - p_max rho_kmn <= 0
//   act_k_n     z_kn - sum_m rho_kmn = 0
//   lna_i_m_n_k P_imn - u_imnk + B z_kn <= B
//   lnb_i_m_n_k u_imnk - P_imn <= 0
//   lnc_i_m_n_k u_imnk - B z_kn <= 0
//   sinr_k_n    theta0 z_kn + theta0 sum_{i!=k,m} g_km u_imnk - sum_m g_km P_kmn <= 0

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "udn/assignment.hpp"
#include "udn/network_model.hpp"

namespace udn {

enum class VarKind { Continuous, Binary };
enum class RowSense { LessEqual, Equal };

struct IlpVariable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
};

struct IlpRow {
  std::string name;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
  std::vector<std::pair<std::size_t, double>> terms;  // (variable index, coefficient)
};

struct IlpModel {
  std::size_t k_count = 0, m_count = 0, n_count = 0;
  double theta0 = 0.0;
  double p_max = 0.0;
  double big_m = 0.0;
  std::vector<IlpVariable> variables;
  std::vector<IlpRow> rows;

  std::size_t power_var(std::size_t k, std::size_t m, std::size_t n) const { return (k * m_count + m) * n_count + n; }
  std::size_t activity_var(std::size_t k, std::size_t n) const { return block_z() + k * n_count + n; }
  std::size_t product_var(std::size_t i, std::size_t m, std::size_t n, std::size_t k) const {
    // k is the victim; i ranges over K \ {k}, packed into K - 1 slots.
    const std::size_t slot = i < k ? i : i - 1;
    return block_u() + ((k * (k_count - 1) + slot) * m_count + m) * n_count + n;
  }
  std::size_t pairing_var(std::size_t k, std::size_t m, std::size_t n) const {
    return block_rho() + (k * m_count + m) * n_count + n;
  }

  std::size_t index_of(const std::string& name) const {
    if (name_index_.empty())
      for (std::size_t i = 0; i < variables.size(); ++i) name_index_.emplace(variables[i].name, i);
    auto it = name_index_.find(name);
    if (it == name_index_.end()) throw std::invalid_argument("ILP: unknown variable '" + name + "'");
    return it->second;
  }

 private:
  std::size_t block_z() const { return k_count * m_count * n_count; }
  std::size_t block_u() const { return block_z() + k_count * n_count; }
  std::size_t block_rho() const { return block_u() + (k_count - 1) * k_count * m_count * n_count; }
  mutable std::unordered_map<std::string, std::size_t> name_index_;
};

/// 2KMN + KN + (K-1)KMN: P and rho (KMN each), z (KN), u ((K-1)KMN).
inline std::size_t ilp_variable_count(std::size_t k, std::size_t m, std::size_t n) {
  return 2 * k * m * n + k * n + (k - 1) * k * m * n;
}

/// Rows as emitted (u >= 0 is a column bound, not a row).
inline std::size_t ilp_row_count(std::size_t k, std::size_t m, std::size_t n) {
  return 3 * k * n + m * n + k + k * m * n + 3 * k * (k - 1) * m * n;
}

namespace detail {
inline std::string idx_name(const char* prefix, std::initializer_list<std::size_t> idx) {
  std::string s(prefix);
  for (std::size_t i : idx) s += "_" + std::to_string(i);
  return s;
}
}  // namespace detail

/// big_M = p_max: every linearized product is bounded by P <= p_max.
inline IlpModel export_ilp(const NetworkInstance& instance, double theta0, std::size_t n_partitions, double p_max) {
  if (n_partitions < 1) throw std::invalid_argument("export_ilp: N must be >= 1");
  if (!(theta0 >= 0.0) || !(p_max > 0.0)) throw std::invalid_argument("export_ilp: invalid theta0 or p_max");
  using detail::idx_name;
  IlpModel model;
  const std::size_t K = instance.ue_count(), M = instance.an_count(), N = n_partitions;
  model.k_count = K;
  model.m_count = M;
  model.n_count = N;
  model.theta0 = theta0;
  model.p_max = p_max;
  model.big_m = p_max;
  const double big = model.big_m;

  model.variables.resize(ilp_variable_count(K, M, N));
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t n = 0; n < N; ++n) {
        model.variables[model.power_var(k, m, n)] = {idx_name("P", {k, m, n}), VarKind::Continuous, 0.0, p_max};
        model.variables[model.pairing_var(k, m, n)] = {idx_name("rho", {k, m, n}), VarKind::Binary, 0.0, 1.0};
      }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t n = 0; n < N; ++n)
      model.variables[model.activity_var(k, n)] = {idx_name("z", {k, n}), VarKind::Binary, 0.0, 1.0};
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < K; ++i) {
      if (i == k) continue;
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < N; ++n)
          model.variables[model.product_var(i, m, n, k)] = {idx_name("u", {i, m, n, k}), VarKind::Continuous, 0.0,
                                                            std::numeric_limits<double>::infinity()};
    }

  auto& rows = model.rows;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t n = 0; n < N; ++n) {
      IlpRow r{idx_name("ue", {k, n}), RowSense::LessEqual, 1.0, {}};
      for (std::size_t m = 0; m < M; ++m) r.terms.emplace_back(model.pairing_var(k, m, n), 1.0);
      rows.push_back(std::move(r));
    }
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n) {
      IlpRow r{idx_name("an", {m, n}), RowSense::LessEqual, 1.0, {}};
      for (std::size_t k = 0; k < K; ++k) r.terms.emplace_back(model.pairing_var(k, m, n), 1.0);
      rows.push_back(std::move(r));
    }
  for (std::size_t k = 0; k < K; ++k) {
    IlpRow r{idx_name("one", {k}), RowSense::Equal, 1.0, {}};
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t n = 0; n < N; ++n) r.terms.emplace_back(model.pairing_var(k, m, n), 1.0);
    rows.push_back(std::move(r));
  }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t n = 0; n < N; ++n)
        rows.push_back({idx_name("pw", {k, m, n}), RowSense::LessEqual, 0.0,
                        {{model.power_var(k, m, n), 1.0}, {model.pairing_var(k, m, n), -p_max}}});
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t n = 0; n < N; ++n) {
      IlpRow r{idx_name("act", {k, n}), RowSense::Equal, 0.0, {{model.activity_var(k, n), 1.0}}};
      for (std::size_t m = 0; m < M; ++m) r.terms.emplace_back(model.pairing_var(k, m, n), -1.0);
      rows.push_back(std::move(r));
    }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < K; ++i) {
      if (i == k) continue;
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < N; ++n) {
          const std::size_t u = model.product_var(i, m, n, k), p = model.power_var(i, m, n), z = model.activity_var(k, n);
          rows.push_back({idx_name("lna", {i, m, n, k}), RowSense::LessEqual, big, {{p, 1.0}, {u, -1.0}, {z, big}}});
          rows.push_back({idx_name("lnb", {i, m, n, k}), RowSense::LessEqual, 0.0, {{u, 1.0}, {p, -1.0}}});
          rows.push_back({idx_name("lnc", {i, m, n, k}), RowSense::LessEqual, 0.0, {{u, 1.0}, {z, -big}}});
        }
    }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t n = 0; n < N; ++n) {
      IlpRow r{idx_name("sinr", {k, n}), RowSense::LessEqual, 0.0, {{model.activity_var(k, n), theta0}}};
      for (std::size_t i = 0; i < K; ++i) {
        if (i == k) continue;
        for (std::size_t m = 0; m < M; ++m) r.terms.emplace_back(model.product_var(i, m, n, k), theta0 * instance.gain(k, m));
      }
      for (std::size_t m = 0; m < M; ++m) r.terms.emplace_back(model.power_var(k, m, n), -instance.gain(k, m));
      rows.push_back(std::move(r));
    }
  return model;
}

namespace detail {
inline std::string mps_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
inline std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}
}  // namespace detail

/// MPS text with column-aligned fields. Names longer than eight characters
/// are kept whole (no embedded spaces), so free-format readers parse it too.
inline std::string to_mps(const IlpModel& model, const std::string& name = "JOINTPPP") {
  using detail::mps_number;
  using detail::pad;
  std::ostringstream out;
  out << "NAME          " << name << "\n";
  out << "ROWS\n";
  out << " N  OBJ\n";
  for (const auto& r : model.rows) out << (r.sense == RowSense::Equal ? " E  " : " L  ") << r.name << "\n";

  std::vector<std::vector<std::pair<std::size_t, double>>> by_column(model.variables.size());
  for (std::size_t ri = 0; ri < model.rows.size(); ++ri)
    for (const auto& [var, coef] : model.rows[ri].terms) by_column[var].emplace_back(ri, coef);

  out << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (std::size_t v = 0; v < model.variables.size(); ++v) {
    const bool binary = model.variables[v].kind == VarKind::Binary;
    if (binary != in_int) {
      out << "    " << pad("MARKER" + std::to_string(marker++), 12) << "  'MARKER'      "
          << (binary ? "'INTORG'" : "'INTEND'") << "\n";
      in_int = binary;
    }
    for (const auto& [ri, coef] : by_column[v])
      out << "    " << pad(model.variables[v].name, 12) << "  " << pad(model.rows[ri].name, 14) << "  "
          << mps_number(coef) << "\n";
  }
  if (in_int) out << "    " << pad("MARKER" + std::to_string(marker++), 12) << "  'MARKER'      'INTEND'\n";

  out << "RHS\n";
  for (const auto& r : model.rows)
    if (r.rhs != 0.0) out << "    " << pad("RHS", 12) << "  " << pad(r.name, 14) << "  " << mps_number(r.rhs) << "\n";

  out << "BOUNDS\n";
  for (const auto& var : model.variables) {
    if (var.kind == VarKind::Binary) {
      out << " BV " << pad("BND", 12) << "  " << var.name << "\n";
    } else if (std::isfinite(var.upper)) {
      out << " UP " << pad("BND", 12) << "  " << pad(var.name, 14) << "  " << mps_number(var.upper) << "\n";
    }
  }
  out << "ENDATA\n";
  return out.str();
}

struct CheckReport {
  bool feasible = true;
  std::vector<std::string> violations;
};

/// Checks bounds, integrality and every row at a point. Row slack is
/// measured relative to the magnitude of the row's terms.
inline CheckReport check_point(const IlpModel& model, const std::vector<double>& values, double tolerance = 1e-9) {
  if (values.size() != model.variables.size()) throw std::invalid_argument("check_point: value vector size mismatch");
  CheckReport rep;
  auto fail = [&](std::string what) {
    rep.feasible = false;
    rep.violations.push_back(std::move(what));
  };
  for (std::size_t v = 0; v < values.size(); ++v) {
    const auto& var = model.variables[v];
    const double x = values[v];
    const double slack = tolerance * (1.0 + std::abs(x));
    if (!std::isfinite(x) || x < var.lower - slack || x > var.upper + slack) fail("bound " + var.name);
    if (var.kind == VarKind::Binary && std::abs(x - std::round(x)) > tolerance) fail("integrality " + var.name);
  }
  for (const auto& r : model.rows) {
    double lhs = 0.0, scale = std::abs(r.rhs);
    for (const auto& [var, coef] : r.terms) {
      lhs += coef * values[var];
      scale += std::abs(coef * values[var]);
    }
    const double slack = tolerance * (1.0 + scale);
    const bool ok = r.sense == RowSense::Equal ? std::abs(lhs - r.rhs) <= slack : lhs <= r.rhs + slack;
    if (!ok) fail("row " + r.name);
  }
  return rep;
}

/// Variable values induced by an assignment and per-UE powers.
inline std::vector<double> assignment_point(const IlpModel& model, const Assignment& a, const std::vector<double>& powers) {
  if (a.ue_count() != model.k_count || powers.size() != model.k_count || a.n_partitions != model.n_count)
    throw std::invalid_argument("assignment_point: assignment does not match the model dimensions");
  std::vector<double> x(model.variables.size(), 0.0);
  for (std::size_t k = 0; k < model.k_count; ++k) {
    const std::size_t m = a.serving_an[k], n = a.partition_of[k];
    x[model.pairing_var(k, m, n)] = 1.0;
    x[model.power_var(k, m, n)] = powers[k];
    x[model.activity_var(k, n)] = 1.0;
  }
  for (std::size_t k = 0; k < model.k_count; ++k)
    for (std::size_t i = 0; i < model.k_count; ++i) {
      if (i == k) continue;
      for (std::size_t m = 0; m < model.m_count; ++m)
        for (std::size_t n = 0; n < model.n_count; ++n)
          x[model.product_var(i, m, n, k)] = x[model.activity_var(k, n)] * x[model.power_var(i, m, n)];
    }
  return x;
}

/// Parses "name=value" lines (blank lines and '#' comments skipped).
inline std::map<std::string, double> parse_solution(std::istream& in) {
  std::map<std::string, double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("solution line " + std::to_string(lineno) + ": expected name=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (name.empty() || used != value.size() || value.empty())
      throw std::invalid_argument("solution line " + std::to_string(lineno) + ": malformed '" + line + "'");
    out[name] = v;
  }
  return out;
}

/// Dense point from named values; unnamed variables are zero.
inline std::vector<double> solution_point(const IlpModel& model, const std::map<std::string, double>& named) {
  std::vector<double> x(model.variables.size(), 0.0);
  for (const auto& [name, v] : named) x[model.index_of(name)] = v;
  return x;
}

inline std::string format_solution(const IlpModel& model, const std::vector<double>& values) {
  std::ostringstream out;
  for (std::size_t v = 0; v < values.size(); ++v)
    if (values[v] != 0.0) out << model.variables[v].name << "=" << detail::mps_number(values[v]) << "\n";
  return out.str();
}

/// Reads the pairing/partitioning back from rho; throws if some UE is not
/// served exactly once.
inline Assignment decode_assignment(const IlpModel& model, const std::vector<double>& values) {
  Assignment a{std::vector<std::size_t>(model.k_count), std::vector<std::size_t>(model.k_count), model.n_count};
  for (std::size_t k = 0; k < model.k_count; ++k) {
    int hits = 0;
    for (std::size_t m = 0; m < model.m_count; ++m)
      for (std::size_t n = 0; n < model.n_count; ++n)
        if (values[model.pairing_var(k, m, n)] > 0.5) {
          ++hits;
          a.serving_an[k] = m;
          a.partition_of[k] = n;
        }
    if (hits != 1) throw ConstraintViolation("decode_assignment: UE " + std::to_string(k) + " is served " + std::to_string(hits) + " times");
  }
  return a;
}

}  // namespace udn
