#pragma once

// JSON mapping for configurations, instances, assignments and solutions.
//
//   config:     {"area_side", "pathloss_exponent", "p_max", "noise_density",
//                "system_bandwidth", "reference_gain_at_1m", "rng_seed"}
//   deployment: {"an_positions": [[x, y], ...], "ue_positions": [[x, y], ...]}
//   instance:   {"deployment": {...}, "gains": [[g_00, g_01, ...], ...]}  (K rows of M)
//   assignment: {"serving_an": [...], "partition_of": [...], "n_partitions": N}

#include "json.hpp"

#include <fstream>
#include <string>

#include "udn/assignment.hpp"
#include "udn/errors.hpp"
#include "udn/matrix.hpp"
#include "udn/network_model.hpp"

namespace udn {

using json = nlohmann::json;

inline void to_json(json& j, const Matrix& m) {
  j = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
}

inline void from_json(const json& j, Matrix& m) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j.at(0).size() : 0;
  m = Matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j.at(r).size() != cols) throw std::invalid_argument("matrix JSON: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
}

inline void to_json(json& j, const Point& p) { j = json::array({p.x, p.y}); }

inline void from_json(const json& j, Point& p) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("position JSON must be [x, y]");
  p = {j[0].get<double>(), j[1].get<double>()};
}

inline void to_json(json& j, const SystemConfig& c) {
  j = {{"area_side", c.area_side},
       {"pathloss_exponent", c.pathloss_exponent},
       {"p_max", c.p_max},
       {"noise_density", c.noise_density},
       {"system_bandwidth", c.system_bandwidth},
       {"reference_gain_at_1m", c.reference_gain_at_1m},
       {"rng_seed", c.rng_seed}};
}

/// Missing keys keep their defaults.
inline void from_json(const json& j, SystemConfig& c) {
  c.area_side = j.value("area_side", c.area_side);
  c.pathloss_exponent = j.value("pathloss_exponent", c.pathloss_exponent);
  c.p_max = j.value("p_max", c.p_max);
  c.noise_density = j.value("noise_density", c.noise_density);
  c.system_bandwidth = j.value("system_bandwidth", c.system_bandwidth);
  c.reference_gain_at_1m = j.value("reference_gain_at_1m", c.reference_gain_at_1m);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  c.validate();
}

inline void to_json(json& j, const Deployment& d) {
  j = {{"an_positions", d.an_positions}, {"ue_positions", d.ue_positions}};
}

inline void from_json(const json& j, Deployment& d) {
  d.an_positions = j.at("an_positions").get<std::vector<Point>>();
  d.ue_positions = j.at("ue_positions").get<std::vector<Point>>();
}

inline void to_json(json& j, const NetworkInstance& inst) {
  j = {{"deployment", inst.deployment}, {"gains", inst.gains}};
}

inline void from_json(const json& j, NetworkInstance& inst) {
  NetworkInstance out = make_instance(j.at("gains").get<Matrix>());
  if (j.contains("deployment")) out.deployment = j.at("deployment").get<Deployment>();
  const auto& d = out.deployment;
  if (!d.an_positions.empty() || !d.ue_positions.empty())
    if (d.an_positions.size() != out.an_count() || d.ue_positions.size() != out.ue_count())
      throw std::invalid_argument("instance JSON: deployment does not match the gain matrix shape");
  inst = std::move(out);
}

inline void to_json(json& j, const Assignment& a) {
  j = {{"serving_an", a.serving_an}, {"partition_of", a.partition_of}, {"n_partitions", a.n_partitions}};
}

inline void from_json(const json& j, Assignment& a) {
  a.serving_an = j.at("serving_an").get<std::vector<std::size_t>>();
  a.partition_of = j.at("partition_of").get<std::vector<std::size_t>>();
  a.n_partitions = j.at("n_partitions").get<std::size_t>();
}

inline void to_json(json& j, const SolverStats& s) {
  j = {{"nodes_explored", s.nodes_explored},
       {"bisection_iterations", s.bisection_iterations},
       {"bracket_low", s.bracket_low},
       {"bracket_high", s.bracket_high}};
}

inline void to_json(json& j, const CoordinationSolution& s) {
  j = {{"assignment", s.assignment},   {"powers", s.powers},           {"common_sinr", s.common_sinr},
       {"common_rate", s.common_rate}, {"per_ue_sinr", s.per_ue_sinr}, {"per_ue_rate", s.per_ue_rate},
       {"stats", s.stats}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path + " for reading");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed: " + path);
}

}  // namespace udn
