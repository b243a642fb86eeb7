#pragma once

// Random dense deployments and noise-normalized log-distance channel gains.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "udn/matrix.hpp"

namespace udn {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

struct SystemConfig {
  double area_side = 1000.0;             // meters
  double pathloss_exponent = 4.0;
  double p_max = 1.0;                    // watts (30 dBm)
  double noise_density = 3.981071705534973e-21;  // W/Hz (-174 dBm/Hz)
  double system_bandwidth = 1e7;         // Hz
  double reference_gain_at_1m = 1.0;
  std::uint64_t rng_seed = 0;

  double noise_power() const { return noise_density * system_bandwidth; }

  void validate() const {
    auto positive = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("SystemConfig: ") + what + " must be positive");
    };
    positive(area_side, "area_side");
    positive(pathloss_exponent, "pathloss_exponent");
    positive(p_max, "p_max");
    positive(noise_density, "noise_density");
    positive(system_bandwidth, "system_bandwidth");
    positive(reference_gain_at_1m, "reference_gain_at_1m");
  }
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Deployment {
  std::vector<Point> an_positions;
  std::vector<Point> ue_positions;
  friend bool operator==(const Deployment&, const Deployment&) = default;
};

/// The ground truth every coordination algorithm consumes. gains is K x M:
/// gains(k, m) is the noise-normalized power gain between UE k and AN m.
/// The deployment may be empty for hand-built instances.
struct NetworkInstance {
  Deployment deployment;
  Matrix gains;

  std::size_t ue_count() const { return gains.rows(); }
  std::size_t an_count() const { return gains.cols(); }
  double gain(std::size_t ue, std::size_t an) const { return gains(ue, an); }
};

/// Wraps a hand-built K x M gain matrix, checking positivity.
inline NetworkInstance make_instance(Matrix gains) {
  if (gains.rows() == 0 || gains.cols() == 0) throw std::invalid_argument("make_instance: empty gain matrix");
  for (double g : gains.data())
    if (!(g > 0.0) || !std::isfinite(g)) throw std::invalid_argument("make_instance: gains must be positive and finite");
  return NetworkInstance{{}, std::move(gains)};
}

/// Uniform double in [0, 1) from the top 53 bits; stable across standard
/// library implementations, unlike std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Drops m_count ANs then k_count UEs i.i.d. uniformly over the square.
inline Deployment generate_deployment(std::size_t m_count, std::size_t k_count, const SystemConfig& config) {
  if (m_count < 1 || k_count < 1) throw std::invalid_argument("generate_deployment: counts must be >= 1");
  config.validate();
  std::mt19937_64 rng(config.rng_seed);
  Deployment d;
  auto draw = [&] { return Point{unit_uniform(rng) * config.area_side, unit_uniform(rng) * config.area_side}; };
  d.an_positions.reserve(m_count);
  d.ue_positions.reserve(k_count);
  for (std::size_t i = 0; i < m_count; ++i) d.an_positions.push_back(draw());
  for (std::size_t i = 0; i < k_count; ++i) d.ue_positions.push_back(draw());
  return d;
}

inline constexpr double kMinLinkDistance = 1.0;  // meters

/// Path gain at distance d (clamped below at 1 m), not yet noise-normalized.
inline double path_gain(double d, const SystemConfig& config) {
  return config.reference_gain_at_1m * std::pow(std::max(d, kMinLinkDistance), -config.pathloss_exponent);
}

inline NetworkInstance compute_gains(const Deployment& deployment, const SystemConfig& config) {
  config.validate();
  const auto& ans = deployment.an_positions;
  const auto& ues = deployment.ue_positions;
  if (ans.empty() || ues.empty()) throw std::invalid_argument("compute_gains: empty deployment");
  const double noise = config.noise_power();
  NetworkInstance inst{deployment, Matrix(ues.size(), ans.size())};
  for (std::size_t k = 0; k < ues.size(); ++k)
    for (std::size_t m = 0; m < ans.size(); ++m) inst.gains(k, m) = path_gain(distance(ues[k], ans[m]), config) / noise;
  return inst;
}

inline NetworkInstance generate_instance(std::size_t m_count, std::size_t k_count, const SystemConfig& config) {
  return compute_gains(generate_deployment(m_count, k_count, config), config);
}

}  // namespace udn
