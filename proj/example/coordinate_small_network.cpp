// Drops a 5 x 5 network and compares the coordination strategies at N = 2.

#include <cstdio>

#include "udn/udn.hpp"

int main() {
  udn::SystemConfig config;
  config.rng_seed = 42;
  const udn::NetworkInstance instance = udn::generate_instance(5, 5, config);
  const std::size_t n = 2;

  auto report = [](const char* label, const udn::CoordinationSolution& s) {
    std::printf("%-22s N=%zu  theta=%12.4f  common rate=%.4f bps/Hz\n", label, s.assignment.n_partitions, s.common_sinr,
                s.common_rate);
  };

  udn::ExactOptions exact;
  exact.p_max = config.p_max;
  report("joint exact", udn::solve_joint_ppp(instance, n, exact));

  udn::GreedyConfig greedy;
  greedy.p_max = config.p_max;
  report("power-aware (exact)", udn::evaluate_assignment(instance, udn::power_aware_partition(instance, n, greedy), config.p_max));
  greedy.rate_mode = udn::RateMode::Approx;
  report("power-aware (bounds)", udn::evaluate_assignment(instance, udn::power_aware_partition(instance, n, greedy), config.p_max));

  const auto pairing = udn::pair_best_gain(instance);
  try {
    report("power-unaware", udn::evaluate_assignment(instance, udn::power_unaware_assignment(instance, pairing, n), config.p_max));
  } catch (const udn::ConstraintViolation& e) {
    std::printf("%-22s %s\n", "power-unaware", e.what());
  }

  report("full orthogonalization", udn::baseline_full_orthogonalization(instance, config.p_max));
  try {
    report("full spatial reuse", udn::baseline_full_spatial_reuse(instance, config.p_max));
  } catch (const udn::InfeasibleError& e) {
    std::printf("%-22s infeasible: %s\n", "full spatial reuse", e.what());
  }
  return 0;
}
