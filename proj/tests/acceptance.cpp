// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"

#ifndef UDN_SIM_PATH
#error "UDN_SIM_PATH must name the udn_sim executable"
#endif

namespace {

using udn::AlgorithmId;
using udn::Matrix;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// 1. Exact solver against full enumeration, K = M = 3.
Outcome oracle_equivalence() {
  double worst = 0.0;
  int cases = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto inst = gen::instance(seed, 3, 3);
    for (std::size_t n = 1; n <= 3; ++n) {
      const double truth = oracle::brute_force_theta(inst, n, 1.0);
      worst = std::max(worst, rel(udn::solve_joint_ppp(inst, n).common_sinr, truth));
      ++cases;
    }
  }
  return {worst <= 1e-3, fmt("%d cases, max relative error %.3g (limit 1e-3)", cases, worst)};
}

// 2. Row/column-sum bounds bracket 1/rho(A) for a=b=1 and a=2,b=1.
Outcome perron_sandwich() {
  std::mt19937_64 rng(2002);
  int violations = 0, looser = 0;
  const int groups = 1000;
  for (int t = 0; t < groups; ++t) {
    const auto g = gen::group(rng, gen::uniform_index(rng, 2, 8));
    double width[2] = {0.0, 0.0};
    for (unsigned a : {1u, 2u}) {
      const auto b = udn::sinr_bounds(g, 1.0, {a, 1, std::nullopt});
      double half = 0.0;
      const double rho = oracle::perron_by_squaring(udn::perron_matrix(g, 1.0, b.worst_link), &half);
      const double sinr = 1.0 / rho, slack = 1e-12 + half / rho;
      if (b.lower > sinr * (1.0 + slack) || b.upper < sinr * (1.0 - slack)) ++violations;
      width[a - 1] = (b.upper - b.lower) / sinr;
    }
    looser += width[1] > width[0] * (1.0 + 1e-12);
  }
  return {violations == 0, fmt("%d groups x 2 parameter sets, %d violations; a=2 interval wider than a=1 in %d groups",
                               groups, violations, looser)};
}

// 3. Optimal powers equalize every link at gamma* with one link at p_max.
Outcome power_self_consistency() {
  std::mt19937_64 rng(3003);
  double worst_sinr = 0.0, worst_pmax = 0.0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t l = gen::uniform_index(rng, 1, 8);
    const Matrix links = gen::link_gains(rng, l);
    const auto g = udn::PartitionGroup::from_link_gains(links);
    const double p_max = gen::log_uniform(rng, 1e-2, 10.0);
    double gamma = 0.0;
    const auto p = udn::optimal_power_vector(g, p_max, &gamma);
    for (std::size_t i = 0; i < l; ++i) worst_sinr = std::max(worst_sinr, rel(oracle::link_sinr(links, p, i), gamma));
    worst_pmax = std::max(worst_pmax, rel(*std::max_element(p.begin(), p.end()), p_max));
  }
  return {worst_sinr <= 1e-8 && worst_pmax <= 1e-12,
          fmt("500 groups, max SINR deviation %.3g (limit 1e-8), max |max p - p_max|/p_max %.3g", worst_sinr, worst_pmax)};
}

// 4. Eigenvalue optimum against a 200-points-per-axis power grid.
Outcome grid_agreement() {
  std::mt19937_64 rng(4004);
  double worst = 0.0;
  int above = 0;
  for (int t = 0; t < 100; ++t) {
    const Matrix links = gen::link_gains(rng, 2 + t % 2);
    const double exact = udn::optimal_common_sinr(udn::PartitionGroup::from_link_gains(links), 1.0);
    const double grid = oracle::grid_max_min(links, 1.0, 200);
    above += grid > exact * (1.0 + 1e-9);
    worst = std::max(worst, rel(grid, exact));
  }
  return {worst <= 1e-2 && above == 0,
          fmt("50 two-pair + 50 three-pair groups, max relative gap %.3g (limit 1e-2), grid above optimum %d", worst, above)};
}

// 5. Every heuristic stays below the joint optimum on 4x4, N = 2.
Outcome upper_bound() {
  udn::ScenarioSpec spec;
  spec.m_count = spec.k_count = 4;
  spec.n_policy = udn::NPolicy::fixed(2);
  spec.algorithms = {AlgorithmId::JointExact, AlgorithmId::PowerAwareExact, AlgorithmId::PowerAwareApprox,
                     AlgorithmId::PowerUnaware};
  spec.realizations = 100;
  spec.base_seed = 5000;
  const auto r = udn::run_scenario(spec);
  int violations = 0;
  for (std::size_t i = 0; i < r.records.size(); i += 4)
    for (std::size_t j = 1; j < 4; ++j) violations += r.records[i + j].common_rate > r.records[i].common_rate * (1.0 + 1e-9);
  return {violations == 0 && r.records.size() == 400, fmt("100 drops x 3 heuristics, %d violations", violations)};
}

double mean_rate(const udn::ScenarioResult& r, AlgorithmId id) {
  for (const auto& s : r.summary)
    if (s.algorithm == id) return s.common_rate.mean;
  return std::nan("");
}

// 6. Ordering of partitioned coordination against the two baselines.
Outcome baseline_ordering() {
  udn::ScenarioSpec spec;
  spec.m_count = spec.k_count = 8;
  spec.n_policy = udn::NPolicy::best(4);
  spec.algorithms = {AlgorithmId::PowerAwareApprox, AlgorithmId::FullReuse, AlgorithmId::FullOrth};
  spec.realizations = 200;
  spec.base_seed = 6000;
  const auto big = udn::run_scenario(spec);
  const double pa = mean_rate(big, AlgorithmId::PowerAwareApprox);
  const double orth = mean_rate(big, AlgorithmId::FullOrth);
  const double reuse = mean_rate(big, AlgorithmId::FullReuse);

  spec.m_count = spec.k_count = 6;
  spec.algorithms = {AlgorithmId::JointExact, AlgorithmId::PowerAwareExact};
  const auto small = udn::run_scenario(spec);
  const double je = mean_rate(small, AlgorithmId::JointExact);
  const double pae = mean_rate(small, AlgorithmId::PowerAwareExact);

  const double vs_orth = pa / orth, share = pae / je;
  const bool vs_reuse_ok = pa >= 1.5 * reuse;
  const bool ok = vs_orth >= 2.0 && vs_reuse_ok && share >= 0.85;
  return {ok, fmt("8x8: best-N power-aware-approx %.4f, full-orth %.4f (x%.3f, need >= 2), full-reuse %.4f (%s); "
                  "6x6: power-aware-exact / joint-exact = %.3f (need >= 0.85)",
                  pa, orth, vs_orth, reuse, vs_reuse_ok ? "x>=1.5 met" : "x<1.5", share)};
}

// 7. Power-unaware partitioning against random partitioning, intra-AN N.
Outcome random_comparison() {
  udn::ScenarioSpec spec;
  spec.m_count = spec.k_count = 10;
  spec.n_policy = udn::NPolicy::intra_an();
  spec.algorithms = {AlgorithmId::PowerUnaware, AlgorithmId::RandomPartition};
  spec.realizations = 200;
  spec.base_seed = 7000;
  const auto r = udn::run_scenario(spec);
  const double pu = mean_rate(r, AlgorithmId::PowerUnaware), rnd = mean_rate(r, AlgorithmId::RandomPartition);
  return {pu >= 1.1 * rnd, fmt("10x10: power-unaware %.4f, random %.4f, ratio %.3f (need >= 1.1)", pu, rnd, pu / rnd)};
}

// 8. Exported ILP accepts the optimum at 0.99 theta* and no integral point at 1.01 theta*.
Outcome ilp_validity() {
  int accepted = 0, rejected = 0, cases = 0, count_errors = 0;
  std::uint64_t points = 0;
  for (std::size_t size : {2u, 3u})
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto inst = gen::instance(8000 + 100 * size + seed, size, size);
      const std::size_t n = 1 + seed % 2;
      const auto sol = udn::solve_joint_ppp(inst, n);
      ++cases;
      const auto low = udn::export_ilp(inst, 0.99 * sol.common_sinr, n, 1.0);
      accepted += udn::check_point(low, udn::assignment_point(low, sol.assignment, sol.powers)).feasible;
      count_errors += low.variables.size() != 2 * size * size * n + size * n + (size - 1) * size * size * n;

      const auto high = udn::export_ilp(inst, 1.01 * sol.common_sinr, n, 1.0);
      bool any = false;
      // Every integral (AN, partition) labelling, valid or not; invalid ones carry p_max powers.
      std::vector<std::size_t> code(size, 0);
      for (bool done = false; !done;) {
        udn::Assignment a{std::vector<std::size_t>(size), std::vector<std::size_t>(size), n};
        for (std::size_t k = 0; k < size; ++k) {
          a.serving_an[k] = code[k] % size;
          a.partition_of[k] = code[k] / size;
        }
        std::vector<double> powers(size, 1.0);
        try {
          powers = udn::evaluate_assignment(inst, a, 1.0).powers;
        } catch (const udn::ConstraintViolation&) {
        }
        ++points;
        any |= udn::check_point(high, udn::assignment_point(high, a, powers)).feasible;
        std::size_t k = 0;
        while (k < size && ++code[k] == size * n) code[k++] = 0;
        done = k == size;
      }
      rejected += !any;
    }
  return {accepted == cases && rejected == cases && count_errors == 0,
          fmt("%d instances: optimum accepted at 0.99 theta* in %d, all %llu integral points rejected at 1.01 theta* "
              "in %d, variable-count mismatches %d",
              cases, accepted, static_cast<unsigned long long>(points), rejected, count_errors)};
}

// 9. Iteration count and final bracket of the bisection.
Outcome bisection_contract() {
  std::mt19937_64 rng(9009);
  int count_errors = 0, bracket_misses = 0;
  const int runs = 60;
  for (int t = 0; t < runs; ++t) {
    const std::size_t size = gen::uniform_index(rng, 2, 4), n = gen::uniform_index(rng, 1, 3);
    const auto inst = gen::instance(rng(), size, size);
    double theta_max = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < size; ++k) {
      double best = 0.0;
      for (std::size_t m = 0; m < size; ++m) best = std::max(best, inst.gain(k, m));
      theta_max = std::min(theta_max, best);
    }
    udn::ExactOptions o;
    o.epsilon = theta_max * gen::log_uniform(rng, 1e-7, 1e-2);
    const auto s = udn::solve_joint_ppp(inst, n, o);
    const auto expected = static_cast<std::size_t>(std::ceil(std::log2(theta_max / *o.epsilon)));
    count_errors += s.stats.bisection_iterations != expected;
    const double truth = oracle::brute_force_theta(inst, n, 1.0);
    bracket_misses += !(s.stats.bracket_low <= truth * (1.0 + 1e-12) && truth <= s.stats.bracket_high * (1.0 + 1e-12));
  }
  return {count_errors == 0 && bracket_misses == 0,
          fmt("%d solves, iteration-count mismatches %d, brackets missing the enumerated optimum %d", runs, count_errors,
              bracket_misses)};
}

// 10. Two identical sweep invocations write identical CSV bytes.
Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "udn_acceptance_determinism";
  std::filesystem::remove_all(root);
  std::string first;
  for (int run = 0; run < 2; ++run) {
    const auto dir = root / std::to_string(run);
    const std::string cmd = std::string("\"") + UDN_SIM_PATH + "\" sweep --ans 8 --ues 8 --n-policy best:3 " +
                            "--algorithms power-aware-approx,power-unaware,random-partition,full-reuse,full-orth " +
                            "--realizations 12 --seed 10 --workers 4 --out \"" + dir.string() + "\" 2>/dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "udn_sim sweep failed"};
    std::ifstream in(dir / "results.csv", std::ios::binary);
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (run == 0) {
      first = bytes;
    } else {
      const bool same = !first.empty() && bytes == first;
      return {same, fmt("two sweeps, %zu CSV bytes each, %s", first.size(), same ? "identical" : "DIFFERENT")};
    }
  }
  return {false, "unreachable"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence}, {"perron sandwich", perron_sandwich},
      {"power self-consistency", power_self_consistency}, {"grid agreement", grid_agreement},
      {"upper bound", upper_bound}, {"baseline ordering", baseline_ordering},
      {"random-partition comparison", random_comparison}, {"ILP export validity", ilp_validity},
      {"bisection contract", bisection_contract}, {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int id = static_cast<int>(c) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[c].first, o.detail.c_str(), s);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures ? 1 : 0;
}
