// udn_sim: command-line front end for deployment generation, single-instance
// solving, Monte Carlo sweeps and ILP export/checking.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "udn/udn.hpp"

namespace {

struct ConfigFlags {
  double pmax_dbm = 30.0;
  double noise_dbm_hz = -174.0;
  double alpha = 4.0;
  double area_m = 1000.0;
  double bandwidth_hz = 1e7;
  double ref_gain_db = 0.0;

  void attach(CLI::App* app) {
    app->add_option("--pmax-dbm", pmax_dbm, "Per-pair power budget (dBm)")->capture_default_str();
    app->add_option("--noise-dbm-hz", noise_dbm_hz, "Noise spectral density (dBm/Hz)")->capture_default_str();
    app->add_option("--alpha", alpha, "Path-loss exponent")->capture_default_str();
    app->add_option("--area-m", area_m, "Side of the square deployment area (m)")->capture_default_str();
    app->add_option("--bandwidth-hz", bandwidth_hz, "System bandwidth (Hz)")->capture_default_str();
    app->add_option("--ref-gain-db", ref_gain_db, "Path gain at 1 m (dB)")->capture_default_str();
  }

  udn::SystemConfig build(std::uint64_t seed) const {
    udn::SystemConfig c;
    c.p_max = udn::dbm_to_watts(pmax_dbm);
    c.noise_density = udn::dbm_to_watts(noise_dbm_hz);
    c.pathloss_exponent = alpha;
    c.area_side = area_m;
    c.system_bandwidth = bandwidth_hz;
    c.reference_gain_at_1m = std::pow(10.0, ref_gain_db / 10.0);
    c.rng_seed = seed;
    c.validate();
    return c;
  }
};

/// Either --instance FILE or a fresh drop from --ans/--ues/--seed.
struct InstanceSource {
  std::string path;
  std::size_t ans = 10;
  std::size_t ues = 10;
  std::uint64_t seed = 0;

  void attach(CLI::App* app) {
    app->add_option("--instance", path, "Instance JSON written by 'generate'");
    app->add_option("--ans", ans, "Number of access nodes")->capture_default_str();
    app->add_option("--ues", ues, "Number of UEs")->capture_default_str();
    app->add_option("--seed", seed, "Deployment seed")->capture_default_str();
  }

  udn::NetworkInstance load(const udn::SystemConfig& config) const {
    if (!path.empty()) return udn::read_json_file(path).get<udn::NetworkInstance>();
    return udn::generate_instance(ans, ues, config);
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw udn::Error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw udn::Error("write failed: " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint pairing, partitioning and power coordination for dense wireless networks"};
  app.require_subcommand(1);

  ConfigFlags cfg;

  // generate
  auto* gen = app.add_subcommand("generate", "Drop a random deployment and write the instance JSON");
  InstanceSource gen_src;
  std::string gen_out;
  gen->add_option("--ans", gen_src.ans, "Number of access nodes")->capture_default_str();
  gen->add_option("--ues", gen_src.ues, "Number of UEs")->capture_default_str();
  gen->add_option("--seed", gen_src.seed, "Deployment seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output file (stdout if omitted)");
  cfg.attach(gen);

  // solve
  auto* solve = app.add_subcommand("solve", "Run one algorithm on one instance and print the solution JSON");
  InstanceSource solve_src;
  std::string solve_alg = "power-aware-exact", solve_policy, solve_out;
  std::size_t solve_n = 0;
  solve_src.attach(solve);
  solve->add_option("--algorithm,--algorithms", solve_alg, "Algorithm identifier")->capture_default_str();
  solve->add_option("--partitions", solve_n, "Number of partitions N");
  solve->add_option("--n-policy", solve_policy, "N policy: N, fixed:N, best, best:NMAX, intra-an");
  solve->add_option("--out", solve_out, "Output file (stdout if omitted)");
  cfg.attach(solve);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo scenario; writes results.csv and summary.json");
  std::string sweep_spec, sweep_out = ".", sweep_policy = "1", sweep_algs = "power-aware-approx,full-orth";
  std::size_t sweep_m = 10, sweep_k = 10, sweep_real = 1, sweep_n = 0, sweep_workers = 0;
  std::uint64_t sweep_seed = 0;
  bool sweep_timing = false;
  sweep->add_option("--spec", sweep_spec, "Scenario JSON (overrides the scenario flags)");
  sweep->add_option("--ans", sweep_m, "Number of access nodes")->capture_default_str();
  sweep->add_option("--ues", sweep_k, "Number of UEs")->capture_default_str();
  sweep->add_option("--partitions", sweep_n, "Fixed number of partitions N");
  sweep->add_option("--n-policy", sweep_policy, "N policy: N, fixed:N, best, best:NMAX, intra-an")->capture_default_str();
  sweep->add_option("--algorithms", sweep_algs, "Comma-separated algorithm identifiers")->capture_default_str();
  sweep->add_option("--realizations", sweep_real, "Number of independent drops")->capture_default_str();
  sweep->add_option("--seed", sweep_seed, "Base seed; drop i uses seed + i")->capture_default_str();
  sweep->add_option("--workers", sweep_workers, "Worker threads (0: all cores)")->capture_default_str();
  sweep->add_option("--out", sweep_out, "Output directory")->capture_default_str();
  sweep->add_flag("--timing", sweep_timing, "Record wall-clock times in the CSV");
  cfg.attach(sweep);

  // export-ilp
  auto* exp = app.add_subcommand("export-ilp", "Write the feasibility ILP for a SINR target as MPS");
  InstanceSource exp_src;
  double exp_theta = 0.0;
  std::size_t exp_n = 1;
  std::string exp_out;
  exp_src.attach(exp);
  exp->add_option("--theta", exp_theta, "Common SINR target (linear)")->required();
  exp->add_option("--partitions", exp_n, "Number of partitions N")->capture_default_str();
  exp->add_option("--out", exp_out, "Output MPS file (stdout if omitted)");
  cfg.attach(exp);

  // check-ilp
  auto* chk = app.add_subcommand("check-ilp", "Check a name=value solution against the exported ILP");
  InstanceSource chk_src;
  double chk_theta = 0.0, chk_tol = 1e-9;
  std::size_t chk_n = 1;
  std::string chk_solution;
  chk_src.attach(chk);
  chk->add_option("--theta", chk_theta, "Common SINR target (linear)")->required();
  chk->add_option("--partitions", chk_n, "Number of partitions N")->capture_default_str();
  chk->add_option("--solution", chk_solution, "Solution file with name=value lines")->required();
  chk->add_option("--tolerance", chk_tol, "Relative row tolerance")->capture_default_str();
  cfg.attach(chk);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto config = cfg.build(gen_src.seed);
      const udn::json j = gen_src.load(config);
      write_text(gen_out, j.dump(2) + "\n");
      return 0;
    }

    if (*solve) {
      const auto config = cfg.build(solve_src.seed);
      const auto instance = solve_src.load(config);
      const auto id = udn::parse_algorithm(solve_alg);
      udn::NPolicy policy = udn::NPolicy::fixed(solve_n ? solve_n : 1);
      if (!solve_policy.empty()) policy = udn::parse_n_policy(solve_policy);
      udn::RunContext ctx{config.p_max, solve_src.seed, {}, {}};
      std::size_t n = policy.n;
      std::optional<udn::CoordinationSolution> sol;
      if (udn::has_intrinsic_n(id)) {
        sol = udn::run_algorithm(instance, id, 1, ctx);
      } else if (policy.kind == udn::NPolicy::Kind::ExhaustiveBest) {
        auto best = udn::exhaustive_best_n(instance, id, policy.n_max.value_or(instance.ue_count()), ctx);
        n = best.n;
        sol = std::move(best.solution);
      } else {
        if (policy.kind == udn::NPolicy::Kind::IntraAn) n = udn::dynamic_n_intra_an(instance, udn::pair_best_gain(instance));
        sol = udn::run_algorithm(instance, id, n, ctx);
      }
      udn::json j = {{"algorithm", udn::algorithm_name(id)}, {"feasible", sol.has_value()}};
      if (sol) {
        j["solution"] = *sol;
      } else {
        j["n"] = n;
      }
      write_text(solve_out, j.dump(2) + "\n");
      return sol ? 0 : 3;
    }

    if (*sweep) {
      udn::ScenarioSpec spec;
      if (!sweep_spec.empty()) {
        spec = udn::read_json_file(sweep_spec).get<udn::ScenarioSpec>();
      } else {
        spec.m_count = sweep_m;
        spec.k_count = sweep_k;
        spec.n_policy = sweep_n ? udn::NPolicy::fixed(sweep_n) : udn::parse_n_policy(sweep_policy);
        spec.algorithms.clear();
        std::stringstream ss(sweep_algs);
        for (std::string a; std::getline(ss, a, ',');)
          if (!a.empty()) spec.algorithms.push_back(udn::parse_algorithm(a));
        spec.realizations = sweep_real;
        spec.base_seed = sweep_seed;
        spec.config = cfg.build(sweep_seed);
      }
      if (sweep_workers) spec.workers = sweep_workers;
      const auto result = udn::run_scenario(spec);
      std::filesystem::create_directories(sweep_out);
      const auto dir = std::filesystem::path(sweep_out);
      udn::emit_results(result, (dir / "results.csv").string(), (dir / "summary.json").string(), sweep_timing);
      for (const auto& e : result.errors) std::cerr << "skipped " << e.message << "\n";
      for (const auto& s : result.summary)
        std::cerr << udn::algorithm_name(s.algorithm) << ": mean common rate " << s.common_rate.mean
                  << " bps/Hz over " << s.runs << " drops (" << s.infeasible << " infeasible)\n";
      return 0;
    }

    if (*exp) {
      const auto config = cfg.build(exp_src.seed);
      const auto instance = exp_src.load(config);
      const auto model = udn::export_ilp(instance, exp_theta, exp_n, config.p_max);
      write_text(exp_out, udn::to_mps(model));
      return 0;
    }

    if (*chk) {
      const auto config = cfg.build(chk_src.seed);
      const auto instance = chk_src.load(config);
      const auto model = udn::export_ilp(instance, chk_theta, chk_n, config.p_max);
      std::ifstream in(chk_solution);
      if (!in) throw udn::Error("cannot open " + chk_solution + " for reading");
      const auto point = udn::solution_point(model, udn::parse_solution(in));
      const auto report = udn::check_point(model, point, chk_tol);
      if (report.feasible) {
        std::cout << "feasible\n";
        return 0;
      }
      std::cout << "infeasible: " << report.violations.size() << " violated constraints\n";
      for (const auto& v : report.violations) std::cout << "  " << v << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "udn_sim: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
