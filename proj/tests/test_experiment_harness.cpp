#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "udn/experiment_harness.hpp"

using udn::AlgorithmId;
using udn::Matrix;
using udn::NPolicy;
using udn::ScenarioSpec;

namespace {

ScenarioSpec small_spec(std::vector<AlgorithmId> algorithms, std::size_t size = 4, std::size_t realizations = 3) {
  ScenarioSpec s;
  s.m_count = size;
  s.k_count = size;
  s.n_policy = NPolicy::fixed(2);
  s.algorithms = std::move(algorithms);
  s.realizations = realizations;
  s.base_seed = 100;
  s.workers = 2;
  return s;
}

std::string csv_of(const udn::ScenarioResult& r) {
  std::ostringstream out;
  udn::write_csv(out, r.records);
  return out.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("udn_harness_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(AlgorithmNames, RoundTrip) {
  for (AlgorithmId id : udn::kAllAlgorithms) EXPECT_EQ(udn::parse_algorithm(udn::algorithm_name(id)), id);
  EXPECT_THROW(udn::parse_algorithm("simulated-annealing"), std::invalid_argument);
}

TEST(NPolicyText, ParsesAndFormats) {
  EXPECT_EQ(udn::parse_n_policy("3").n, 3u);
  EXPECT_EQ(udn::format_n_policy(udn::parse_n_policy("fixed:2")), "fixed:2");
  EXPECT_EQ(udn::format_n_policy(udn::parse_n_policy("best")), "best");
  EXPECT_EQ(*udn::parse_n_policy("best:4").n_max, 4u);
  EXPECT_EQ(udn::parse_n_policy("intra-an").kind, NPolicy::Kind::IntraAn);
  for (const char* bad : {"", "0", "best:", "fixed:x", "2x", "-1"})
    EXPECT_THROW(udn::parse_n_policy(bad), std::invalid_argument) << bad;
}

TEST(DynamicN, Examples) {
  const auto inst = gen::instance(1, 4, 4);
  EXPECT_EQ(udn::dynamic_n_intra_an(inst, std::vector<std::size_t>{0, 1, 2, 3}), 1u);
  EXPECT_EQ(udn::dynamic_n_intra_an(inst, std::vector<std::size_t>{2, 2, 2, 1}), 3u);
  EXPECT_EQ(udn::dynamic_n_intra_an(inst, std::vector<std::size_t>{3, 3, 3, 3}), 4u);
  EXPECT_THROW(udn::dynamic_n_intra_an(inst, std::vector<std::size_t>{0, 1}), std::invalid_argument);
  EXPECT_THROW(udn::dynamic_n_intra_an(inst, std::vector<std::size_t>{0, 1, 2, 9}), std::invalid_argument);
}

TEST(ExhaustiveBestN, SingleUe) {
  const auto inst = udn::make_instance(Matrix{{100.0, 1.0}});
  const auto best = udn::exhaustive_best_n(inst, AlgorithmId::PowerAwareExact, 5);
  EXPECT_EQ(best.n, 1u);
  ASSERT_TRUE(best.solution);
}

TEST(ExhaustiveBestN, HeavyCrossGainsPreferOrthogonalization) {
  Matrix g(3, 3);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t m = 0; m < 3; ++m) g(k, m) = k == m ? 1e6 : 0.9e6;
  const auto inst = udn::make_instance(g);
  for (AlgorithmId id : {AlgorithmId::JointExact, AlgorithmId::PowerAwareExact})
    EXPECT_EQ(udn::exhaustive_best_n(inst, id, 3).n, 3u);
}

TEST(ExhaustiveBestN, IsolatedPairsPreferFullReuse) {
  Matrix g(3, 3);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t m = 0; m < 3; ++m) g(k, m) = k == m ? 1e6 : 1e-9;
  const auto inst = udn::make_instance(g);
  for (AlgorithmId id : {AlgorithmId::JointExact, AlgorithmId::PowerAwareApprox, AlgorithmId::PowerUnaware})
    EXPECT_EQ(udn::exhaustive_best_n(inst, id, 3).n, 1u);
}

TEST(ExhaustiveBestN, TiesGoToTheSmallestN) {
  const auto best = udn::exhaustive_best_n(4, [](std::size_t n) -> std::optional<udn::CoordinationSolution> {
    udn::CoordinationSolution s;
    s.common_rate = n == 1 ? 0.5 : 1.0;
    return s;
  });
  EXPECT_EQ(best.n, 2u);
  const auto none = udn::exhaustive_best_n(3, [](std::size_t) { return std::optional<udn::CoordinationSolution>{}; });
  EXPECT_EQ(none.n, 1u);
  EXPECT_FALSE(none.solution);
}

TEST(ExhaustiveBestNProperty, ArgmaxOverTheRange) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t size = gen::uniform_index(rng, 2, 6);
    const auto inst = gen::instance(rng(), size, size);
    const AlgorithmId id = trial % 2 ? AlgorithmId::PowerAwareApprox : AlgorithmId::PowerUnaware;
    const auto best = udn::exhaustive_best_n(inst, id, size);
    const double best_rate = best.solution ? best.solution->common_rate : 0.0;
    for (std::size_t n = 1; n <= size; ++n) {
      const auto s = udn::run_algorithm(inst, id, n, {});
      EXPECT_GE(best_rate, s ? s->common_rate : 0.0);
    }
  }
}

TEST(RandomPartition, SeparatesSameAnUesWhenPossible) {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = gen::uniform_index(rng, 1, 10), m = gen::uniform_index(rng, 1, 4);
    std::vector<std::size_t> pairing(k);
    for (auto& p : pairing) p = gen::uniform_index(rng, 0, m - 1);
    std::vector<std::size_t> load(m, 0);
    for (std::size_t p : pairing) ++load[p];
    const std::size_t n = *std::max_element(load.begin(), load.end());
    const auto labels = udn::random_partition(pairing, n, rng());
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_LT(labels[i], n);
      for (std::size_t j = 0; j < i; ++j)
        if (pairing[i] == pairing[j]) {
          EXPECT_NE(labels[i], labels[j]);
        }
    }
  }
}

TEST(RandomPartition, SeededAndUniform) {
  const std::vector<std::size_t> pairing{0, 1, 2, 3, 4, 5};
  EXPECT_EQ(udn::random_partition(pairing, 3, 9), udn::random_partition(pairing, 3, 9));
  std::vector<int> hits(3, 0);
  for (std::uint64_t seed = 0; seed < 3000; ++seed) ++hits[udn::random_partition(pairing, 3, seed)[0]];
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(Scenario, ValidationRejectsBadSpecs) {
  auto s = small_spec({AlgorithmId::FullOrth});
  s.realizations = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = small_spec({});
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = small_spec({AlgorithmId::FullOrth});
  s.n_policy = NPolicy::fixed(5);
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = small_spec({AlgorithmId::FullOrth});
  s.m_count = 3;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Scenario, RepeatedRunsAreByteIdentical) {
  const auto spec = small_spec({AlgorithmId::PowerAwareApprox, AlgorithmId::RandomPartition, AlgorithmId::FullOrth}, 5, 6);
  const std::string a = csv_of(udn::run_scenario(spec));
  auto single = spec;
  single.workers = 1;
  EXPECT_EQ(a, csv_of(udn::run_scenario(spec)));
  EXPECT_EQ(a, csv_of(udn::run_scenario(single)));
}

TEST(Scenario, RecordsSortedAndSeeded) {
  const auto spec = small_spec({AlgorithmId::FullOrth, AlgorithmId::PowerUnaware}, 4, 4);
  const auto r = udn::run_scenario(spec);
  ASSERT_EQ(r.records.size(), 8u);
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    EXPECT_EQ(r.records[i].realization, i / 2);
    EXPECT_EQ(r.records[i].seed, 100 + i / 2);
    EXPECT_EQ(r.records[i].algorithm, i % 2 ? AlgorithmId::FullOrth : AlgorithmId::PowerUnaware);
  }
}

TEST(Scenario, FullOrthMatchesClosedForm) {
  const auto spec = small_spec({AlgorithmId::FullOrth}, 6, 5);
  for (const auto& rec : udn::run_scenario(spec).records) {
    udn::SystemConfig c = spec.config;
    c.rng_seed = rec.seed;
    const auto inst = udn::generate_instance(6, 6, c);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < 6; ++k) {
      double best = 0.0;
      for (std::size_t m = 0; m < 6; ++m) best = std::max(best, inst.gain(k, m));
      worst = std::min(worst, c.p_max * best);
    }
    EXPECT_NEAR(rec.common_rate, std::log2(1.0 + worst) / 6.0, 1e-12);
    EXPECT_EQ(rec.n, 6u);
  }
}

TEST(Scenario, ExactDominatesGreedyRowByRow) {
  const auto spec = small_spec({AlgorithmId::JointExact, AlgorithmId::PowerAwareExact, AlgorithmId::PowerUnaware,
                                AlgorithmId::RandomPartition},
                               4, 10);
  const auto r = udn::run_scenario(spec);
  for (std::size_t i = 0; i < r.records.size(); i += 4) {
    ASSERT_EQ(r.records[i].algorithm, AlgorithmId::JointExact);
    for (std::size_t j = 1; j < 4; ++j)
      EXPECT_LE(r.records[i + j].common_rate, r.records[i].common_rate * (1.0 + 1e-9));
  }
}

TEST(Scenario, SumRateIsKTimesCommonRate) {
  const auto spec = small_spec({AlgorithmId::PowerAwareApprox, AlgorithmId::FullReuse}, 5, 4);
  for (const auto& rec : udn::run_scenario(spec).records) {
    EXPECT_EQ(rec.sum_rate, 5.0 * rec.common_rate);
    if (rec.theta > 0.0) {
      EXPECT_NEAR(rec.common_rate, std::log2(1.0 + rec.theta) / static_cast<double>(rec.n), 1e-12);
    }
  }
}

TEST(Scenario, CapacityErrorsAreReportedPerAlgorithm) {
  auto spec = small_spec({AlgorithmId::JointExact, AlgorithmId::FullOrth}, 9, 2);
  const auto r = udn::run_scenario(spec);
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].algorithm, AlgorithmId::JointExact);
  ASSERT_EQ(r.records.size(), 2u);
  for (const auto& rec : r.records) EXPECT_EQ(rec.algorithm, AlgorithmId::FullOrth);
}

TEST(Scenario, IntraAnAndBestPolicies) {
  auto spec = small_spec({AlgorithmId::PowerUnaware}, 6, 4);
  spec.n_policy = NPolicy::intra_an();
  for (const auto& rec : udn::run_scenario(spec).records) {
    udn::SystemConfig c = spec.config;
    c.rng_seed = rec.seed;
    const auto inst = udn::generate_instance(6, 6, c);
    EXPECT_EQ(rec.n, udn::dynamic_n_intra_an(inst, udn::pair_best_gain(inst)));
  }
  spec.n_policy = NPolicy::best(3);
  for (const auto& rec : udn::run_scenario(spec).records) EXPECT_LE(rec.n, 3u);
}

TEST(Aggregates, QuantilesInterpolateLinearly) {
  EXPECT_EQ(udn::quantile({}, 0.5), 0.0);
  EXPECT_EQ(udn::quantile({3.0}, 0.05), 3.0);
  EXPECT_DOUBLE_EQ(udn::quantile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(udn::quantile({0.0, 10.0}, 0.05), 0.5);
  const auto a = udn::aggregate({1.0, 2.0, 3.0, 10.0});
  EXPECT_DOUBLE_EQ(a.mean, 4.0);
  EXPECT_DOUBLE_EQ(a.median, 2.5);
  EXPECT_DOUBLE_EQ(a.p5, 1.15);
}

TEST(Emit, EmptyRecordsGiveHeaderOnly) {
  const auto dir = scratch_dir("empty");
  udn::emit_results({}, (dir / "r.csv").string(), (dir / "s.json").string());
  EXPECT_EQ(slurp(dir / "r.csv"), std::string(udn::kCsvHeader) + "\n");
  const auto j = udn::read_json_file((dir / "s.json").string());
  EXPECT_TRUE(j.at("algorithms").empty());
  EXPECT_TRUE(j.at("errors").empty());
}

TEST(Emit, TwoRecordsGiveThreeLines) {
  const auto dir = scratch_dir("two");
  udn::ScenarioResult r;
  r.records = {{0, 7, AlgorithmId::FullOrth, 3, 12.5, 1.25, 3.75, 4.0},
               {1, 8, AlgorithmId::FullOrth, 3, 0.0, 0.0, 0.0, 9.0}};
  udn::emit_results(r, (dir / "r.csv").string(), (dir / "s.json").string());
  const std::string csv = slurp(dir / "r.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("0,7,full-orth,3,12.5,1.25,3.75,0\n"), std::string::npos);
  const auto j = udn::read_json_file((dir / "s.json").string());
  EXPECT_EQ(j["algorithms"]["full-orth"]["infeasible"], 1);
  udn::emit_results(r, (dir / "t.csv").string(), (dir / "t.json").string(), true);
  EXPECT_NE(slurp(dir / "t.csv").find(",9\n"), std::string::npos);
}

TEST(Emit, SummaryMeansRoundTripThroughTheCsv) {
  const auto spec = small_spec({AlgorithmId::PowerAwareApprox, AlgorithmId::PowerUnaware, AlgorithmId::FullOrth}, 6, 8);
  const auto result = udn::run_scenario(spec);
  const auto dir = scratch_dir("roundtrip");
  udn::emit_results(result, (dir / "r.csv").string(), (dir / "s.json").string());
  std::ifstream in(dir / "r.csv");
  const auto records = udn::read_csv(in);
  ASSERT_EQ(records.size(), result.records.size());
  const auto j = udn::read_json_file((dir / "s.json").string());
  for (AlgorithmId id : spec.algorithms) {
    double common = 0.0, sum = 0.0;
    int count = 0;
    for (const auto& r : records)
      if (r.algorithm == id) {
        common += r.common_rate;
        sum += r.sum_rate;
        ++count;
      }
    const auto& entry = j["algorithms"][std::string(udn::algorithm_name(id))];
    EXPECT_NEAR(common / count, entry["common_rate_bps_hz"]["mean"].get<double>(), 1e-12);
    EXPECT_NEAR(sum / count, entry["sum_rate_bps_hz"]["mean"].get<double>(), 1e-12);
  }
}

TEST(Emit, IoFailuresNameThePath) {
  try {
    udn::emit_results({}, "/nonexistent-dir/r.csv", "/nonexistent-dir/s.json");
    FAIL() << "expected an error";
  } catch (const udn::Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/r.csv"), std::string::npos);
  }
  EXPECT_THROW(udn::read_json_file("/nonexistent-dir/x.json"), udn::Error);
  std::istringstream bad("not,a,header\n");
  EXPECT_THROW(udn::read_csv(bad), udn::Error);
}

TEST(SpecJson, LoadsFromFileWithDefaults) {
  const auto dir = scratch_dir("spec");
  std::ofstream(dir / "spec.json") << R"({"m_count": 5, "k_count": 4, "n_policy": "best:3",
    "algorithms": ["power-unaware", "full-orth"], "realizations": 2, "base_seed": 11,
    "config": {"pathloss_exponent": 3.5}})";
  const auto spec = udn::read_json_file((dir / "spec.json").string()).get<ScenarioSpec>();
  EXPECT_EQ(spec.m_count, 5u);
  EXPECT_EQ(spec.n_policy.kind, NPolicy::Kind::ExhaustiveBest);
  EXPECT_EQ(spec.algorithms.size(), 2u);
  EXPECT_EQ(spec.config.pathloss_exponent, 3.5);
  EXPECT_EQ(spec.config.area_side, 1000.0);
  const udn::json again = spec;
  EXPECT_EQ(again.get<ScenarioSpec>().base_seed, 11u);
  EXPECT_EQ(udn::json::parse(R"({"m_count": 3, "k_count": 3, "n_policy": 2})").get<ScenarioSpec>().n_policy.n, 2u);
  EXPECT_THROW(udn::json::parse(R"({"m_count": 3, "k_count": 3, "algorithms": ["magic"]})").get<ScenarioSpec>(),
               std::invalid_argument);
}

TEST(Serialization, InstanceAndAssignmentRoundTrip) {
  const auto inst = gen::instance(71, 4, 3);
  const udn::json j = inst;
  const auto back = udn::json::parse(j.dump()).get<udn::NetworkInstance>();
  EXPECT_EQ(back.gains, inst.gains);
  EXPECT_EQ(back.deployment, inst.deployment);
  const udn::Assignment a{{0, 2, 3}, {1, 0, 1}, 2};
  EXPECT_EQ(udn::json(a).get<udn::Assignment>(), a);
  udn::json bad = j;
  bad["gains"] = {{1.0, 2.0}};
  EXPECT_THROW(bad.get<udn::NetworkInstance>(), std::invalid_argument);
}

TEST(Serialization, SolutionCarriesItsFields) {
  const auto inst = gen::instance(72, 3, 3);
  const auto s = udn::solve_joint_ppp(inst, 2);
  const udn::json j = s;
  EXPECT_EQ(j["assignment"].get<udn::Assignment>(), s.assignment);
  EXPECT_EQ(j["common_sinr"].get<double>(), s.common_sinr);
  EXPECT_EQ(j["stats"]["bisection_iterations"].get<std::size_t>(), s.stats.bisection_iterations);
}
