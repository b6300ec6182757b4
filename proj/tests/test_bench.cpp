#include <catch2/catch_amalgamated.hpp>

#include "dechrl/bench.hpp"

using namespace dechrl;

namespace {

std::vector<MetricsRow> fake_log(const std::vector<int>& successes,
                                 const std::vector<int>& distances) {
  std::vector<MetricsRow> rows;
  for (size_t i = 0; i < successes.size(); ++i) {
    MetricsRow r;
    r.episode = static_cast<long>(i);
    r.variant = "dechrl";
    r.success = successes[i];
    r.distance = distances[i];
    rows.push_back(r);
  }
  return rows;
}

TaskSpec mini_task() {
  TaskSpec s;
  s.name = "mini";
  s.variables = {"x"};
  s.actions = {"noop", "make"};
  s.rules = {{0, {{-1, 1, 1, 0}}, 1, 1.0, 0.0}};
  s.goal_var = 0;
  return s;
}

ExperimentSpec mini_spec(const std::string& out = "") {
  ExperimentSpec spec;
  spec.custom_task = mini_task();
  spec.task_name = "mini";
  spec.tau_max = 2;
  spec.sigma_delay = 0.0;
  spec.seeds = 2;
  spec.episodes = 10000;
  spec.out_dir = out;
  spec.overrides.n_per_subgoal = 40;
  spec.overrides.train.unit_episodes = 150;
  spec.overrides.max_rounds = 3;
  return spec;
}

}  // namespace

TEST_CASE("asr averages the last 100 evaluation rollouts") {
  std::vector<int> s(150, 0);
  for (size_t i = 50; i < 150; ++i) s[i] = 1;  // the last 100 all succeed
  auto log = fake_log(s, std::vector<int>(150, 0));
  REQUIRE(asr(log) == 1.0);

  std::vector<int> alt(200);
  for (size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2;
  REQUIRE(asr(fake_log(alt, std::vector<int>(200, 0))) == 0.5);
}

TEST_CASE("asr warns below 100 rows and errors on an empty log") {
  std::ostringstream warn;
  auto log = fake_log({1, 0, 1, 1}, {0, 1, 0, 0});
  REQUIRE(asr(log, &warn) == 0.75);
  REQUIRE(warn.str().find("warning") != std::string::npos);
  REQUIRE_THROWS_AS(asr({}), ContractError);
}

TEST_CASE("adc averages the subgoal distance over the same window") {
  auto log = fake_log(std::vector<int>(120, 1), std::vector<int>(120, 0));
  REQUIRE(adc(log) == 0.0);
  std::vector<int> d(120, 3);
  REQUIRE(adc(fake_log(std::vector<int>(120, 0), d)) == 3.0);
}

TEST_CASE("kl_per_edge matches the closed form") {
  std::vector<std::vector<double>> truth{{0.5, 0.5}};
  REQUIRE(kl_per_edge(truth, truth)[0] == Catch::Approx(0.0).margin(1e-12));

  std::vector<std::vector<double>> learned{{0.25, 0.75}};
  double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  REQUIRE(kl_per_edge(truth, learned)[0] == Catch::Approx(expected).margin(1e-12));
  REQUIRE(expected == Catch::Approx(0.1438).margin(2e-4));

  std::vector<std::vector<double>> wrong{{0.2, 0.3, 0.5}};
  REQUIRE_THROWS_AS(kl_per_edge(truth, wrong), ContractError);
}

TEST_CASE("median of even and odd sample counts") {
  REQUIRE(median({3.0, 1.0, 2.0}) == 2.0);
  REQUIRE(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  REQUIRE_THROWS_AS(median({}), ContractError);
}

TEST_CASE("kappa requires the simplified variant") {
  auto spec = mini_spec();
  spec.kappa = 2;
  REQUIRE_THROWS_AS(run_experiment(spec), ConfigError);
}

TEST_CASE("run_experiment writes per-seed directories and summaries") {
  auto dir = std::filesystem::temp_directory_path() / "dechrl_experiment";
  std::filesystem::remove_all(dir);
  auto spec = mini_spec(dir.string());
  auto result = run_experiment(spec);
  write_experiment_outputs(result);

  REQUIRE(result.outcomes.size() == 2);
  REQUIRE(result.median_asr() == 1.0);
  REQUIRE(result.median_adc() == 0.0);
  REQUIRE(std::filesystem::exists(dir / "dechrl" / "seed_0" / "metrics.csv"));
  REQUIRE(std::filesystem::exists(dir / "dechrl" / "seed_1" / "metrics.csv"));
  REQUIRE(std::filesystem::exists(dir / "summary.csv"));
  REQUIRE(std::filesystem::exists(dir / "summary.txt"));

  auto table = summary_table(result);
  REQUIRE(table.find("median ASR") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("metrics.csv is byte-identical across reruns of the same seed") {
  auto dir1 = std::filesystem::temp_directory_path() / "dechrl_rerun_a";
  auto dir2 = std::filesystem::temp_directory_path() / "dechrl_rerun_b";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  auto spec = mini_spec();
  spec.seeds = 1;
  spec.parallel = false;

  spec.out_dir = dir1.string();
  run_experiment(spec);
  spec.out_dir = dir2.string();
  run_experiment(spec);

  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  auto a = slurp(dir1 / "dechrl" / "seed_0" / "metrics.csv");
  auto b = slurp(dir2 / "dechrl" / "seed_0" / "metrics.csv");
  REQUIRE(!a.empty());
  REQUIRE(a == b);
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}
