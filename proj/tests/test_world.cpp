#include <catch2/catch_amalgamated.hpp>

#include "dechrl/world.hpp"

using namespace dechrl;

namespace {

// Independent oracle: Simpson-rule integration of the Gaussian density over
// each unit bin, then renormalization over {1..tau_max}.
double gauss_pdf(double x, double mu, double sigma) {
  double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

std::vector<double> discretize_oracle(double mu, double sigma, int tau_max) {
  std::vector<double> p(tau_max, 0.0);
  const int n = 2000;  // SIMPSON panels per bin
  for (int tau = 1; tau <= tau_max; ++tau) {
    double a = tau - 0.5, b = tau + 0.5;
    double h = (b - a) / n;
    double s = gauss_pdf(a, mu, sigma) + gauss_pdf(b, mu, sigma);
    for (int i = 1; i < n; ++i) {
      s += gauss_pdf(a + i * h, mu, sigma) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    p[tau - 1] = s * h / 3.0;
  }
  double total = 0.0;
  for (double v : p) total += v;
  for (double& v : p) v /= total;
  return p;
}

WorldConfig cfg(int tau_max = 4, double sigma = 0.0, uint64_t seed = 1) {
  WorldConfig c;
  c.task_name = "GetSilverore";
  c.tau_max = tau_max;
  c.sigma_delay = sigma;
  c.rng_seed = seed;
  return c;
}

}  // namespace

TEST_CASE("discretize_delay degenerate sigma gives a point mass") {
  auto p = discretize_delay(2.0, 0.0, 4);
  REQUIRE(p == std::vector<double>{0.0, 1.0, 0.0, 0.0});
}

TEST_CASE("discretize_delay is symmetric about a half-integer mean") {
  auto p = discretize_delay(2.5, 0.4, 4);
  REQUIRE(p[1] == Catch::Approx(p[2]).margin(1e-12));
  REQUIRE(p[0] == Catch::Approx(p[3]).margin(1e-12));
  double sum = p[0] + p[1] + p[2] + p[3];
  REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("discretize_delay matches the numerical integration oracle") {
  auto p = discretize_delay(3.0, 0.8, 4);
  auto oracle = discretize_oracle(3.0, 0.8, 4);
  for (int i = 0; i < 4; ++i) {
    REQUIRE(p[i] == Catch::Approx(oracle[i]).margin(1e-6));
  }
  // Frozen oracle values for this instance.
  REQUIRE(p[0] == Catch::Approx(0.0304603).margin(1e-5));
  REQUIRE(p[1] == Catch::Approx(0.2431977).margin(1e-5));
  REQUIRE(p[2] == Catch::Approx(0.4831443).margin(1e-5));
  REQUIRE(p[3] == Catch::Approx(0.2431977).margin(1e-5));
}

TEST_CASE("discretize_delay rejects bad configuration") {
  REQUIRE_THROWS_AS(discretize_delay(2.0, 0.4, 0), ConfigError);
  REQUIRE_THROWS_AS(discretize_delay(2.0, -0.1, 4), ConfigError);
}

TEST_CASE("make_task instantiates the hidden rule sets") {
  auto w = make_task(cfg());
  REQUIRE(w.spec().rules.size() == 5);
  REQUIRE(w.spec().chain_depth(w.spec().goal_var) == 4);

  auto fire = builtin_task("Fire2Burn");
  REQUIRE(fire.rules.size() == 4);
  auto wet = builtin_task("Wood2Wet");
  REQUIRE(wet.rules.size() == 3);

  WorldConfig bad = cfg();
  bad.task_name = "bogus";
  REQUIRE_THROWS_AS(make_task(bad), ConfigError);
}

TEST_CASE("deterministic delay arrival lands exactly at mu") {
  auto w = make_task(cfg(4, 0.0));
  const int wood = 0;
  const int chop = w.spec().action_index("chop_wood");
  w.step(chop);           // t=0: trigger, arrival scheduled at t+2
  REQUIRE(w.state()[wood] == 0);
  w.step(0);              // t=1
  REQUIRE(w.state()[wood] == 1);
}

TEST_CASE("unsatisfied parents schedule nothing") {
  auto w = make_task(cfg(4, 0.0));
  const int craft = w.spec().action_index("craft_stick");
  auto before = w.state();
  w.step(craft);
  for (int i = 0; i < 6; ++i) w.step(0);
  REQUIRE(w.state() == before);
  REQUIRE(w.events().empty());
}

TEST_CASE("scripted policy completes the chain on the deterministic instance") {
  auto w = make_task(cfg(4, 0.0));
  const auto& s = w.spec();
  auto act = [&](const std::string& name) { w.step(s.action_index(name)); };
  auto wait = [&](int n) { for (int i = 0; i < n; ++i) w.step(0); };
  act("chop_wood");            // wood arrives after 2
  act("mine_stone");           // stone arrives after 2
  wait(2);
  act("craft_stick");          // stick after 3; consumes wood
  wait(3);
  act("craft_stonepickaxe");   // pickaxe after 4; consumes stone+stick
  wait(4);
  act("mine_silverore");       // silverore after 3
  wait(3);
  REQUIRE(w.state()[s.var_index("silverore")] >= 1);
}

TEST_CASE("empirical delay histogram matches discretize_delay") {
  auto expected = discretize_delay(2.0, 0.8, 4);
  auto w = make_task(cfg(4, 0.8, 7));
  const int chop = w.spec().action_index("chop_wood");
  std::vector<double> hist(4, 0.0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    w.reset(1000 + i);
    w.step(chop);
    for (int t = 0; t < 4; ++t) w.step(0);
    bool fired = false;
    for (const auto& e : w.events()) {
      if (e.var == 0 && e.delta > 0) {
        REQUIRE(!fired);  // every scheduled effect fires exactly once
        hist[e.step - 1] += 1.0;
        fired = true;
      }
    }
    REQUIRE(fired);
  }
  for (double& h : hist) h /= n;
  REQUIRE(total_variation(hist, expected) <= 0.02);
}

TEST_CASE("same seed reproduces identical trajectories") {
  auto w1 = make_task(cfg(4, 0.8, 42));
  auto w2 = make_task(cfg(4, 0.8, 42));
  Rng action_rng(5);
  std::vector<int> actions;
  for (int i = 0; i < 60; ++i) actions.push_back(action_rng.uniform_int(6));
  std::vector<FactoredState> t1, t2;
  for (int a : actions) { w1.step(a); t1.push_back(w1.state()); }
  for (int a : actions) { w2.step(a); t2.push_back(w2.state()); }
  REQUIRE(t1 == t2);
}

TEST_CASE("stepping past the horizon is an error") {
  WorldConfig c = cfg(4, 0.0);
  c.episode_horizon = 6;
  auto w = make_task(c);
  for (int i = 0; i < 6; ++i) w.step(0);
  REQUIRE(w.finished());
  REQUIRE_THROWS_AS(w.step(0), ContractError);
}

TEST_CASE("construction validates delay means against tau_max") {
  WorldConfig c = cfg(3, 0.0);  // GetSilverore needs mu up to 4
  REQUIRE_THROWS_AS(make_task(c), ConfigError);
}

TEST_CASE("construction enforces per-effect delay consistency and acyclicity") {
  TaskSpec s;
  s.name = "inconsistent";
  s.variables = {"a", "b"};
  s.actions = {"noop", "go"};
  s.rules = {
      {1, {{0, -1, 1, 0}}, 1, 2.0, -1.0},
      {1, {{-1, 1, 1, 0}}, 1, 3.0, -1.0},  // same effect, different mean
  };
  WorldConfig c = cfg(4, 0.0);
  REQUIRE_THROWS_AS(World(s, c), ConfigError);

  TaskSpec cyc;
  cyc.name = "cyclic";
  cyc.variables = {"a", "b"};
  cyc.actions = {"noop"};
  cyc.rules = {
      {0, {{1, -1, 1, 0}}, 1, 2.0, -1.0},
      {1, {{0, -1, 1, 0}}, 1, 2.0, -1.0},
  };
  REQUIRE_THROWS_AS(World(cyc, c), ConfigError);
}

TEST_CASE("counts are capped") {
  TaskSpec s;
  s.name = "cap";
  s.variables = {"x"};
  s.actions = {"noop", "make"};
  s.rules = {{0, {{-1, 1, 1, 0}}, 1, 1.0, 0.0}};
  WorldConfig c;
  c.tau_max = 1;
  c.episode_horizon = 600;
  World w(s, c);
  for (int i = 0; i < 400; ++i) w.step(1);
  REQUIRE(w.state()[0] == kMaxCount);
}

TEST_CASE("task rule files round-trip") {
  auto spec = tasks::get_silverore();
  auto j = task_to_json(spec);
  auto back = task_from_json(j);
  REQUIRE(back.variables == spec.variables);
  REQUIRE(back.actions == spec.actions);
  REQUIRE(back.rules.size() == spec.rules.size());
  REQUIRE(back.goal_var == spec.goal_var);

  auto path = std::filesystem::temp_directory_path() / "dechrl_task_roundtrip.json";
  {
    std::ofstream out(path);
    out << j.dump(2);
  }
  auto loaded = load_task_file(path.string());
  REQUIRE(loaded.variables == spec.variables);
  std::filesystem::remove(path);
}
