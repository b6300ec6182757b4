#ifndef DECHRL_WORLD_HPP_
#define DECHRL_WORLD_HPP_

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "dechrl/common.hpp"
#include "json.hpp"

namespace dechrl {

/// Observation: one non-negative count per sub-state variable.
using FactoredState = std::vector<int>;

// Counts are capped so tabular models stay bounded.
inline constexpr int kMaxCount = 255;

// ---------------------------------------------------------------------------
// Task description
// ---------------------------------------------------------------------------

/// One cause condition of a rule: either a state variable with a minimum
/// count (optionally consumed on trigger) or a required action.
struct ParentCond {
  int var = -1;     // state variable index, or -1
  int action = -1;  // action index, or -1
  int min_count = 1;
  int consume = 0;  // decrement applied to `var` when the rule triggers

  bool is_var() const { return var >= 0; }
};

/// Hidden environment dynamics: parent conditions -> delayed effect delta.
/// All rules sharing an effect variable share one (mu, sigma).
struct CausalRule {
  int effect = -1;
  std::vector<ParentCond> parents;
  int delta = 1;
  double delay_mean = 1.0;
  double delay_sigma = -1.0;  // negative: inherit the world's sigma_delay
};

struct TaskSpec {
  std::string name;
  std::vector<std::string> variables;
  std::vector<std::string> actions;  // index 0 is conventionally a no-op
  std::vector<CausalRule> rules;
  int goal_var = -1;

  int num_vars() const { return static_cast<int>(variables.size()); }
  int num_actions() const { return static_cast<int>(actions.size()); }

  int var_index(const std::string& n) const {
    for (size_t i = 0; i < variables.size(); ++i) {
      if (variables[i] == n) return static_cast<int>(i);
    }
    throw ConfigError("unknown variable: " + n);
  }
  int action_index(const std::string& n) const {
    for (size_t i = 0; i < actions.size(); ++i) {
      if (actions[i] == n) return static_cast<int>(i);
    }
    throw ConfigError("unknown action: " + n);
  }

  /// State-variable parents per effect, deduplicated.
  std::vector<std::set<int>> var_parents() const {
    std::vector<std::set<int>> pa(variables.size());
    for (const auto& r : rules) {
      for (const auto& p : r.parents) {
        if (p.is_var()) pa[r.effect].insert(p.var);
      }
    }
    return pa;
  }

  /// True iff the parent->effect graph over state variables is acyclic.
  bool is_dag() const {
    auto pa = var_parents();
    const int n = num_vars();
    std::vector<int> color(n, 0);
    std::vector<int> stack;
    for (int start = 0; start < n; ++start) {
      if (color[start] != 0) continue;
      stack.push_back(start);
      while (!stack.empty()) {
        int v = stack.back();
        if (color[v] == 0) {
          color[v] = 1;
          for (int p : pa[v]) {
            if (color[p] == 1) return false;
            if (color[p] == 0) stack.push_back(p);
          }
        } else {
          if (color[v] == 1) color[v] = 2;
          stack.pop_back();
        }
      }
    }
    return true;
  }

  /// Ancestor closure of `var` (inclusive) in the rule graph. This is the
  /// set of sub-goals on the causal path to `var`.
  std::set<int> causal_ancestors(int var) const {
    auto pa = var_parents();
    std::set<int> seen;
    std::vector<int> stack{var};
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      if (!seen.insert(v).second) continue;
      for (int p : pa[v]) stack.push_back(p);
    }
    return seen;
  }

  /// Longest causal chain ending at `var`, counting the action->variable
  /// link as one level (0 for variables that are never an effect).
  int chain_depth(int var) const {
    auto pa = var_parents();
    std::set<int> effects;
    for (const auto& r : rules) effects.insert(r.effect);
    std::map<int, int> memo;
    auto depth = [&](auto&& self, int v) -> int {
      auto it = memo.find(v);
      if (it != memo.end()) return it->second;
      if (!effects.count(v)) return memo[v] = 0;
      int d = 1;
      for (int p : pa[v]) d = std::max(d, self(self, p) + 1);
      memo[v] = d;
      return d;
    };
    return depth(depth, var);
  }
};

struct WorldConfig {
  std::string task_name = "GetSilverore";
  int tau_max = 4;
  double sigma_delay = 0.4;
  int episode_horizon = -1;  // negative: 50 * tau_max
  uint64_t rng_seed = 0;

  int resolved_horizon() const { return episode_horizon > 0 ? episode_horizon : 50 * tau_max; }
};

// ---------------------------------------------------------------------------
// Delay discretization
// ---------------------------------------------------------------------------

/// Categorical distribution over {1..tau_max} with P(tau) proportional to the
/// N(mu, sigma^2) mass on [tau-0.5, tau+0.5], truncated and renormalized.
/// sigma == 0 collapses to a point mass at clamp(round(mu), 1, tau_max).
inline std::vector<double> discretize_delay(double mu, double sigma, int tau_max) {
  if (tau_max < 1) throw ConfigError("discretize_delay: tau_max must be >= 1");
  if (sigma < 0.0) throw ConfigError("discretize_delay: sigma must be >= 0");
  std::vector<double> p(tau_max, 0.0);
  int point = static_cast<int>(clamp(std::lround(mu), 1, tau_max));
  if (sigma == 0.0) {
    p[point - 1] = 1.0;
    return p;
  }
  double total = 0.0;
  for (int tau = 1; tau <= tau_max; ++tau) {
    double mass = normal_cdf((tau + 0.5 - mu) / sigma) - normal_cdf((tau - 0.5 - mu) / sigma);
    p[tau - 1] = mass;
    total += mass;
  }
  if (total <= 0.0) {
    // All mass fell outside the truncation window.
    std::fill(p.begin(), p.end(), 0.0);
    p[point - 1] = 1.0;
    return p;
  }
  for (double& v : p) v /= total;
  return p;
}

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

/// Deterministic-core simulator. Rules trigger on (state, action), consume
/// resources immediately and land their effect after a stochastic integer
/// delay drawn from the effect's hidden discretized-Gaussian distribution.
class World {
 public:
  /// A state change that became visible at `step`: positive deltas are
  /// delayed landings, negative deltas are consumptions at trigger time.
  struct Event {
    int step;
    int var;
    int delta;
  };

  World(TaskSpec spec, WorldConfig config)
      : spec_(std::move(spec)), config_(std::move(config)) {
    validate();
    delay_rows_.assign(spec_.num_vars(), {});
    for (const auto& r : spec_.rules) {
      double sigma = r.delay_sigma >= 0.0 ? r.delay_sigma : config_.sigma_delay;
      delay_rows_[r.effect] = discretize_delay(r.delay_mean, sigma, config_.tau_max);
    }
    reset(config_.rng_seed);
  }

  void reset(uint64_t seed) {
    rng_.seed(seed);
    state_.assign(spec_.num_vars(), 0);
    step_ = 0;
    pending_.clear();
    events_.clear();
  }

  const TaskSpec& spec() const { return spec_; }
  const WorldConfig& config() const { return config_; }
  const FactoredState& state() const { return state_; }
  int current_step() const { return step_; }
  int horizon() const { return config_.resolved_horizon(); }
  bool finished() const { return step_ >= horizon(); }
  const std::vector<Event>& events() const { return events_; }

  /// Hidden ground-truth delay distribution of an effect variable (empty for
  /// variables that are never an effect).
  const std::vector<double>& true_delay_row(int effect) const { return delay_rows_[effect]; }

  /// Advances one step. Returns the new step index.
  int step(int action) {
    if (finished()) throw ContractError("step: episode already finished");
    if (action < 0 || action >= spec_.num_actions()) throw ContractError("step: bad action");
    const int t = step_;

    // All rules are checked against the pre-step state, then consumptions are
    // applied together; overlapping pending effects stay independent.
    std::vector<const CausalRule*> fired;
    for (const auto& r : spec_.rules) {
      bool ok = true;
      for (const auto& p : r.parents) {
        if (p.is_var()) {
          if (state_[p.var] < p.min_count) ok = false;
        } else if (p.action != action) {
          ok = false;
        }
        if (!ok) break;
      }
      if (ok) fired.push_back(&r);
    }
    for (const auto* r : fired) {
      for (const auto& p : r->parents) {
        if (p.is_var() && p.consume > 0) {
          state_[p.var] = std::max(0, state_[p.var] - p.consume);
          events_.push_back({t + 1, p.var, -p.consume});
        }
      }
      int d = 1 + rng_.categorical(delay_rows_[r->effect]);
      pending_.emplace(t + d, std::pair<int, int>{r->effect, r->delta});
    }

    auto [lo, hi] = pending_.equal_range(t + 1);
    for (auto it = lo; it != hi; ++it) {
      auto [var, delta] = it->second;
      state_[var] = std::min(kMaxCount, std::max(0, state_[var] + delta));
      events_.push_back({t + 1, var, delta});
    }
    pending_.erase(lo, hi);

    step_ = t + 1;
    return step_;
  }

  /// True if `var` had a positive landing in the step interval (from, to].
  bool increased_in(int var, int from, int to) const {
    for (const auto& e : events_) {
      if (e.var == var && e.delta > 0 && e.step > from && e.step <= to) return true;
    }
    return false;
  }

  /// True if `var` was decremented in the step interval (from, to].
  bool decreased_in(int var, int from, int to) const {
    for (const auto& e : events_) {
      if (e.var == var && e.delta < 0 && e.step > from && e.step <= to) return true;
    }
    return false;
  }

 private:
  void validate() const {
    if (config_.tau_max < 1) throw ConfigError("tau_max must be >= 1");
    if (config_.sigma_delay < 0.0) throw ConfigError("sigma_delay must be >= 0");
    if (config_.resolved_horizon() <= config_.tau_max)
      throw ConfigError("episode_horizon must exceed tau_max");
    if (spec_.rules.empty() && spec_.num_vars() == 0)
      throw ConfigError("task has no variables");
    std::vector<std::optional<std::pair<double, double>>> per_effect(spec_.num_vars());
    for (const auto& r : spec_.rules) {
      if (r.effect < 0 || r.effect >= spec_.num_vars()) throw ConfigError("rule effect out of range");
      long mu = std::lround(r.delay_mean);
      if (mu < 1 || mu > config_.tau_max)
        throw ConfigError("rule delay mean " + std::to_string(r.delay_mean) +
                          " outside [1, tau_max] for effect " + spec_.variables[r.effect]);
      double sigma = r.delay_sigma >= 0.0 ? r.delay_sigma : config_.sigma_delay;
      auto& slot = per_effect[r.effect];
      if (slot && (slot->first != r.delay_mean || slot->second != sigma))
        throw ConfigError("rules for effect " + spec_.variables[r.effect] +
                          " disagree on the delay distribution");
      slot = {r.delay_mean, sigma};
      for (const auto& p : r.parents) {
        if (p.is_var() && (p.var < 0 || p.var >= spec_.num_vars()))
          throw ConfigError("rule parent variable out of range");
        if (!p.is_var() && (p.action < 0 || p.action >= spec_.num_actions()))
          throw ConfigError("rule parent action out of range");
      }
    }
    if (!spec_.is_dag()) throw ConfigError("rule graph has a cycle");
  }

  TaskSpec spec_;
  WorldConfig config_;
  FactoredState state_;
  int step_ = 0;
  std::multimap<int, std::pair<int, int>> pending_;  // fire step -> (var, delta)
  std::vector<Event> events_;
  std::vector<std::vector<double>> delay_rows_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Built-in tasks
//
// Abstract factored crafting chains. Navigation is folded into the actions:
// "collect wood" is a single action whose rule has no state preconditions.
// Mean delays are configuration defaults and can be overridden via rule files.
// ---------------------------------------------------------------------------

namespace tasks {

inline TaskSpec get_silverore() {
  TaskSpec s;
  s.name = "GetSilverore";
  s.variables = {"wood", "stone", "stick", "stonepickaxe", "silverore"};
  s.actions = {"noop", "chop_wood", "mine_stone", "craft_stick", "craft_stonepickaxe",
               "mine_silverore"};
  const int wood = 0, stone = 1, stick = 2, pickaxe = 3, silverore = 4;
  s.rules = {
      {wood, {{-1, 1, 1, 0}}, 1, 2.0, -1.0},
      {stone, {{-1, 2, 1, 0}}, 1, 2.0, -1.0},
      {stick, {{wood, -1, 1, 1}, {-1, 3, 1, 0}}, 1, 3.0, -1.0},
      {pickaxe, {{stone, -1, 1, 1}, {stick, -1, 1, 1}, {-1, 4, 1, 0}}, 1, 4.0, -1.0},
      {silverore, {{pickaxe, -1, 1, 0}, {-1, 5, 1, 0}}, 1, 3.0, -1.0},
  };
  s.goal_var = silverore;
  return s;
}

inline TaskSpec get_iron() {
  TaskSpec s;
  s.name = "GetIron";
  s.variables = {"wood", "stone", "stick", "stonepickaxe", "ironore", "coal", "iron"};
  s.actions = {"noop",        "chop_wood",   "mine_stone", "craft_stick",
               "craft_stonepickaxe", "mine_ironore", "mine_coal",  "smelt_iron"};
  const int wood = 0, stone = 1, stick = 2, pickaxe = 3, ironore = 4, coal = 5, iron = 6;
  s.rules = {
      {wood, {{-1, 1, 1, 0}}, 1, 2.0, -1.0},
      {stone, {{-1, 2, 1, 0}}, 1, 2.0, -1.0},
      {stick, {{wood, -1, 1, 1}, {-1, 3, 1, 0}}, 1, 3.0, -1.0},
      {pickaxe, {{stone, -1, 1, 1}, {stick, -1, 1, 1}, {-1, 4, 1, 0}}, 1, 4.0, -1.0},
      {ironore, {{pickaxe, -1, 1, 0}, {-1, 5, 1, 0}}, 1, 3.0, -1.0},
      {coal, {{pickaxe, -1, 1, 0}, {-1, 6, 1, 0}}, 1, 3.0, -1.0},
      {iron, {{ironore, -1, 1, 1}, {coal, -1, 1, 1}, {-1, 7, 1, 0}}, 1, 4.0, -1.0},
  };
  s.goal_var = iron;
  return s;
}

inline TaskSpec fire2burn() {
  TaskSpec s;
  s.name = "Fire2Burn";
  s.variables = {"match", "wood", "fire", "burntwood"};
  s.actions = {"noop", "get_match", "get_wood", "light_fire", "burn_wood"};
  const int match = 0, wood = 1, fire = 2, burnt = 3;
  s.rules = {
      {match, {{-1, 1, 1, 0}}, 1, 2.0, -1.0},
      {wood, {{-1, 2, 1, 0}}, 1, 2.0, -1.0},
      {fire, {{match, -1, 1, 1}, {-1, 3, 1, 0}}, 1, 3.0, -1.0},
      {burnt, {{fire, -1, 1, 0}, {wood, -1, 1, 1}, {-1, 4, 1, 0}}, 1, 3.0, -1.0},
  };
  s.goal_var = burnt;
  return s;
}

inline TaskSpec wood2wet() {
  TaskSpec s;
  s.name = "Wood2Wet";
  s.variables = {"wood", "water", "wetwood"};
  s.actions = {"noop", "get_wood", "fetch_water", "soak_wood"};
  const int wood = 0, water = 1, wet = 2;
  s.rules = {
      {wood, {{-1, 1, 1, 0}}, 1, 2.0, -1.0},
      {water, {{-1, 2, 1, 0}}, 1, 2.0, -1.0},
      {wet, {{wood, -1, 1, 1}, {water, -1, 1, 1}, {-1, 3, 1, 0}}, 1, 3.0, -1.0},
  };
  s.goal_var = wet;
  return s;
}

}  // namespace tasks

// ---------------------------------------------------------------------------
// Rule-file schema (JSON): see README for the documented format.
// ---------------------------------------------------------------------------

inline TaskSpec task_from_json(const nlohmann::json& j) {
  TaskSpec s;
  try {
    s.name = j.at("name").get<std::string>();
    s.variables = j.at("variables").get<std::vector<std::string>>();
    s.actions = j.at("actions").get<std::vector<std::string>>();
    for (const auto& jr : j.at("rules")) {
      CausalRule r;
      r.effect = s.var_index(jr.at("effect").get<std::string>());
      r.delta = jr.value("delta", 1);
      r.delay_mean = jr.at("mu").get<double>();
      r.delay_sigma = jr.value("sigma", -1.0);
      for (const auto& jp : jr.at("parents")) {
        ParentCond p;
        if (jp.contains("var")) {
          p.var = s.var_index(jp.at("var").get<std::string>());
          p.min_count = jp.value("min", 1);
          p.consume = jp.value("consume", 0);
        } else {
          p.action = s.action_index(jp.at("action").get<std::string>());
        }
        r.parents.push_back(p);
      }
      s.rules.push_back(r);
    }
    if (j.contains("goal")) s.goal_var = s.var_index(j.at("goal").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed task file: ") + e.what());
  }
  return s;
}

inline nlohmann::json task_to_json(const TaskSpec& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["variables"] = s.variables;
  j["actions"] = s.actions;
  j["rules"] = nlohmann::json::array();
  for (const auto& r : s.rules) {
    nlohmann::json jr;
    jr["effect"] = s.variables[r.effect];
    jr["delta"] = r.delta;
    jr["mu"] = r.delay_mean;
    if (r.delay_sigma >= 0.0) jr["sigma"] = r.delay_sigma;
    jr["parents"] = nlohmann::json::array();
    for (const auto& p : r.parents) {
      nlohmann::json jp;
      if (p.is_var()) {
        jp["var"] = s.variables[p.var];
        jp["min"] = p.min_count;
        jp["consume"] = p.consume;
      } else {
        jp["action"] = s.actions[p.action];
      }
      jr["parents"].push_back(jp);
    }
    j["rules"].push_back(jr);
  }
  if (s.goal_var >= 0) j["goal"] = s.variables[s.goal_var];
  return j;
}

inline TaskSpec load_task_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open task file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed task file: ") + e.what());
  }
  return task_from_json(j);
}

inline TaskSpec builtin_task(const std::string& name) {
  if (name == "GetSilverore") return tasks::get_silverore();
  if (name == "GetIron") return tasks::get_iron();
  if (name == "Fire2Burn") return tasks::fire2burn();
  if (name == "Wood2Wet") return tasks::wood2wet();
  throw ConfigError("unknown task: " + name);
}

/// Instantiates the hidden rule set for a built-in task name.
inline World make_task(const WorldConfig& config) {
  return World(builtin_task(config.task_name), config);
}

}  // namespace dechrl

#endif  // DECHRL_WORLD_HPP_
