#ifndef DECHRL_HIERARCHY_HPP_
#define DECHRL_HIERARCHY_HPP_

#include <deque>
#include <functional>

#include "dechrl/empowerment.hpp"

namespace dechrl {

// ---------------------------------------------------------------------------
// Subgoals and options
// ---------------------------------------------------------------------------

struct SubGoal {
  int var = -1;
  bool up = true;

  bool operator==(const SubGoal& o) const { return var == o.var && up == o.up; }
  bool operator<(const SubGoal& o) const { return var != o.var ? var < o.var : up > o.up; }
};

inline std::string subgoal_name(const SubGoal& g, const TaskSpec& spec) {
  return spec.variables[g.var] + (g.up ? "+" : "-");
}

struct Option {
  bool primitive = true;
  int action = 0;
  SubGoal goal;

  static Option make_action(int a) { return {true, a, {}}; }
  static Option make_goal(SubGoal g) { return {false, 0, g}; }

  bool operator==(const Option& o) const {
    if (primitive != o.primitive) return false;
    return primitive ? action == o.action : goal == o.goal;
  }
};

inline std::string option_name(const Option& o, const TaskSpec& spec) {
  return o.primitive ? spec.actions[o.action] : subgoal_name(o.goal, spec);
}

// ---------------------------------------------------------------------------
// Policy units
// ---------------------------------------------------------------------------

struct HerTransition {
  uint64_t key = 0;
  int option = 0;
  uint64_t next_key = 0;
  double reward = 0.0;
  SubGoal goal;
  bool terminal = false;
};

struct PolicyUnit {
  enum class Status { Training, Promoted };

  SubGoal goal;
  std::vector<Option> omega;
  std::vector<int> abstraction_vars;  // sorted; goal variable plus its parents
  Status status = Status::Training;
  int episodes_trained = 0;

  std::unordered_map<uint64_t, std::vector<double>> q;
  std::vector<HerTransition> replay;
  std::deque<bool> eval_ring;  // last 100 greedy attempts
  long eval_attempts = 0;

  std::vector<double>& q_row(uint64_t key) {
    auto it = q.find(key);
    if (it == q.end()) it = q.emplace(key, std::vector<double>(omega.size(), 0.0)).first;
    return it->second;
  }

  const std::vector<double> q_row_const(uint64_t key) const {
    auto it = q.find(key);
    if (it == q.end()) return std::vector<double>(omega.size(), 0.0);
    return it->second;
  }

  int greedy_option(uint64_t key) const {
    auto row = q_row_const(key);
    int best = 0;
    for (size_t i = 1; i < row.size(); ++i) {
      if (row[i] > row[best]) best = static_cast<int>(i);
    }
    return best;
  }

  void record_eval(bool success, int ring_size = 100) {
    eval_ring.push_back(success);
    ++eval_attempts;
    while (static_cast<int>(eval_ring.size()) > ring_size) eval_ring.pop_front();
  }

  double success_ratio() const {
    if (eval_ring.empty()) return 0.0;
    int s = 0;
    for (bool b : eval_ring) s += b ? 1 : 0;
    return static_cast<double>(s) / eval_ring.size();
  }
};

/// Moves a subgoal whose policy clears the success threshold into the set of
/// controllable subgoals. Requires a full evaluation window; the threshold is
/// a strict inequality.
inline bool promote(PolicyUnit& unit, std::vector<Option>& list_do,
                    int min_attempts = 100, double threshold = 0.5) {
  if (unit.status == PolicyUnit::Status::Promoted) return false;
  if (static_cast<int>(unit.eval_ring.size()) < min_attempts) return false;
  if (!(unit.success_ratio() > threshold)) return false;
  unit.status = PolicyUnit::Status::Promoted;
  list_do.push_back(Option::make_goal(unit.goal));
  return true;
}

// ---------------------------------------------------------------------------
// Delay read policy: when a transition's outcome is read, per variant
// ---------------------------------------------------------------------------

struct DelayReadPolicy {
  enum class Mode {
    Learned,    // sample from the learned per-effect distribution
    FixedTrue,  // the task's configured mean delay, given as a prior
    UniformMax, // always tau_max
    NextStep,   // immediate read; state augmentation carries the history
  };

  Mode mode = Mode::Learned;
  const DelayModel* model = nullptr;
  std::vector<int> fixed_delays;  // per effect variable, Mode::FixedTrue
  int tau_max = 1;

  int sample(int effect, Rng& rng) const {
    switch (mode) {
      case Mode::Learned:
        return model->sample_delay(effect, rng);
      case Mode::FixedTrue:
        return fixed_delays[effect];
      case Mode::UniformMax:
        return tau_max;
      case Mode::NextStep:
        return 1;
    }
    return 1;
  }
};

// ---------------------------------------------------------------------------
// Episode bookkeeping
// ---------------------------------------------------------------------------

struct Decision {
  int start_step = 0;
  int end_step = 0;   // option completion, before the observation delay
  int read_step = 0;  // where the outcome is read: end + sampled delay
  int option = 0;
  uint64_t key = 0;
  uint64_t hist_after = 0;  // option-history code after taking this option
};

struct EpisodeRecord {
  SubGoal goal;
  std::vector<Decision> decisions;
  std::vector<FactoredState> trace;  // state per step index
  bool achieved_goal = false;
  int final_step = 0;
};

struct TrainParams {
  double q_alpha = 0.1;
  double gamma = 0.95;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_anneal_frac = 0.3;
  int option_budget_mult = 4;  // per-option budget = mult * tau_max
  int max_options = 15;        // decisions per episode at the unit's own level
  int replay_updates = 64;
  size_t replay_capacity = 20000;
  int unit_episodes = 500;
  int eval_every = 10;
  int eval_ring = 100;
  int min_attempts = 100;
  double promote_threshold = 0.5;
  int early_stop_window = 20;  // stop when this many trailing evals all succeed
  int max_unit_episode_mult = 2;  // retrain budget cap, in multiples of unit_episodes
  double abandon_ratio = 0.25;    // below this a capped unit stops retraining
  double lambda_emp = 0.1;
  double emp_lr = 0.1;
  bool state_augmentation = false;
};

/// Empowerment hookup used during unit training; scms are indexed in the same
/// order as the delay model's supported lags.
struct EmpowermentContext {
  const std::vector<ScmTau>* scms = nullptr;
  const DelayModel* delays = nullptr;
  double lambda = 0.0;
};

// ---------------------------------------------------------------------------
// Hierarchy
// ---------------------------------------------------------------------------

class Hierarchy {
 public:
  Hierarchy(TaskSpec spec, int tau_max, TrainParams params = {})
      : spec_(std::move(spec)), tau_max_(tau_max), params_(params) {
    for (int a = 0; a < spec_.num_actions(); ++a) {
      bottom_.push_back(Option::make_action(a));
    }
    omega_top_ = bottom_;
    read_.mode = DelayReadPolicy::Mode::UniformMax;
    read_.tau_max = tau_max;
  }

  /// Observation-delay policy used to pace every level's decisions.
  void set_read_policy(const DelayReadPolicy& read) { read_ = read; }
  const DelayReadPolicy& read_policy() const { return read_; }

  const TaskSpec& spec() const { return spec_; }
  const TrainParams& params() const { return params_; }
  const std::vector<Option>& omega_top() const { return omega_top_; }
  const std::map<SubGoal, PolicyUnit>& units() const { return units_; }
  std::map<SubGoal, PolicyUnit>& units() { return units_; }

  bool has_unit(const SubGoal& g) const { return units_.count(g) > 0; }
  PolicyUnit& unit(const SubGoal& g) {
    auto it = units_.find(g);
    if (it == units_.end()) throw ContractError("no policy unit for " + subgoal_name(g, spec_));
    return it->second;
  }

  /// Extends the hierarchy from the discovered edges: one unit per direction
  /// per effect variable, option spaces delegating to parent subgoals, and
  /// the top-level space spanning the controllable and in-training subgoals.
  /// Option spaces are a pure function of (edges, list_do).
  void build_round(const std::vector<AcceptedEdge>& edges, const std::vector<Option>& list_do) {
    std::vector<std::set<int>> parents(spec_.num_vars());
    std::set<int> effects;
    for (const auto& e : edges) {
      effects.insert(e.effect);
      // Self-edges carry no delegation structure and are dropped here.
      if (e.cause < spec_.num_vars() && e.cause != e.effect) parents[e.effect].insert(e.cause);
    }
    check_acyclic(parents);
    for (int v : effects) {
      for (bool up : {true, false}) {
        SubGoal g{v, up};
        std::vector<Option> omega = bottom_;
        for (int p : parents[v]) {
          if (!effects.count(p) && !has_unit({p, true})) continue;  // no policy to delegate to
          omega.push_back(Option::make_goal({p, true}));
          omega.push_back(Option::make_goal({p, false}));
        }
        std::vector<int> avars(parents[v].begin(), parents[v].end());
        if (!std::count(avars.begin(), avars.end(), v)) avars.push_back(v);
        std::sort(avars.begin(), avars.end());

        auto it = units_.find(g);
        if (it == units_.end()) {
          PolicyUnit u;
          u.goal = g;
          u.omega = std::move(omega);
          u.abstraction_vars = std::move(avars);
          units_.emplace(g, std::move(u));
        } else if (it->second.omega != omega || it->second.abstraction_vars != avars) {
          remap_unit(it->second, omega, avars);
        }
      }
    }
    // Top-level space: controllable subgoals plus everything in training.
    omega_top_ = list_do;
    for (auto& [g, u] : units_) {
      if (std::find(omega_top_.begin(), omega_top_.end(), Option::make_goal(g)) ==
          omega_top_.end()) {
        omega_top_.push_back(Option::make_goal(g));
      }
    }
  }

  // -- Abstraction ----------------------------------------------------------

  uint64_t abstraction_key(const PolicyUnit& u, const FactoredState& s, uint64_t hist) const {
    uint64_t bits = 0;
    for (size_t i = 0; i < u.abstraction_vars.size(); ++i) {
      if (s[u.abstraction_vars[i]] >= 1) bits |= (1ull << i);
    }
    return bits | (hist << 12);
  }

  uint64_t history_push(const PolicyUnit& u, uint64_t hist, int option) const {
    if (!params_.state_augmentation) return 0;
    uint64_t base = u.omega.size() + 1;
    uint64_t mod = 1;
    for (int i = 0; i < tau_max_; ++i) mod *= base;
    return (hist * base + (option + 1)) % mod;
  }

  // -- Goal semantics -------------------------------------------------------

  static bool goal_achieved(const World& w, const SubGoal& g, int from, int to) {
    return g.up ? w.increased_in(g.var, from, to) : w.decreased_in(g.var, from, to);
  }

  // -- Execution ------------------------------------------------------------

  /// Executes one option. Primitive actions take exactly one step; subgoal
  /// options run the owning unit greedily until achieved or the budget is
  /// exhausted, then wait up to tau_max steps for delayed landings.
  /// Returns steps consumed; a zero budget is an immediate failure.
  int execute_option(World& w, std::vector<FactoredState>& trace, const Option& opt,
                     int budget, Rng& rng) {
    if (opt.primitive) {
      if (budget < 1 || w.finished()) return 0;
      step_traced(w, trace, opt.action);
      return 1;
    }
    auto it = units_.find(opt.goal);
    if (it == units_.end()) throw ContractError("option not in omega: unknown subgoal");
    auto res = run_goal(it->second, w, trace, budget, budget, 0.0, rng, nullptr);
    return res.steps;
  }

  struct GoalRun {
    bool achieved = false;
    int steps = 0;
  };

  /// The unit's decision loop: epsilon-greedy option selection, recursive
  /// execution, and a transition delay sampled from the observation-delay
  /// policy after each option — the level holds (waits) until the sampled
  /// lag has passed before reading the outcome and deciding again. A final
  /// detection window of up to tau_max covers effects still in flight. Call
  /// depth is bounded by the causal-chain depth because option spaces only
  /// delegate to parent subgoals.
  GoalRun run_goal(PolicyUnit& u, World& w, std::vector<FactoredState>& trace, int budget,
                   int max_options, double eps, Rng& rng, EpisodeRecord* rec) {
    const int start = w.current_step();
    int used = 0;
    int options_taken = 0;
    uint64_t hist = 0;
    auto achieved = [&] { return goal_achieved(w, u.goal, start, w.current_step()); };
    if (budget <= 0) return {false, 0};
    while (!achieved() && used < budget && options_taken < max_options && !w.finished()) {
      uint64_t key = abstraction_key(u, w.state(), hist);
      int opt_idx;
      if (eps > 0.0 && rng.bernoulli(eps)) {
        opt_idx = rng.uniform_int(static_cast<int>(u.omega.size()));
      } else {
        opt_idx = u.greedy_option(key);
      }
      int dec_start = w.current_step();
      hist = history_push(u, hist, opt_idx);
      int child_budget = std::min(params_.option_budget_mult * tau_max_, budget - used);
      int steps = execute_option(w, trace, u.omega[opt_idx], child_budget, rng);
      used += steps;
      ++options_taken;
      int option_end = w.current_step();
      // Hold for the sampled transition delay before reading the outcome.
      int tau = read_.sample(u.goal.var, rng);
      int waited = 0;
      while (waited < tau && used < budget && !w.finished() && !achieved()) {
        step_traced(w, trace, 0);
        ++waited;
        ++used;
      }
      if (rec) {
        rec->decisions.push_back({dec_start, option_end, w.current_step(), opt_idx, key, hist});
      }
      if (steps == 0 && waited == 0) break;  // out of budget or episode ended
    }
    // Detection window for effects still in flight, after a terminal action.
    int waited = 0;
    while (options_taken > 0 && !achieved() && waited < tau_max_ && !w.finished()) {
      step_traced(w, trace, 0);
      ++waited;
      ++used;
    }
    return {achieved(), used};
  }

  static void step_traced(World& w, std::vector<FactoredState>& trace, int action) {
    if (trace.empty()) trace.push_back(w.state());
    w.step(action);
    trace.push_back(w.state());
  }

  // -- HER ------------------------------------------------------------------

  /// Distinct subgoals achieved anywhere in the episode.
  std::vector<SubGoal> achieved_subgoals(const World& w, int final_step) const {
    std::set<SubGoal> out;
    for (int v = 0; v < spec_.num_vars(); ++v) {
      if (w.increased_in(v, 0, final_step)) out.insert({v, true});
      if (w.decreased_in(v, 0, final_step)) out.insert({v, false});
    }
    return std::vector<SubGoal>(out.begin(), out.end());
  }

  /// Builds the replay transitions of one episode. Original-goal transitions
  /// pair each decision with the outcome at its recorded delayed read point;
  /// each distinct achieved subgoal with a policy unit contributes one
  /// relabeled copy with reward 1, attributed to the decision whose window
  /// contains the landing.
  std::map<SubGoal, std::vector<HerTransition>> her_relabel(const EpisodeRecord& rec,
                                                            const World& w, Rng& rng) {
    std::map<SubGoal, std::vector<HerTransition>> out;
    if (rec.decisions.empty()) return out;
    auto& unit_orig = unit(rec.goal);

    for (const auto& d : rec.decisions) {
      int read_t = std::min(d.read_step, rec.final_step);
      bool got = goal_achieved(w, rec.goal, d.start_step, read_t);
      HerTransition t;
      t.key = d.key;
      t.option = d.option;
      t.next_key = abstraction_key(unit_orig, rec.trace[read_t], d.hist_after);
      t.reward = got ? 1.0 : 0.0;
      t.goal = rec.goal;
      t.terminal = got;
      out[rec.goal].push_back(t);
    }

    for (const auto& g : achieved_subgoals(w, rec.final_step)) {
      if (g == rec.goal || !has_unit(g)) continue;
      // Attribute the landing to the decision whose window covered it; fall
      // back to the last decision for landings during the final wait.
      int chosen = static_cast<int>(rec.decisions.size()) - 1;
      for (size_t k = 0; k < rec.decisions.size(); ++k) {
        const auto& d = rec.decisions[k];
        if (goal_achieved(w, g, d.start_step, d.read_step)) {
          chosen = static_cast<int>(k);
          break;
        }
      }
      const auto& d = rec.decisions[chosen];
      auto& ug = unit(g);
      int tau = read_.sample(g.var, rng);
      int read_t = std::min(std::max(d.end_step + tau, d.read_step), rec.final_step);
      HerTransition t;
      t.key = abstraction_key(ug, rec.trace[d.start_step], 0);
      t.option = remap_option(unit(rec.goal), ug, d.option);
      t.next_key = abstraction_key(ug, rec.trace[read_t], 0);
      t.reward = 1.0;
      t.goal = g;
      t.terminal = true;
      if (t.option >= 0) out[g].push_back(t);
    }
    return out;
  }

  // -- Learning -------------------------------------------------------------

  void q_update(PolicyUnit& u, const HerTransition& t) {
    auto& row = u.q_row(t.key);
    double target = t.reward;
    if (!t.terminal) {
      const auto next = u.q_row_const(t.next_key);
      target += params_.gamma * *std::max_element(next.begin(), next.end());
    }
    row[t.option] += params_.q_alpha * (target - row[t.option]);
  }

  void ingest(PolicyUnit& u, const std::vector<HerTransition>& ts, Rng& rng) {
    for (const auto& t : ts) {
      q_update(u, t);
      if (u.replay.size() < params_.replay_capacity) {
        u.replay.push_back(t);
      } else {
        u.replay[rng.uniform_int(static_cast<int>(u.replay.size()))] = t;
      }
    }
    for (int i = 0; i < params_.replay_updates && !u.replay.empty(); ++i) {
      q_update(u, u.replay[rng.uniform_int(static_cast<int>(u.replay.size()))]);
    }
  }

  /// Per-option empowerment of the chosen option at a decision state:
  /// marginal entropy minus the chosen option's conditional entropy, weighted
  /// by the learned delay distribution of the unit's goal variable.
  double decision_empowerment(const PolicyUnit& u, const FactoredState& s, uint64_t key,
                              int option, const EmpowermentContext& ctx) const {
    const auto lags = ctx.delays->supported_lags();
    auto weights_row = ctx.delays->row_distribution(u.goal.var);
    std::vector<double> pi = softmax(u.q_row_const(key));
    double value = 0.0;
    for (size_t li = 0; li < lags.size(); ++li) {
      const auto& scm = (*ctx.scms)[li];
      std::vector<double> marg(2, 0.0);
      std::array<double, 2> chosen{0.5, 0.5};
      for (size_t o = 0; o < u.omega.size(); ++o) {
        auto f = scm.predict(u.goal.var, option_cause_bits(s, u.omega[o]));
        marg[0] += pi[o] * f[0];
        marg[1] += pi[o] * f[1];
        if (static_cast<int>(o) == option) chosen = f;
      }
      double h_cond = entropy(std::span<const double>(chosen.data(), 2));
      value += weights_row[lags[li] - 1] * (entropy(marg) - h_cond);
    }
    return value;
  }

  /// Cause vector a hypothetical option would present to the generating
  /// tables: primitives set their action bit, subgoal options toggle the
  /// target variable bit as if already realized.
  uint32_t option_cause_bits(const FactoredState& s, const Option& opt) const {
    uint32_t bits = binarize_state(s);
    if (opt.primitive) return bits | (1u << (spec_.num_vars() + opt.action));
    if (opt.goal.up) {
      bits |= (1u << opt.goal.var);
    } else {
      bits &= ~(1u << opt.goal.var);
    }
    return bits | (1u << spec_.num_vars());  // wait action alongside the subgoal
  }

  // -- Unit training --------------------------------------------------------

  /// One training episode: run the goal with the current epsilon, then HER
  /// relabeling with delayed reads, Q updates, replay, and the empowerment
  /// advantage on the unit's logits.
  bool train_episode(PolicyUnit& u, World& w, uint64_t world_seed,
                     const EmpowermentContext& emp, Rng& rng) {
    w.reset(world_seed);
    EpisodeRecord rec;
    rec.goal = u.goal;
    rec.trace.push_back(w.state());
    double frac = params_.unit_episodes > 1
                      ? static_cast<double>(u.episodes_trained) /
                            (params_.eps_anneal_frac * params_.unit_episodes)
                      : 1.0;
    double eps = params_.eps_start + std::min(1.0, frac) * (params_.eps_end - params_.eps_start);
    auto res = run_goal(u, w, rec.trace, horizon_budget(w), params_.max_options, eps, rng, &rec);
    rec.achieved_goal = res.achieved;
    rec.final_step = w.current_step();
    ++u.episodes_trained;

    auto relabeled = her_relabel(rec, w, rng);
    for (auto& [g, ts] : relabeled) ingest(unit(g), ts, rng);

    if (emp.lambda > 0.0 && emp.scms && emp.delays) {
      std::vector<AdvantageSample> batch;
      for (const auto& d : rec.decisions) {
        double e = decision_empowerment(u, rec.trace[d.start_step], d.key, d.option, emp);
        batch.push_back({d.key, d.option, e});
      }
      apply_advantage(u, batch);
    }
    return res.achieved;
  }

  /// Greedy evaluation attempt for the unit's own goal.
  bool evaluate_unit(PolicyUnit& u, World& w, uint64_t world_seed, Rng& rng) {
    w.reset(world_seed);
    std::vector<FactoredState> trace{w.state()};
    auto res = run_goal(u, w, trace, horizon_budget(w), params_.max_options, 0.0, rng, nullptr);
    u.record_eval(res.achieved, params_.eval_ring);
    return res.achieved;
  }

  int horizon_budget(const World& w) const { return w.horizon() - w.current_step(); }

 private:
  static void check_acyclic(const std::vector<std::set<int>>& parents) {
    const int n = static_cast<int>(parents.size());
    std::vector<int> color(n, 0);
    std::vector<int> stack;
    for (int start = 0; start < n; ++start) {
      if (color[start] != 0) continue;
      stack.push_back(start);
      while (!stack.empty()) {
        int v = stack.back();
        if (color[v] == 0) {
          color[v] = 1;
          for (int p : parents[v]) {
            if (color[p] == 1) throw ContractError("accepted edge graph has a cycle");
            if (color[p] == 0) stack.push_back(p);
          }
        } else {
          if (color[v] == 1) color[v] = 2;
          stack.pop_back();
        }
      }
    }
  }

  void apply_advantage(PolicyUnit& u, const std::vector<AdvantageSample>& batch) {
    if (batch.empty()) return;
    double mean = 0.0;
    for (const auto& s : batch) mean += s.empowerment;
    mean /= batch.size();
    double var = 0.0;
    for (const auto& s : batch) var += (s.empowerment - mean) * (s.empowerment - mean);
    double stddev = std::sqrt(var / batch.size());
    const double lambda = params_.lambda_emp;
    for (const auto& s : batch) {
      double adv = (s.empowerment - mean) / (stddev + 1e-6);
      auto& row = u.q_row(s.key);
      auto pi = softmax(row);
      for (size_t o = 0; o < row.size(); ++o) {
        double g = (static_cast<int>(o) == s.option ? 1.0 : 0.0) - pi[o];
        row[o] += params_.emp_lr * lambda * adv * g;
      }
    }
  }

  /// Option index in the relabeled unit matching the original unit's choice.
  static int remap_option(const PolicyUnit& from, const PolicyUnit& to, int option) {
    const Option& o = from.omega[option];
    for (size_t i = 0; i < to.omega.size(); ++i) {
      if (to.omega[i] == o) return static_cast<int>(i);
    }
    return -1;
  }

  void remap_unit(PolicyUnit& u, const std::vector<Option>& omega,
                  const std::vector<int>& avars) {
    if (u.abstraction_vars != avars) {
      // Key space changed; learned values no longer address the same states.
      u.q.clear();
      u.replay.clear();
    } else {
      std::unordered_map<uint64_t, std::vector<double>> remapped;
      for (auto& [key, row] : u.q) {
        std::vector<double> nrow(omega.size(), 0.0);
        for (size_t i = 0; i < omega.size(); ++i) {
          for (size_t j = 0; j < u.omega.size(); ++j) {
            if (u.omega[j] == omega[i]) nrow[i] = row[j];
          }
        }
        remapped.emplace(key, std::move(nrow));
      }
      u.q = std::move(remapped);
      u.replay.clear();
    }
    u.omega = omega;
    u.abstraction_vars = avars;
  }

  TaskSpec spec_;
  int tau_max_;
  TrainParams params_;
  DelayReadPolicy read_;
  std::vector<Option> bottom_;
  std::vector<Option> omega_top_;
  std::map<SubGoal, PolicyUnit> units_;
};

// ---------------------------------------------------------------------------
// Snapshot
// ---------------------------------------------------------------------------

inline nlohmann::json hierarchy_to_json(const Hierarchy& h) {
  nlohmann::json j;
  j["units"] = nlohmann::json::array();
  for (const auto& [g, u] : h.units()) {
    nlohmann::json ju;
    ju["goal"] = subgoal_name(g, h.spec());
    ju["status"] = u.status == PolicyUnit::Status::Promoted ? "promoted" : "training";
    ju["success_ratio"] = u.success_ratio();
    ju["episodes"] = u.episodes_trained;
    ju["eval_attempts"] = u.eval_attempts;
    ju["omega"] = nlohmann::json::array();
    for (const auto& o : u.omega) ju["omega"].push_back(option_name(o, h.spec()));
    nlohmann::json jq = nlohmann::json::object();
    std::vector<uint64_t> keys;
    for (const auto& [k, row] : u.q) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (uint64_t k : keys) jq[std::to_string(k)] = u.q.at(k);
    ju["q"] = std::move(jq);
    j["units"].push_back(std::move(ju));
  }
  nlohmann::json top = nlohmann::json::array();
  for (const auto& o : h.omega_top()) top.push_back(option_name(o, h.spec()));
  j["omega_top"] = std::move(top);
  return j;
}

}  // namespace dechrl

#endif  // DECHRL_HIERARCHY_HPP_
