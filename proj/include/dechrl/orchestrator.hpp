#ifndef DECHRL_ORCHESTRATOR_HPP_
#define DECHRL_ORCHESTRATOR_HPP_

#include <chrono>
#include <filesystem>
#include <iostream>

#include "dechrl/hierarchy.hpp"

namespace dechrl {

// ---------------------------------------------------------------------------
// Variants
// ---------------------------------------------------------------------------

enum class Variant {
  Dechrl,
  DechrlNoEmp,
  PriorDelayDistribution,
  PriorFixed,
  PriorUniform,
  StateAugmentation,
  SimplifiedDechrl,
};

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Dechrl: return "dechrl";
    case Variant::DechrlNoEmp: return "dechrl-noemp";
    case Variant::PriorDelayDistribution: return "prior-delay-distribution";
    case Variant::PriorFixed: return "prior-fixed";
    case Variant::PriorUniform: return "prior-uniform";
    case Variant::StateAugmentation: return "state-augmentation";
    case Variant::SimplifiedDechrl: return "simplified";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  for (Variant v : {Variant::Dechrl, Variant::DechrlNoEmp, Variant::PriorDelayDistribution,
                    Variant::PriorFixed, Variant::PriorUniform, Variant::StateAugmentation,
                    Variant::SimplifiedDechrl}) {
    if (variant_name(v) == s) return v;
  }
  throw ConfigError("unknown variant: " + s);
}

inline bool variant_learns_delays(Variant v) {
  return v == Variant::Dechrl || v == Variant::DechrlNoEmp ||
         v == Variant::PriorDelayDistribution || v == Variant::SimplifiedDechrl;
}

inline bool variant_uses_empowerment(Variant v) {
  return v == Variant::Dechrl || v == Variant::SimplifiedDechrl;
}

// ---------------------------------------------------------------------------
// Run configuration and results
// ---------------------------------------------------------------------------

struct DechrlConfig {
  WorldConfig world;
  std::optional<TaskSpec> custom_task;  // overrides world.task_name when set
  Variant variant = Variant::Dechrl;
  int kappa = 1;  // delay-modeling stride; only meaningful for the simplified variant
  uint64_t seed = 0;

  long max_episodes = 50000;
  int max_rounds = 12;
  int n_per_subgoal = 200;
  int final_eval_episodes = 100;

  ScmParams scm;
  DelayTrainParams delay;
  TrainParams train;
  double accept_threshold = 0.5;

  std::string out_dir;  // when set, run artifacts are written below it

  int effective_kappa() const { return variant == Variant::SimplifiedDechrl ? kappa : 1; }

  void validate() const {
    if (variant != Variant::SimplifiedDechrl && kappa != 1)
      throw ConfigError("kappa is only valid with the simplified variant");
    if (kappa < 1 || kappa > world.tau_max) throw ConfigError("kappa out of range");
    if (max_episodes < 1) throw ConfigError("max_episodes must be positive");
  }
};

struct MetricsRow {
  long episode = 0;
  std::string variant;
  uint64_t seed = 0;
  int success = 0;
  int distance = 0;            // unachieved subgoals on the causal path
  std::vector<double> kl;      // per effect variable; empty when no delay model
};

struct RoundState {
  int round = 0;
  std::vector<Option> list_do;
  std::vector<AcceptedEdge> edges;
  int new_edges = 0;
  int promotions = 0;
  int stagnant_rounds = 0;
  bool stagnation_warning = false;
  double delay_train_seconds = 0.0;
  double round_seconds = 0.0;
};

struct RunResult {
  enum class Status { Completed, BudgetExhausted, RoundLimit };

  Status status = Status::RoundLimit;
  int rounds = 0;
  long episodes_used = 0;
  std::vector<MetricsRow> metrics;
  std::vector<std::vector<double>> learned_delays;  // per effect; empty rows if unused
  std::vector<std::vector<double>> true_delays;
  std::map<std::string, double> subgoal_success;  // final ratio per up-subgoal
  std::vector<RoundState> round_log;
  double delay_train_seconds = 0.0;
  double total_seconds = 0.0;
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::vector<int> effect_variables(const TaskSpec& spec) {
  std::set<int> e;
  for (const auto& r : spec.rules) e.insert(r.effect);
  return std::vector<int>(e.begin(), e.end());
}

inline std::string metrics_csv_header(const TaskSpec& spec) {
  std::ostringstream out;
  out << "# dechrl metrics v1\n";
  out << "episode,variant,seed,success,adc";
  for (int v : effect_variables(spec)) out << ",kl_" << spec.variables[v];
  out << "\n";
  return out.str();
}

inline std::string metrics_row_csv(const MetricsRow& row, size_t num_effects) {
  std::ostringstream out;
  out << row.episode << "," << row.variant << "," << row.seed << "," << row.success << ","
      << row.distance;
  for (size_t i = 0; i < num_effects; ++i) {
    out << ",";
    if (i < row.kl.size()) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6f", row.kl[i]);
      out << buf;
    }
  }
  out << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Orchestrator
// ---------------------------------------------------------------------------

class Orchestrator {
 public:
  explicit Orchestrator(DechrlConfig config)
      : cfg_(std::move(config)),
        task_(cfg_.custom_task ? *cfg_.custom_task : builtin_task(cfg_.world.task_name)),
        world_(task_, cfg_.world),
        hierarchy_(task_, cfg_.world.tau_max, resolve_train_params(cfg_)),
        delay_model_(task_.num_vars(), cfg_.world.tau_max, cfg_.effective_kappa()),
        policy_rng_(mix_seed(cfg_.seed, 0x7061ULL)) {
    cfg_.validate();
    data_.num_vars = task_.num_vars();
    data_.num_actions = task_.num_actions();
    data_.tau_max = cfg_.world.tau_max;
    for (int a = 0; a < task_.num_actions(); ++a) list_do_.push_back(Option::make_action(a));
    effect_vars_ = effect_variables(task_);
    n_per_subgoal_ = cfg_.n_per_subgoal;
    hierarchy_.set_read_policy(read_policy());
  }

  const TaskSpec& task() const { return task_; }
  const InterventionData& data() const { return data_; }
  const std::vector<Option>& list_do() const { return list_do_; }
  Hierarchy& hierarchy() { return hierarchy_; }
  const DelayModel& delay_model() const { return delay_model_; }
  const std::vector<ScmTau>& scms() const { return scms_; }
  long episodes_used() const { return episodes_used_; }

  /// The full loop: rounds of intervention collection, per-lag SCM fitting,
  /// delay-distribution fitting, hierarchy growth/training and promotion,
  /// until the task subgoal is promoted or the episode budget runs out.
  RunResult run() {
    auto t0 = std::chrono::steady_clock::now();
    RunResult result;
    if (!cfg_.out_dir.empty()) {
      std::filesystem::create_directories(cfg_.out_dir);
      std::ofstream cf(cfg_.out_dir + "/config.json");
      cf << config_json().dump(2) << "\n";
    }
    SubGoal task_goal{task_.goal_var, true};
    while (round_ < cfg_.max_rounds) {
      if (budget_exhausted()) {
        result.status = RunResult::Status::BudgetExhausted;
        break;
      }
      run_round();
      if (task_.goal_var >= 0 && hierarchy_.has_unit(task_goal) &&
          hierarchy_.unit(task_goal).status == PolicyUnit::Status::Promoted) {
        final_eval_block();
        result.status = RunResult::Status::Completed;
        break;
      }
      if (budget_exhausted()) {
        result.status = RunResult::Status::BudgetExhausted;
        break;
      }
    }
    result.rounds = round_;
    result.episodes_used = episodes_used_;
    result.metrics = metrics_;
    result.round_log = round_log_;
    result.delay_train_seconds = delay_seconds_total_;
    if (variant_learns_delays(cfg_.variant)) {
      result.learned_delays = delay_model_.distribution();
    }
    for (int v : effect_vars_) {
      result.true_delays.push_back(world_.true_delay_row(v));
    }
    for (auto& [g, u] : hierarchy_.units()) {
      if (g.up) result.subgoal_success[subgoal_name(g, task_)] = u.success_ratio();
    }
    result.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!cfg_.out_dir.empty()) write_metrics_csv();
    return result;
  }

  /// One round of the outer loop; exposed for tests.
  void run_round() {
    auto t0 = std::chrono::steady_clock::now();
    RoundState rs;
    rs.round = ++round_;

    collect_interventions(list_do_, n_per_subgoal_);
    fit_scms();
    auto edges = accepted_edges(scms_, cfg_.accept_threshold);

    auto td0 = std::chrono::steady_clock::now();
    if (variant_learns_delays(cfg_.variant) && !scms_.empty() &&
        scms_.front().record_count() > 0) {
      fit_delays();
    }
    rs.delay_train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - td0).count();
    delay_seconds_total_ += rs.delay_train_seconds;

    rs.new_edges = count_new_edges(edges);
    hierarchy_.build_round(edges, list_do_);
    rs.promotions = train_and_promote();

    if (rs.new_edges == 0 && rs.promotions == 0) {
      ++stagnant_;
      if (stagnant_ >= 3) {
        rs.stagnation_warning = true;
        if (!doubled_) {
          n_per_subgoal_ *= 2;
          doubled_ = true;
        }
        std::cerr << "[dechrl] warning: " << stagnant_
                  << " stagnant rounds (no new edges, no promotions)\n";
      }
    } else {
      stagnant_ = 0;
    }

    rs.list_do = list_do_;
    rs.edges = edges;
    rs.round_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    round_log_.push_back(rs);
    if (!cfg_.out_dir.empty()) write_round_artifacts(rs);
  }

  /// Runs n episodes per controllable subgoal; each achieved command yields
  /// one interventional record snapshotted at the trigger step.
  void collect_interventions(const std::vector<Option>& targets, int n_per_subgoal) {
    if (targets.empty()) throw ContractError("collect_interventions: empty target list");
    for (const auto& target : targets) {
      for (int n = 0; n < n_per_subgoal; ++n) {
        if (budget_exhausted()) return;
        collect_one(target);
      }
    }
  }

  /// Greedy rollout toward the task goal; appends one metrics row.
  void task_evaluation() {
    MetricsRow row;
    row.variant = variant_name(cfg_.variant);
    row.seed = cfg_.seed;
    SubGoal goal{task_.goal_var, true};
    auto ancestors = task_.causal_ancestors(task_.goal_var);
    if (hierarchy_.has_unit(goal)) {
      world_.reset(next_world_seed());
      ++episodes_used_;
      std::vector<FactoredState> trace{world_.state()};
      auto res = hierarchy_.run_goal(hierarchy_.unit(goal), world_, trace,
                                     hierarchy_.horizon_budget(world_),
                                     hierarchy_.params().max_options, 0.0, policy_rng_, nullptr);
      row.success = res.achieved ? 1 : 0;
      int remaining = 0;
      for (int v : ancestors) {
        if (!world_.increased_in(v, 0, world_.current_step())) ++remaining;
      }
      row.distance = remaining;
    } else {
      ++episodes_used_;  // accounted like a rollout, but nothing can run yet
      row.success = 0;
      row.distance = static_cast<int>(ancestors.size());
    }
    row.episode = episodes_used_;
    if (variant_learns_delays(cfg_.variant) && delays_fitted_) {
      for (size_t i = 0; i < effect_vars_.size(); ++i) {
        auto learned = delay_model_.row_distribution(effect_vars_[i]);
        row.kl.push_back(kl_divergence(world_.true_delay_row(effect_vars_[i]), learned));
      }
    }
    metrics_.push_back(std::move(row));
  }

  nlohmann::json config_json() const {
    nlohmann::json j;
    j["task"] = task_to_json(task_);
    j["tau_max"] = cfg_.world.tau_max;
    j["sigma_delay"] = cfg_.world.sigma_delay;
    j["horizon"] = cfg_.world.resolved_horizon();
    j["variant"] = variant_name(cfg_.variant);
    j["kappa"] = cfg_.effective_kappa();
    j["seed"] = cfg_.seed;
    j["max_episodes"] = cfg_.max_episodes;
    j["n_per_subgoal"] = cfg_.n_per_subgoal;
    return j;
  }

 private:
  static TrainParams resolve_train_params(const DechrlConfig& cfg) {
    TrainParams p = cfg.train;
    p.state_augmentation = cfg.variant == Variant::StateAugmentation;
    if (!variant_uses_empowerment(cfg.variant)) p.lambda_emp = 0.0;
    return p;
  }

  bool budget_exhausted() const { return episodes_used_ >= cfg_.max_episodes; }

  uint64_t next_world_seed() { return mix_seed(cfg_.seed, 0x776fULL, world_episode_counter_++); }

  std::vector<int> supported_lags() const {
    std::vector<int> lags;
    int kappa = cfg_.effective_kappa();
    for (int tau = kappa; tau <= cfg_.world.tau_max; tau += kappa) lags.push_back(tau);
    return lags;
  }

  void collect_one(const Option& target) {
    world_.reset(next_world_seed());
    ++episodes_used_;
    std::vector<FactoredState> trace{world_.state()};
    // Availability prefix: a random subset of already-controllable subgoals,
    // so trigger contexts vary across records. Subgoals on the target's own
    // variable are left out; pre-satisfying the commanded change would only
    // discard episodes.
    for (const auto& o : list_do_) {
      if (o.primitive) continue;
      if (!target.primitive && o.goal.var == target.goal.var) continue;
      if (!policy_rng_.bernoulli(0.5)) continue;
      if (world_.finished()) break;
      hierarchy_.execute_option(world_, trace, o, option_budget(), policy_rng_);
    }
    if (world_.finished()) return;

    int trigger = -1;
    uint32_t cause = 0;
    if (target.primitive) {
      trigger = world_.current_step();
      cause = cause_vector(world_.state(), target.action, task_.num_vars());
      Hierarchy::step_traced(world_, trace, target.action);
    } else {
      int before = world_.current_step();
      hierarchy_.execute_option(world_, trace, target, option_budget(), policy_rng_);
      if (!Hierarchy::goal_achieved(world_, target.goal, before, world_.current_step())) return;
      for (const auto& e : world_.events()) {
        if (e.var == target.goal.var && e.step > before &&
            ((target.goal.up && e.delta > 0) || (!target.goal.up && e.delta < 0))) {
          trigger = e.step;
          break;
        }
      }
      if (trigger < 0) return;
      cause = cause_vector(trace[trigger], 0, task_.num_vars());
    }

    for (int i = 0; i < cfg_.world.tau_max && !world_.finished(); ++i) {
      Hierarchy::step_traced(world_, trace, 0);
    }

    InterventionRecord rec;
    rec.cause_bits = cause;
    rec.effect_lag_bits.assign(task_.num_vars(), 0);
    int final_step = world_.current_step();
    for (const auto& e : world_.events()) {
      if (e.delta <= 0) continue;
      int lag = e.step - trigger;
      if (lag >= 1 && lag <= cfg_.world.tau_max) {
        rec.effect_lag_bits[e.var] |= (1u << (lag - 1));
      }
    }
    rec.max_valid_lag = std::min(cfg_.world.tau_max, final_step - trigger);
    if (rec.max_valid_lag >= 1) data_.records.push_back(std::move(rec));
  }

  int option_budget() const {
    return hierarchy_.params().option_budget_mult * cfg_.world.tau_max;
  }

  /// Refits every lag model from scratch on the accumulated records; lag
  /// learners are independent and never share state.
  void fit_scms() {
    scms_.clear();
    int kappa = cfg_.effective_kappa();
    for (int tau : supported_lags()) {
      ScmTau scm(tau, kappa, task_.num_vars(), task_.num_actions(), cfg_.scm);
      scm.set_data(data_);
      Rng rng(mix_seed(cfg_.seed, 0x73636dULL, (uint64_t)round_ * 1000 + tau));
      scm.train(rng);
      scms_.push_back(std::move(scm));
    }
  }

  void fit_delays() {
    delay_model_ = DelayModel(task_.num_vars(), cfg_.world.tau_max, cfg_.effective_kappa());
    DelayEvidence evidence(scms_, cfg_.accept_threshold);
    Rng rng(mix_seed(cfg_.seed, 0x64656cULL, round_));
    train_delay(delay_model_, evidence, cfg_.delay, rng);
    delays_fitted_ = true;
    hierarchy_.set_read_policy(read_policy());
  }

  DelayReadPolicy read_policy() const {
    DelayReadPolicy p;
    p.tau_max = cfg_.world.tau_max;
    switch (cfg_.variant) {
      case Variant::PriorFixed: {
        p.mode = DelayReadPolicy::Mode::FixedTrue;
        p.fixed_delays.assign(task_.num_vars(), 1);
        for (const auto& r : task_.rules) {
          p.fixed_delays[r.effect] =
              static_cast<int>(clamp(std::lround(r.delay_mean), 1, cfg_.world.tau_max));
        }
        break;
      }
      case Variant::PriorUniform:
        p.mode = DelayReadPolicy::Mode::UniformMax;
        break;
      case Variant::StateAugmentation:
        p.mode = DelayReadPolicy::Mode::NextStep;
        break;
      default:
        p.mode = DelayReadPolicy::Mode::Learned;
        p.model = &delay_model_;
        break;
    }
    return p;
  }

  int train_and_promote() {
    int promotions = 0;
    EmpowermentContext emp;
    emp.scms = &scms_;
    emp.delays = &delay_model_;
    emp.lambda = variant_uses_empowerment(cfg_.variant) ? hierarchy_.params().lambda_emp : 0.0;

    SubGoal task_goal{task_.goal_var, true};
    const auto& p = hierarchy_.params();
    for (bool up_pass : {true, false}) {
      for (auto& [g, u] : hierarchy_.units()) {
        if (g.up != up_pass) continue;
        if (u.status == PolicyUnit::Status::Promoted) continue;
        // A unit that keeps failing across rounds stops consuming budget.
        if (u.episodes_trained >= p.max_unit_episode_mult * p.unit_episodes &&
            u.success_ratio() < p.abandon_ratio) {
          continue;
        }
        train_unit(u, emp);
        if (promote(u, list_do_, hierarchy_.params().min_attempts,
                    hierarchy_.params().promote_threshold)) {
          ++promotions;
        }
        if (task_.goal_var >= 0 && hierarchy_.has_unit(task_goal) &&
            hierarchy_.unit(task_goal).status == PolicyUnit::Status::Promoted) {
          return promotions;  // the task is controllable; the round is done
        }
      }
    }
    return promotions;
  }

  void train_unit(PolicyUnit& u, const EmpowermentContext& emp) {
    const auto& p = hierarchy_.params();
    for (int ep = 1; ep <= p.unit_episodes; ++ep) {
      if (budget_exhausted()) return;
      hierarchy_.train_episode(u, world_, next_world_seed(), emp, policy_rng_);
      ++episodes_used_;
      if (ep % p.eval_every == 0) {
        hierarchy_.evaluate_unit(u, world_, next_world_seed(), policy_rng_);
        ++episodes_used_;
        task_evaluation();
        if (trailing_successes(u) >= p.early_stop_window &&
            u.episodes_trained >= p.unit_episodes * 3 / 10) {
          break;
        }
      }
    }
    while (static_cast<int>(u.eval_ring.size()) < p.min_attempts && !budget_exhausted()) {
      hierarchy_.evaluate_unit(u, world_, next_world_seed(), policy_rng_);
      ++episodes_used_;
    }
  }

  int trailing_successes(const PolicyUnit& u) const {
    int n = 0;
    for (auto it = u.eval_ring.rbegin(); it != u.eval_ring.rend() && *it; ++it) ++n;
    return n;
  }

  void final_eval_block() {
    for (int i = 0; i < cfg_.final_eval_episodes; ++i) {
      if (budget_exhausted()) return;
      task_evaluation();
    }
  }

  int count_new_edges(const std::vector<AcceptedEdge>& edges) {
    int fresh = 0;
    for (const auto& e : edges) {
      if (seen_edges_.insert({e.cause, e.effect}).second) ++fresh;
    }
    return fresh;
  }

  void write_round_artifacts(const RoundState& rs) {
    std::string base = cfg_.out_dir + "/round_" + std::to_string(rs.round);
    std::ofstream ef(base + "_edges.txt");
    ef << edges_to_text(rs.edges, task_);
    if (variant_learns_delays(cfg_.variant) && delays_fitted_) {
      std::ofstream bf(base + "_beta.csv");
      bf << delay_model_.to_csv(task_);
    }
    std::ofstream hf(base + "_hierarchy.json");
    hf << hierarchy_to_json(hierarchy_).dump(2) << "\n";
  }

  void write_metrics_csv() {
    std::ofstream mf(cfg_.out_dir + "/metrics.csv");
    mf << metrics_csv_header(task_);
    for (const auto& row : metrics_) mf << metrics_row_csv(row, effect_vars_.size());
  }

  DechrlConfig cfg_;
  TaskSpec task_;
  World world_;
  Hierarchy hierarchy_;
  DelayModel delay_model_;
  std::vector<ScmTau> scms_;
  InterventionData data_;
  std::vector<Option> list_do_;
  std::vector<int> effect_vars_;
  std::vector<MetricsRow> metrics_;
  std::vector<RoundState> round_log_;
  std::set<std::pair<int, int>> seen_edges_;

  Rng policy_rng_;
  uint64_t world_episode_counter_ = 0;
  long episodes_used_ = 0;
  int round_ = 0;
  int stagnant_ = 0;
  bool doubled_ = false;
  bool delays_fitted_ = false;
  int n_per_subgoal_ = 0;
  double delay_seconds_total_ = 0.0;
};

/// Convenience: construct and run.
inline RunResult run_dechrl(DechrlConfig config) {
  Orchestrator orch(std::move(config));
  return orch.run();
}

}  // namespace dechrl

#endif  // DECHRL_ORCHESTRATOR_HPP_
