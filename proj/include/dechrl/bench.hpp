#ifndef DECHRL_BENCH_HPP_
#define DECHRL_BENCH_HPP_

#include <future>
#include <iomanip>

#include "dechrl/orchestrator.hpp"

namespace dechrl {

// ---------------------------------------------------------------------------
// Metrics over an evaluation log
// ---------------------------------------------------------------------------

/// Mean success over the last 100 evaluation rollouts. Fewer rows than 100
/// are averaged as-is with a warning.
inline double asr(const std::vector<MetricsRow>& log, std::ostream* warn = nullptr) {
  if (log.empty()) throw ContractError("asr: empty evaluation log");
  size_t n = std::min<size_t>(100, log.size());
  if (log.size() < 100 && warn)
    *warn << "[dechrl] warning: ASR over " << log.size() << " rollouts (< 100)\n";
  double s = 0.0;
  for (size_t i = log.size() - n; i < log.size(); ++i) s += log[i].success;
  return s / n;
}

/// Mean subgoal distance to completion over the last 100 evaluation rollouts.
inline double adc(const std::vector<MetricsRow>& log, std::ostream* warn = nullptr) {
  if (log.empty()) throw ContractError("adc: empty evaluation log");
  size_t n = std::min<size_t>(100, log.size());
  if (log.size() < 100 && warn)
    *warn << "[dechrl] warning: ADC over " << log.size() << " rollouts (< 100)\n";
  double s = 0.0;
  for (size_t i = log.size() - n; i < log.size(); ++i) s += log[i].distance;
  return s / n;
}

/// KL(true || learned) per effect variable, in nats, with a 1e-9 floor on the
/// learned probabilities.
inline std::vector<double> kl_per_edge(const std::vector<std::vector<double>>& true_rows,
                                       const std::vector<std::vector<double>>& learned_rows) {
  if (true_rows.size() != learned_rows.size())
    throw ContractError("kl_per_edge: row count mismatch");
  std::vector<double> out;
  for (size_t i = 0; i < true_rows.size(); ++i) {
    if (true_rows[i].size() != learned_rows[i].size())
      throw ContractError("kl_per_edge: tau_max mismatch");
    out.push_back(kl_divergence(true_rows[i], learned_rows[i]));
  }
  return out;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw ContractError("median: empty input");
  std::sort(xs.begin(), xs.end());
  size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// ---------------------------------------------------------------------------
// Experiment harness
// ---------------------------------------------------------------------------

struct ExperimentSpec {
  std::string task_name = "GetSilverore";
  std::optional<TaskSpec> custom_task;
  int tau_max = 4;
  double sigma_delay = 0.4;
  Variant variant = Variant::Dechrl;
  int kappa = 1;
  int seeds = 5;
  uint64_t seed_base = 0;
  long episodes = 50000;
  std::string out_dir;  // empty: keep results in memory only
  DechrlConfig overrides;  // scm/delay/train parameter block to copy from
  bool parallel = true;
};

struct SeedOutcome {
  uint64_t seed = 0;
  RunResult result;
  double final_asr = 0.0;
  double final_adc = 0.0;
  std::vector<double> final_kl;  // per effect; empty when no delay model
};

struct ExperimentResult {
  ExperimentSpec spec;
  TaskSpec task;
  std::vector<SeedOutcome> outcomes;

  double median_asr() const {
    std::vector<double> v;
    for (const auto& o : outcomes) v.push_back(o.final_asr);
    return median(v);
  }
  double median_adc() const {
    std::vector<double> v;
    for (const auto& o : outcomes) v.push_back(o.final_adc);
    return median(v);
  }
  std::vector<double> median_kl() const {
    if (outcomes.empty() || outcomes.front().final_kl.empty()) return {};
    std::vector<double> out;
    for (size_t e = 0; e < outcomes.front().final_kl.size(); ++e) {
      std::vector<double> v;
      for (const auto& o : outcomes) v.push_back(o.final_kl[e]);
      out.push_back(median(v));
    }
    return out;
  }
  /// Median final success per up-subgoal across seeds.
  std::map<std::string, double> median_subgoal_success() const {
    std::map<std::string, std::vector<double>> acc;
    for (const auto& o : outcomes) {
      for (const auto& [name, v] : o.result.subgoal_success) acc[name].push_back(v);
    }
    std::map<std::string, double> out;
    for (auto& [name, v] : acc) out[name] = median(v);
    return out;
  }
};

inline DechrlConfig make_run_config(const ExperimentSpec& spec, uint64_t seed) {
  DechrlConfig cfg = spec.overrides;
  cfg.world.task_name = spec.task_name;
  cfg.world.tau_max = spec.tau_max;
  cfg.world.sigma_delay = spec.sigma_delay;
  cfg.custom_task = spec.custom_task;
  cfg.variant = spec.variant;
  cfg.kappa = spec.variant == Variant::SimplifiedDechrl ? spec.kappa : 1;
  cfg.seed = seed;
  cfg.max_episodes = spec.episodes;
  if (!spec.out_dir.empty()) {
    cfg.out_dir = spec.out_dir + "/" + variant_name(spec.variant) + "/seed_" +
                  std::to_string(seed);
  }
  return cfg;
}

inline SeedOutcome run_seed(const ExperimentSpec& spec, uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  out.result = run_dechrl(make_run_config(spec, seed));
  out.final_asr = asr(out.result.metrics, &std::cerr);
  out.final_adc = adc(out.result.metrics, &std::cerr);
  if (!out.result.learned_delays.empty()) {
    std::vector<std::vector<double>> learned;
    TaskSpec task = spec.custom_task ? *spec.custom_task : builtin_task(spec.task_name);
    for (int v : effect_variables(task)) learned.push_back(out.result.learned_delays[v]);
    out.final_kl = kl_per_edge(out.result.true_delays, learned);
  }
  return out;
}

/// Runs the selected variant over the seed sweep. Seeds are independent jobs;
/// aggregation is a single-threaded reduce in seed order.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.seeds < 1) throw ConfigError("run_experiment: need at least one seed");
  if (spec.kappa != 1 && spec.variant != Variant::SimplifiedDechrl)
    throw ConfigError("run_experiment: kappa requires the simplified variant");
  ExperimentResult result;
  result.spec = spec;
  result.task = spec.custom_task ? *spec.custom_task : builtin_task(spec.task_name);
  if (spec.parallel && spec.seeds > 1) {
    std::vector<std::future<SeedOutcome>> jobs;
    for (int s = 0; s < spec.seeds; ++s) {
      uint64_t seed = spec.seed_base + s;
      jobs.push_back(std::async(std::launch::async, [&spec, seed] { return run_seed(spec, seed); }));
    }
    for (auto& j : jobs) result.outcomes.push_back(j.get());
  } else {
    for (int s = 0; s < spec.seeds; ++s) {
      result.outcomes.push_back(run_seed(spec, spec.seed_base + s));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

inline std::string summary_csv(const ExperimentResult& r) {
  std::ostringstream out;
  out << "# dechrl summary v1\n";
  out << "variant,task,tau_max,sigma_delay,kappa,seeds,median_asr,median_adc";
  auto effects = effect_variables(r.task);
  for (int v : effects) out << ",median_kl_" << r.task.variables[v];
  out << "\n";
  out << variant_name(r.spec.variant) << "," << r.task.name << "," << r.spec.tau_max << ","
      << r.spec.sigma_delay << "," << r.spec.kappa << "," << r.spec.seeds;
  char buf[64];
  std::snprintf(buf, sizeof(buf), ",%.4f", r.median_asr());
  out << buf;
  std::snprintf(buf, sizeof(buf), ",%.4f", r.median_adc());
  out << buf;
  auto kl = r.median_kl();
  for (size_t i = 0; i < effects.size(); ++i) {
    if (i < kl.size()) {
      std::snprintf(buf, sizeof(buf), ",%.4f", kl[i]);
      out << buf;
    } else {
      out << ",";
    }
  }
  out << "\n";
  return out.str();
}

inline std::string summary_table(const ExperimentResult& r) {
  std::ostringstream out;
  out << "== " << variant_name(r.spec.variant) << " on " << r.task.name
      << " (tau_max=" << r.spec.tau_max << ", sigma=" << r.spec.sigma_delay;
  if (r.spec.variant == Variant::SimplifiedDechrl) out << ", kappa=" << r.spec.kappa;
  out << ", seeds=" << r.spec.seeds << ") ==\n";
  out << std::fixed << std::setprecision(3);
  out << "  median ASR: " << r.median_asr() << "\n";
  out << "  median ADC: " << r.median_adc() << "\n";
  auto kl = r.median_kl();
  if (!kl.empty()) {
    auto effects = effect_variables(r.task);
    out << "  median KL(true||learned):\n";
    for (size_t i = 0; i < kl.size(); ++i) {
      out << "    " << std::setw(14) << r.task.variables[effects[i]] << ": " << kl[i] << "\n";
    }
  }
  auto sub = r.median_subgoal_success();
  if (!sub.empty()) {
    out << "  median subgoal success:\n";
    for (const auto& [name, v] : sub) {
      out << "    " << std::setw(14) << name << ": " << v << "\n";
    }
  }
  out << "  per-seed final ASR:";
  for (const auto& o : r.outcomes) out << " " << o.final_asr;
  out << "\n";
  return out.str();
}

inline void write_experiment_outputs(const ExperimentResult& r) {
  if (r.spec.out_dir.empty()) return;
  std::filesystem::create_directories(r.spec.out_dir);
  std::ofstream sf(r.spec.out_dir + "/summary.csv");
  sf << summary_csv(r);
  std::ofstream tf(r.spec.out_dir + "/summary.txt");
  tf << summary_table(r);
}

}  // namespace dechrl

#endif  // DECHRL_BENCH_HPP_
