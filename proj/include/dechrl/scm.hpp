#ifndef DECHRL_SCM_HPP_
#define DECHRL_SCM_HPP_

#include <array>
#include <unordered_map>

#include "dechrl/world.hpp"

namespace dechrl {

// ---------------------------------------------------------------------------
// Interventional data
//
// One record per achieved intervention. The cause vector is the binarized
// state (count >= 1) plus a one-hot action at the trigger step; effects are
// per-variable landing indicators at each lag after the trigger.
// ---------------------------------------------------------------------------

struct InterventionRecord {
  uint32_t cause_bits = 0;               // bits [0,M): state, bits [M,M+N): action
  std::vector<uint32_t> effect_lag_bits; // per variable; bit (tau-1) = landing at lag tau
  int max_valid_lag = 0;                 // lags beyond the episode end are invalid
};

struct InterventionData {
  int num_vars = 0;
  int num_actions = 0;
  int tau_max = 0;
  std::vector<InterventionRecord> records;

  int num_causes() const { return num_vars + num_actions; }

  void clear() { records.clear(); }
};

inline uint32_t binarize_state(const FactoredState& s) {
  uint32_t bits = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] >= 1) bits |= (1u << i);
  }
  return bits;
}

inline uint32_t cause_vector(const FactoredState& s, int action, int num_vars) {
  return binarize_state(s) | (1u << (num_vars + action));
}

// ---------------------------------------------------------------------------
// Generating function tables
// ---------------------------------------------------------------------------

/// Tabular conditional over the binary effect outcome (not-increased /
/// increased), keyed by the parent configuration selected by a graph row.
/// Laplace-smoothed; unseen configurations fall back to uniform.
struct GenTable {
  std::unordered_map<uint64_t, std::array<double, 2>> rows;

  std::array<double, 2> predict(uint64_t key) const {
    auto it = rows.find(key);
    if (it == rows.end()) return {0.5, 0.5};
    return it->second;
  }
};

/// Packs the cause bits selected by `mask` into a dense table key.
inline uint64_t config_key(uint32_t cause_bits, uint32_t mask) {
  uint64_t key = 0;
  while (mask != 0) {
    uint32_t low = mask & (~mask + 1u);
    key = (key << 1) | ((cause_bits & low) ? 1u : 0u);
    mask ^= low;
  }
  return key;
}

struct ScmParams {
  int update_rounds = 200;
  int graph_samples = 8;      // N_s
  double learning_rate = 0.5; // scores are per-record averages, hence the scale
  double eta_init = -2.5;
  double eta_clamp = 10.0;
  double laplace_alpha = 1.0;
  double accept_threshold = 0.5;
};

// ---------------------------------------------------------------------------
// Score-function gradient estimate
//
// Scores one sampled graph row per draw; the baseline for each draw is the
// mean score of the other draws (leave-one-out), which keeps the estimator
// unbiased for the exact gradient of the expected score.
// ---------------------------------------------------------------------------

inline std::vector<double> eta_row_gradient(const std::vector<double>& scores,
                                            const std::vector<uint32_t>& masks,
                                            const std::vector<double>& eta_row) {
  const int n = static_cast<int>(scores.size());
  const int cols = static_cast<int>(eta_row.size());
  std::vector<double> grad(cols, 0.0);
  if (n == 0) return grad;
  double total = 0.0;
  for (double s : scores) total += s;
  for (int k = 0; k < n; ++k) {
    double baseline = n > 1 ? (total - scores[k]) / (n - 1) : 0.0;
    double adv = scores[k] - baseline;
    for (int j = 0; j < cols; ++j) {
      double g = (masks[k] >> j) & 1u ? 1.0 : 0.0;
      grad[j] += adv * (g - sigmoid(eta_row[j]));
    }
  }
  for (double& g : grad) g /= n;
  return grad;
}

// ---------------------------------------------------------------------------
// Per-lag structural causal model
// ---------------------------------------------------------------------------

/// Learns adjacency logits and generating tables for effects that manifest
/// in the lag window (tau - window, tau] after their causes. window == 1 is
/// the exact-lag model; wider windows implement coarse delay bins.
class ScmTau {
 public:
  ScmTau(int tau, int window, int num_vars, int num_actions, ScmParams params = {})
      : tau_(tau),
        window_(window),
        num_vars_(num_vars),
        num_causes_(num_vars + num_actions),
        params_(params),
        eta_(static_cast<size_t>(num_vars) * num_causes_, params.eta_init) {
    if (window_ < 1 || window_ > tau_) throw ConfigError("ScmTau: bad window");
  }

  int tau() const { return tau_; }
  int num_vars() const { return num_vars_; }
  int num_causes() const { return num_causes_; }

  double eta(int effect, int cause) const { return eta_[idx(effect, cause)]; }
  void set_eta(int effect, int cause, double v) {
    eta_[idx(effect, cause)] = clamp(v, -params_.eta_clamp, params_.eta_clamp);
    dirty_ = true;
  }
  double edge_probability(int effect, int cause) const { return sigmoid(eta(effect, cause)); }

  /// Replaces the training data. Records too short for this lag are dropped.
  void set_data(const InterventionData& data) {
    causes_.clear();
    outcomes_.clear();
    for (const auto& rec : data.records) {
      if (rec.max_valid_lag < tau_) continue;
      causes_.push_back(rec.cause_bits);
      uint32_t window_mask = ((window_ >= 32 ? 0u : (1u << window_)) - 1u) << (tau_ - window_);
      uint32_t out = 0;
      for (int i = 0; i < num_vars_; ++i) {
        if (rec.effect_lag_bits[i] & window_mask) out |= (1u << i);
      }
      outcomes_.push_back(out);
    }
    nll_cache_.assign(num_vars_, {});
    tables_.clear();
    dirty_ = true;
  }

  size_t record_count() const { return causes_.size(); }

  /// Samples one binary parent mask per effect row from Bernoulli(sigma(eta)).
  std::vector<uint32_t> sample_graph(Rng& rng) const {
    std::vector<uint32_t> rows(num_vars_, 0);
    for (int i = 0; i < num_vars_; ++i) {
      for (int j = 0; j < num_causes_; ++j) {
        if (rng.bernoulli(sigmoid(eta_[idx(i, j)]))) rows[i] |= (1u << j);
      }
    }
    return rows;
  }

  /// Negative log-likelihood of the data for one effect under the parents
  /// selected by `mask`, with the table fitted on the same data. An empty
  /// mask scores against the marginal table.
  double row_nll(int effect, uint32_t mask) const {
    auto& cache = nll_cache_[effect];
    auto it = cache.find(mask);
    if (it != cache.end()) return it->second;
    double nll = fit_and_score(effect, mask, nullptr);
    cache.emplace(mask, nll);
    return nll;
  }

  /// Per-effect NLL of a full sampled graph.
  std::vector<double> nll(const std::vector<uint32_t>& graph_rows) const {
    if (causes_.empty()) throw ContractError("nll: empty batch");
    std::vector<double> out(num_vars_);
    for (int i = 0; i < num_vars_; ++i) out[i] = row_nll(i, graph_rows[i]);
    return out;
  }

  /// Maximum-likelihood table with Laplace smoothing for one effect row.
  GenTable fit_generating(int effect, uint32_t mask) const {
    GenTable table;
    fit_and_score(effect, mask, &table);
    return table;
  }

  /// One REINFORCE round: N_s sampled graphs scored by the per-record mean of
  /// -NLL per effect row, leave-one-out mean baseline, logits clamped after
  /// the step.
  void update_eta_round(Rng& rng) {
    if (causes_.empty()) return;
    const int n = params_.graph_samples;
    std::vector<std::vector<uint32_t>> samples(n);
    for (int k = 0; k < n; ++k) samples[k] = sample_graph(rng);
    for (int i = 0; i < num_vars_; ++i) {
      std::vector<double> scores(n);
      std::vector<uint32_t> masks(n);
      std::vector<double> row(eta_.begin() + idx(i, 0), eta_.begin() + idx(i, 0) + num_causes_);
      for (int k = 0; k < n; ++k) {
        masks[k] = samples[k][i];
        scores[k] = -row_nll(i, masks[k]) / static_cast<double>(causes_.size());
      }
      auto grad = eta_row_gradient(scores, masks, row);
      for (int j = 0; j < num_causes_; ++j) {
        double v = eta_[idx(i, j)] + params_.learning_rate * grad[j];
        eta_[idx(i, j)] = clamp(v, -params_.eta_clamp, params_.eta_clamp);
      }
    }
    dirty_ = true;
  }

  void train(Rng& rng) {
    for (int r = 0; r < params_.update_rounds; ++r) update_eta_round(rng);
  }

  /// Parent mask of causes accepted for an effect at this lag (strict >).
  uint32_t accepted_mask(int effect, double threshold) const {
    uint32_t mask = 0;
    for (int j = 0; j < num_causes_; ++j) {
      if (edge_probability(effect, j) > threshold) mask |= (1u << j);
    }
    return mask;
  }

  /// Conditional outcome distribution for an effect given a full cause
  /// vector, using the table fitted at the accepted parent mask.
  std::array<double, 2> predict(int effect, uint32_t cause_bits) const {
    refresh_tables();
    const auto& entry = tables_[effect];
    return entry.second.predict(config_key(cause_bits, entry.first));
  }

  const ScmParams& params() const { return params_; }

 private:
  size_t idx(int effect, int cause) const {
    return static_cast<size_t>(effect) * num_causes_ + cause;
  }

  double fit_and_score(int effect, uint32_t mask, GenTable* table_out) const {
    const double alpha = params_.laplace_alpha;
    std::unordered_map<uint64_t, std::array<double, 2>> counts;
    for (size_t r = 0; r < causes_.size(); ++r) {
      uint64_t key = config_key(causes_[r], mask);
      int out = (outcomes_[r] >> effect) & 1u;
      counts[key][out] += 1.0;
    }
    double nll = 0.0;
    for (auto& [key, c] : counts) {
      double tot = c[0] + c[1] + 2.0 * alpha;
      double p0 = (c[0] + alpha) / tot;
      double p1 = (c[1] + alpha) / tot;
      nll -= c[0] * std::log(p0) + c[1] * std::log(p1);
      if (table_out) table_out->rows[key] = {p0, p1};
    }
    return nll;
  }

  void refresh_tables() const {
    if (!dirty_ && !tables_.empty()) return;
    tables_.clear();
    tables_.reserve(num_vars_);
    for (int i = 0; i < num_vars_; ++i) {
      uint32_t mask = accepted_mask(i, params_.accept_threshold);
      tables_.emplace_back(mask, fit_generating(i, mask));
    }
    dirty_ = false;
  }

  int tau_;
  int window_;
  int num_vars_;
  int num_causes_;
  ScmParams params_;
  std::vector<double> eta_;
  std::vector<uint32_t> causes_;
  std::vector<uint32_t> outcomes_;
  mutable std::vector<std::unordered_map<uint32_t, double>> nll_cache_;
  mutable std::vector<std::pair<uint32_t, GenTable>> tables_;
  mutable bool dirty_ = true;
};

// ---------------------------------------------------------------------------
// Accepted edges across lags
// ---------------------------------------------------------------------------

struct AcceptedEdge {
  int cause = -1;   // cause column index in [0, M+N)
  int effect = -1;
  int lag = 0;
  double probability = 0.0;
};

inline std::vector<AcceptedEdge> accepted_edges(const std::vector<ScmTau>& scms,
                                                double threshold = 0.5) {
  if (threshold <= 0.0 || threshold >= 1.0) throw ContractError("accepted_edges: bad threshold");
  std::vector<AcceptedEdge> edges;
  for (const auto& scm : scms) {
    for (int i = 0; i < scm.num_vars(); ++i) {
      for (int j = 0; j < scm.num_causes(); ++j) {
        double p = scm.edge_probability(i, j);
        if (p > threshold) edges.push_back({j, i, scm.tau(), p});
      }
    }
  }
  return edges;
}

/// Edge list in the exportable text format: cause, effect, lag, probability.
inline std::string edges_to_text(const std::vector<AcceptedEdge>& edges, const TaskSpec& spec) {
  std::ostringstream out;
  out << "# cause,effect,lag,probability\n";
  for (const auto& e : edges) {
    std::string cause = e.cause < spec.num_vars()
                            ? spec.variables[e.cause]
                            : spec.actions[e.cause - spec.num_vars()];
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", e.probability);
    out << cause << "," << spec.variables[e.effect] << "," << e.lag << "," << buf << "\n";
  }
  return out.str();
}

}  // namespace dechrl

#endif  // DECHRL_SCM_HPP_
