#ifndef DECHRL_DELAYDIST_HPP_
#define DECHRL_DELAYDIST_HPP_

#include "dechrl/scm.hpp"

namespace dechrl {

// ---------------------------------------------------------------------------
// Delay logits
//
// One row of logits per effect variable over lags {1..tau_max}; the row
// softmax is the learned delay distribution. In simplified mode the support
// is restricted to multiples of the stride kappa and the softmax renormalizes
// over that support.
// ---------------------------------------------------------------------------

inline constexpr double kBetaClamp = 10.0;

class DelayModel {
 public:
  DelayModel(int num_vars, int tau_max, int kappa = 1)
      : num_vars_(num_vars), tau_max_(tau_max), kappa_(1),
        beta_(static_cast<size_t>(num_vars) * tau_max, 0.0),
        support_(tau_max, true) {
    if (tau_max_ < 1) throw ConfigError("DelayModel: tau_max must be >= 1");
    restrict_support(kappa);
  }

  int num_vars() const { return num_vars_; }
  int tau_max() const { return tau_max_; }
  int kappa() const { return kappa_; }
  const std::vector<bool>& support() const { return support_; }

  /// Lags in the active support, ascending.
  std::vector<int> supported_lags() const {
    std::vector<int> lags;
    for (int tau = 1; tau <= tau_max_; ++tau) {
      if (support_[tau - 1]) lags.push_back(tau);
    }
    return lags;
  }

  double beta(int effect, int tau) const { return beta_[idx(effect, tau)]; }
  void set_beta(int effect, int tau, double v) {
    beta_[idx(effect, tau)] = clamp(v, -kBetaClamp, kBetaClamp);
  }

  /// Keeps only lags divisible by kappa in the support. kappa == 1 is the
  /// identity. Masked columns carry no mass; the softmax renormalizes.
  void restrict_support(int kappa) {
    if (kappa < 1 || kappa > tau_max_) throw ConfigError("restrict_support: bad kappa");
    kappa_ = kappa;
    for (int tau = 1; tau <= tau_max_; ++tau) support_[tau - 1] = (tau % kappa == 0);
  }

  /// Row-stochastic distribution over lags for one effect.
  std::vector<double> row_distribution(int effect) const {
    std::vector<double> logits(beta_.begin() + idx(effect, 1),
                               beta_.begin() + idx(effect, 1) + tau_max_);
    return softmax(logits, support_);
  }

  /// Full M x tau_max row-stochastic matrix.
  std::vector<std::vector<double>> distribution() const {
    std::vector<std::vector<double>> rows;
    rows.reserve(num_vars_);
    for (int i = 0; i < num_vars_; ++i) rows.push_back(row_distribution(i));
    return rows;
  }

  /// Samples a lag in {1..tau_max} from the effect's learned distribution.
  int sample_delay(int effect, Rng& rng) const {
    auto p = row_distribution(effect);
    return 1 + rng.categorical(p);
  }

  std::string to_csv(const TaskSpec& spec) const {
    std::ostringstream out;
    out << "effect,tau,probability\n";
    for (int i = 0; i < num_vars_; ++i) {
      auto p = row_distribution(i);
      for (int tau = 1; tau <= tau_max_; ++tau) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", p[tau - 1]);
        out << spec.variables[i] << "," << tau << "," << buf << "\n";
      }
    }
    return out.str();
  }

 private:
  size_t idx(int effect, int tau) const {
    return static_cast<size_t>(effect) * tau_max_ + (tau - 1);
  }

  int num_vars_;
  int tau_max_;
  int kappa_;
  std::vector<double> beta_;
  std::vector<bool> support_;
};

// ---------------------------------------------------------------------------
// Evidence from the multi-timescale adjacency logits
// ---------------------------------------------------------------------------

/// log sigma(eta) evidence per (effect, lag). For each effect the candidate
/// causes are those accepted at any lag; evidence at a lag is the row maximum
/// over those candidates. Effects with no accepted cause fall back to the
/// plain row maximum.
class DelayEvidence {
 public:
  DelayEvidence(const std::vector<ScmTau>& scms, double accept_threshold = 0.5) {
    if (scms.empty()) throw ContractError("DelayEvidence: no trained lag models");
    const int m = scms.front().num_vars();
    const int c = scms.front().num_causes();
    std::vector<uint32_t> candidates(m, 0);
    for (const auto& scm : scms) {
      for (int i = 0; i < m; ++i) candidates[i] |= scm.accepted_mask(i, accept_threshold);
    }
    for (const auto& scm : scms) {
      lag_index_[scm.tau()] = static_cast<int>(loglik_.size());
      std::vector<double> col(m);
      for (int i = 0; i < m; ++i) {
        uint32_t mask = candidates[i];
        double best = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < c; ++j) {
          if (mask != 0 && !((mask >> j) & 1u)) continue;
          best = std::max(best, std::log(sigmoid(scm.eta(i, j))));
        }
        col[i] = best;
      }
      loglik_.push_back(std::move(col));
    }
  }

  /// Evidence log-likelihood for (effect, lag); the lag must have a model.
  double loglik(int effect, int lag) const {
    auto it = lag_index_.find(lag);
    if (it == lag_index_.end())
      throw ContractError("DelayEvidence: no model for lag " + std::to_string(lag));
    return loglik_[it->second][effect];
  }

 private:
  std::map<int, int> lag_index_;
  std::vector<std::vector<double>> loglik_;
};

/// Per-effect evidence for one sampled delay hypothesis (vector of lags, one
/// entry per effect).
inline std::vector<double> hypothesis_loglik(const std::vector<int>& hypothesis,
                                             const DelayEvidence& evidence) {
  std::vector<double> out(hypothesis.size());
  for (size_t i = 0; i < hypothesis.size(); ++i) {
    out[i] = evidence.loglik(static_cast<int>(i), hypothesis[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Regularizer
//
// L_reg = -lambda1 * sum sigma(b)(1 - sigma(b)) + lambda2 * sum sigma(b),
// with the logistic function applied to the raw logits.
// ---------------------------------------------------------------------------

inline double regularizer_value(const DelayModel& model, double lambda1, double lambda2) {
  double v = 0.0;
  for (int i = 0; i < model.num_vars(); ++i) {
    for (int tau = 1; tau <= model.tau_max(); ++tau) {
      if (!model.support()[tau - 1]) continue;
      double s = sigmoid(model.beta(i, tau));
      v += -lambda1 * s * (1.0 - s) + lambda2 * s;
    }
  }
  return v;
}

/// d L_reg / d beta, elementwise; zero on masked-out columns.
inline std::vector<std::vector<double>> regularizer_grad(const DelayModel& model,
                                                         double lambda1, double lambda2) {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw ContractError("regularizer_grad: negative lambda");
  std::vector<std::vector<double>> grad(model.num_vars(),
                                        std::vector<double>(model.tau_max(), 0.0));
  for (int i = 0; i < model.num_vars(); ++i) {
    for (int tau = 1; tau <= model.tau_max(); ++tau) {
      if (!model.support()[tau - 1]) continue;
      double s = sigmoid(model.beta(i, tau));
      double sp = s * (1.0 - s);  // d sigma / d beta
      grad[i][tau - 1] = -lambda1 * sp * (1.0 - 2.0 * s) + lambda2 * sp;
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct DelayTrainParams {
  int hypotheses = 16;  // K
  int iterations = 300;
  double learning_rate = 0.05;
  double lambda1 = 0.05;
  double lambda2 = 0.05;
};

/// Raw score-function update direction for one effect row: samples K lags
/// from the current row distribution, weights each one-hot deviation by the
/// softmax-normalized evidence weight. Oriented to ascend expected evidence.
inline std::vector<double> delay_row_update(const std::vector<double>& row_dist,
                                            const std::vector<int>& sampled_lags,
                                            const std::vector<double>& logliks) {
  const int tau_max = static_cast<int>(row_dist.size());
  std::vector<double> weights = softmax(logliks);
  std::vector<double> update(tau_max, 0.0);
  for (size_t k = 0; k < sampled_lags.size(); ++k) {
    for (int t = 0; t < tau_max; ++t) {
      double onehot = (sampled_lags[k] == t + 1) ? 1.0 : 0.0;
      update[t] += weights[k] * (onehot - row_dist[t]);
    }
  }
  return update;
}

/// Alternates sampled-hypothesis ascent with the regularizer descent until
/// the iteration budget is spent. Rows are independent.
inline void train_delay(DelayModel& model, const DelayEvidence& evidence,
                        const DelayTrainParams& params, Rng& rng) {
  if (params.hypotheses < 2) throw ContractError("train_delay: need K >= 2");
  const int m = model.num_vars();
  for (int it = 0; it < params.iterations; ++it) {
    auto reg = regularizer_grad(model, params.lambda1, params.lambda2);
    for (int i = 0; i < m; ++i) {
      auto dist = model.row_distribution(i);
      std::vector<int> lags(params.hypotheses);
      std::vector<double> lls(params.hypotheses);
      for (int k = 0; k < params.hypotheses; ++k) {
        lags[k] = 1 + rng.categorical(dist);
        lls[k] = evidence.loglik(i, lags[k]);
      }
      auto update = delay_row_update(dist, lags, lls);
      for (int tau = 1; tau <= model.tau_max(); ++tau) {
        if (!model.support()[tau - 1]) continue;
        double v = model.beta(i, tau) +
                   params.learning_rate * (update[tau - 1] - reg[i][tau - 1]);
        model.set_beta(i, tau, v);
      }
    }
  }
}

}  // namespace dechrl

#endif  // DECHRL_DELAYDIST_HPP_
