#ifndef DECHRL_EMPOWERMENT_HPP_
#define DECHRL_EMPOWERMENT_HPP_

#include "dechrl/delaydist.hpp"

namespace dechrl {

// ---------------------------------------------------------------------------
// Delay-weighted conditional mutual information between an option choice and
// the delayed effect outcome, with the SCM generating tables standing in for
// the environment dynamics.
// ---------------------------------------------------------------------------

struct EmpowermentEstimate {
  double value = 0.0;              // nats
  std::vector<double> per_tau;     // per-lag CMI contribution
  double variance = 0.0;           // Monte-Carlo variance; 0 in exact mode
};

namespace detail {

inline void check_channel(const std::vector<std::vector<std::vector<double>>>& cond,
                          std::span<const double> pi) {
  double psum = 0.0;
  for (double v : pi) psum += v;
  if (std::abs(psum - 1.0) > 1e-6) throw ContractError("empowerment: policy not normalized");
  for (const auto& lag : cond) {
    if (lag.size() != pi.size()) throw ContractError("empowerment: option count mismatch");
    for (const auto& row : lag) {
      double s = 0.0;
      for (double v : row) s += v;
      if (std::abs(s - 1.0) > 1e-6)
        throw ContractError("empowerment: conditional row not normalized");
    }
  }
}

inline std::vector<double> marginal(const std::vector<std::vector<double>>& cond_lag,
                                    std::span<const double> pi) {
  std::vector<double> marg(cond_lag.front().size(), 0.0);
  for (size_t o = 0; o < pi.size(); ++o) {
    for (size_t s = 0; s < marg.size(); ++s) marg[s] += pi[o] * cond_lag[o][s];
  }
  return marg;
}

}  // namespace detail

/// Exact mode: full enumeration of options and outcomes per lag.
/// cond[t][o][s] is the outcome distribution at supported lag t given option
/// o; weights[t] is the learned delay probability of that lag.
inline EmpowermentEstimate empowerment_exact(
    std::span<const double> weights,
    const std::vector<std::vector<std::vector<double>>>& cond,
    std::span<const double> pi) {
  detail::check_channel(cond, pi);
  EmpowermentEstimate est;
  est.per_tau.resize(cond.size(), 0.0);
  for (size_t t = 0; t < cond.size(); ++t) {
    auto marg = detail::marginal(cond[t], pi);
    double h_cond = 0.0;
    for (size_t o = 0; o < pi.size(); ++o) h_cond += pi[o] * entropy(cond[t][o]);
    est.per_tau[t] = entropy(marg) - h_cond;
    est.value += weights[t] * est.per_tau[t];
  }
  est.variance = 0.0;
  return est;
}

/// Monte-Carlo mode: per lag, samples option-outcome pairs and averages the
/// pointwise mutual information, with the marginal log-probability evaluated
/// through a log-sum-exp over options.
inline EmpowermentEstimate empowerment_mc(
    std::span<const double> weights,
    const std::vector<std::vector<std::vector<double>>>& cond,
    std::span<const double> pi, int samples, Rng& rng) {
  if (samples < 1) throw ContractError("empowerment_mc: need samples >= 1");
  detail::check_channel(cond, pi);
  EmpowermentEstimate est;
  est.per_tau.resize(cond.size(), 0.0);
  std::vector<double> log_pi(pi.size());
  for (size_t o = 0; o < pi.size(); ++o) log_pi[o] = std::log(std::max(pi[o], 1e-300));
  for (size_t t = 0; t < cond.size(); ++t) {
    double sum = 0.0, sumsq = 0.0;
    std::vector<double> terms(pi.size());
    for (int k = 0; k < samples; ++k) {
      int o = rng.categorical(pi);
      int s = rng.categorical(cond[t][o]);
      for (size_t o2 = 0; o2 < pi.size(); ++o2) {
        terms[o2] = log_pi[o2] + std::log(std::max(cond[t][o2][s], 1e-300));
      }
      double log_marg = logsumexp(terms);
      double c = std::log(cond[t][o][s]) - log_marg;  // pointwise MI
      sum += c;
      sumsq += c * c;
    }
    double mean = sum / samples;
    est.per_tau[t] = mean;
    est.value += weights[t] * mean;
    double var = samples > 1 ? (sumsq / samples - mean * mean) / samples : 0.0;
    est.variance += weights[t] * weights[t] * std::max(0.0, var);
  }
  return est;
}

// ---------------------------------------------------------------------------
// Tabular softmax policy and the advantage update
// ---------------------------------------------------------------------------

class TabularSoftmaxPolicy {
 public:
  explicit TabularSoftmaxPolicy(int num_options) : num_options_(num_options) {}

  int num_options() const { return num_options_; }

  std::vector<double> probs(uint64_t key) const {
    auto it = logits_.find(key);
    if (it == logits_.end()) return std::vector<double>(num_options_, 1.0 / num_options_);
    return softmax(it->second);
  }

  int sample(uint64_t key, Rng& rng) const {
    auto p = probs(key);
    return rng.categorical(p);
  }

  double logit(uint64_t key, int option) const {
    auto it = logits_.find(key);
    return it == logits_.end() ? 0.0 : it->second[option];
  }

  /// d log pi(option | key) / d logits — used by the gradient checks.
  std::vector<double> grad_log_prob(uint64_t key, int option) const {
    auto p = probs(key);
    std::vector<double> g(num_options_);
    for (int o = 0; o < num_options_; ++o) g[o] = (o == option ? 1.0 : 0.0) - p[o];
    return g;
  }

  /// Moves the logits along advantage * grad log pi(option | key).
  void reinforce(uint64_t key, int option, double advantage, double lr) {
    auto& row = row_ref(key);
    auto g = grad_log_prob(key, option);
    for (int o = 0; o < num_options_; ++o) row[o] += lr * advantage * g[o];
  }

 private:
  std::vector<double>& row_ref(uint64_t key) {
    auto it = logits_.find(key);
    if (it == logits_.end()) {
      it = logits_.emplace(key, std::vector<double>(num_options_, 0.0)).first;
    }
    return it->second;
  }

  int num_options_;
  std::unordered_map<uint64_t, std::vector<double>> logits_;
};

struct AdvantageSample {
  uint64_t key = 0;
  int option = 0;
  double empowerment = 0.0;
};

/// Batch-normalizes the raw empowerment estimates (subtract mean, divide by
/// std + 1e-6) and applies one REINFORCE step per sample, scaled by `weight`.
inline void advantage_update(TabularSoftmaxPolicy& policy,
                             const std::vector<AdvantageSample>& batch,
                             double weight, double lr) {
  if (batch.empty()) return;
  double mean = 0.0;
  for (const auto& s : batch) mean += s.empowerment;
  mean /= batch.size();
  double var = 0.0;
  for (const auto& s : batch) var += (s.empowerment - mean) * (s.empowerment - mean);
  double stddev = std::sqrt(var / batch.size());
  for (const auto& s : batch) {
    double adv = (s.empowerment - mean) / (stddev + 1e-6);
    policy.reinforce(s.key, s.option, weight * adv, lr);
  }
}

}  // namespace dechrl

#endif  // DECHRL_EMPOWERMENT_HPP_
