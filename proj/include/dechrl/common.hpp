#ifndef DECHRL_COMMON_HPP_
#define DECHRL_COMMON_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dechrl {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Invalid configuration (unknown task, bad horizon, malformed rule file).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A caller violated an operation contract (option not in the option space,
/// stepping a finished episode, unnormalized distribution input).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// All stochastic components draw from an Rng owned by one actor. Sub-streams
// are derived with mix_seed so that runs are reproducible bit-for-bit from a
// single master seed regardless of how many components consume randomness.
// ---------------------------------------------------------------------------

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from (base, stream tag, index).
inline uint64_t mix_seed(uint64_t base, uint64_t stream, uint64_t index = 0) {
  return splitmix64(splitmix64(base ^ (stream * 0x9e3779b97f4a7c15ULL)) + index);
}

class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : gen_(seed) {}

  void seed(uint64_t s) { gen_.seed(s); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    int v = static_cast<int>(uniform() * n);
    return std::min(v, n - 1);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Index sampled from an (assumed normalized) categorical distribution.
  int categorical(std::span<const double> p) {
    double u = uniform();
    double cum = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
      cum += p[i];
      if (u < cum) return static_cast<int>(i);
    }
    // Guard against accumulated rounding: return the last index with mass.
    for (size_t i = p.size(); i-- > 0;) {
      if (p[i] > 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(p.size()) - 1;
  }

  uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Small numerics
// ---------------------------------------------------------------------------

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double logsumexp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// Softmax over entries whose mask bit is set; masked-out entries get 0.
/// An empty mask selects every entry.
inline std::vector<double> softmax(std::span<const double> logits,
                                   const std::vector<bool>& mask = {}) {
  const size_t n = logits.size();
  std::vector<double> out(n, 0.0);
  double m = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    if (mask.empty() || mask[i]) m = std::max(m, logits[i]);
  }
  if (!std::isfinite(m)) return out;
  double z = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (mask.empty() || mask[i]) {
      out[i] = std::exp(logits[i] - m);
      z += out[i];
    }
  }
  for (double& v : out) v /= z;
  return out;
}

/// Shannon entropy in nats; 0·ln 0 treated as 0.
inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

/// KL(p || q) in nats with an epsilon floor on q.
inline double kl_divergence(std::span<const double> p, std::span<const double> q,
                            double eps = 1e-9) {
  if (p.size() != q.size()) throw ContractError("kl_divergence: size mismatch");
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / std::max(q[i], eps));
  }
  return kl;
}

inline double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ContractError("total_variation: size mismatch");
  double tv = 0.0;
  for (size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

inline double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace dechrl

#endif  // DECHRL_COMMON_HPP_
