#include <catch2/catch_amalgamated.hpp>

#include "dechrl/delaydist.hpp"

using namespace dechrl;

namespace {

// Evidence stub with fixed per-(effect, lag) log-likelihoods.
struct FixedEvidence {
  std::vector<std::vector<double>> ll;  // [effect][lag-1]
  double loglik(int effect, int lag) const { return ll[effect][lag - 1]; }
};

// train_delay clone over the stub (the production one takes a DelayEvidence).
void train_fixed(DelayModel& model, const FixedEvidence& ev, const DelayTrainParams& p, Rng& rng) {
  for (int it = 0; it < p.iterations; ++it) {
    auto reg = regularizer_grad(model, p.lambda1, p.lambda2);
    for (int i = 0; i < model.num_vars(); ++i) {
      auto dist = model.row_distribution(i);
      std::vector<int> lags(p.hypotheses);
      std::vector<double> lls(p.hypotheses);
      for (int k = 0; k < p.hypotheses; ++k) {
        lags[k] = 1 + rng.categorical(dist);
        lls[k] = ev.loglik(i, lags[k]);
      }
      auto update = delay_row_update(dist, lags, lls);
      for (int tau = 1; tau <= model.tau_max(); ++tau) {
        if (!model.support()[tau - 1]) continue;
        model.set_beta(i, tau, model.beta(i, tau) +
                                   p.learning_rate * (update[tau - 1] - reg[i][tau - 1]));
      }
    }
  }
}

}  // namespace

TEST_CASE("row distribution is the softmax of the logits") {
  DelayModel m(1, 4);
  auto p = m.row_distribution(0);
  for (double v : p) REQUIRE(v == Catch::Approx(0.25).margin(1e-12));

  m.set_beta(0, 2, std::log(2.0));
  p = m.row_distribution(0);
  REQUIRE(p[0] == Catch::Approx(1.0 / 5.0).margin(1e-12));
  REQUIRE(p[1] == Catch::Approx(2.0 / 5.0).margin(1e-12));
  REQUIRE(p[2] == Catch::Approx(1.0 / 5.0).margin(1e-12));
  REQUIRE(p[3] == Catch::Approx(1.0 / 5.0).margin(1e-12));
}

TEST_CASE("rows stay stochastic after updates") {
  DelayModel m(2, 6);
  Rng rng(5);
  FixedEvidence ev{{{-2, -1, -0.5, -0.1, -1, -2}, {-0.1, -2, -2, -2, -2, -0.2}}};
  DelayTrainParams p;
  p.iterations = 50;
  train_fixed(m, ev, p, rng);
  for (int i = 0; i < 2; ++i) {
    auto d = m.row_distribution(i);
    double sum = 0.0;
    for (double v : d) sum += v;
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("support restriction masks non-multiples of kappa") {
  DelayModel m(1, 8);
  m.restrict_support(4);
  auto p = m.row_distribution(0);
  REQUIRE(p[3] == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(p[7] == Catch::Approx(0.5).margin(1e-12));
  for (int tau : {1, 2, 3, 5, 6, 7}) REQUIRE(p[tau - 1] == 0.0);

  DelayModel wide(1, 30);
  wide.restrict_support(4);
  REQUIRE(wide.supported_lags() == std::vector<int>{4, 8, 12, 16, 20, 24, 28});

  DelayModel identity(1, 4);
  identity.restrict_support(1);
  REQUIRE(identity.supported_lags() == std::vector<int>{1, 2, 3, 4});

  REQUIRE_THROWS_AS(m.restrict_support(9), ConfigError);
  REQUIRE_THROWS_AS(m.restrict_support(0), ConfigError);
}

TEST_CASE("sampling never leaves the restricted support") {
  DelayModel m(1, 8);
  m.restrict_support(4);
  Rng rng(9);
  for (int k = 0; k < 2000; ++k) {
    int tau = m.sample_delay(0, rng);
    REQUIRE((tau == 4 || tau == 8));
  }
}

TEST_CASE("regularizer gradient matches central finite differences") {
  const double l1 = 0.3, l2 = 0.7;
  DelayModel m(2, 4);
  Rng rng(13);
  for (int i = 0; i < 2; ++i) {
    for (int tau = 1; tau <= 4; ++tau) m.set_beta(i, tau, 2.0 * rng.uniform() - 1.0);
  }
  auto grad = regularizer_grad(m, l1, l2);
  const double h = 1e-5;
  for (int i = 0; i < 2; ++i) {
    for (int tau = 1; tau <= 4; ++tau) {
      double b = m.beta(i, tau);
      m.set_beta(i, tau, b + h);
      double up = regularizer_value(m, l1, l2);
      m.set_beta(i, tau, b - h);
      double down = regularizer_value(m, l1, l2);
      m.set_beta(i, tau, b);
      REQUIRE(grad[i][tau - 1] == Catch::Approx((up - down) / (2 * h)).margin(1e-6));
    }
  }
}

TEST_CASE("regularizer gradient special cases") {
  DelayModel m(1, 4);  // beta = 0 everywhere
  auto zero = regularizer_grad(m, 0.0, 0.0);
  for (double g : zero[0]) REQUIRE(g == 0.0);

  // At beta = 0 the variance-style entropy term is stationary.
  auto ent = regularizer_grad(m, 1.0, 0.0);
  for (double g : ent[0]) REQUIRE(g == Catch::Approx(0.0).margin(1e-12));

  REQUIRE_THROWS_AS(regularizer_grad(m, -1.0, 0.0), ContractError);
}

TEST_CASE("identical evidence across lags keeps the row near uniform") {
  DelayModel m(1, 4);
  Rng rng(17);
  FixedEvidence ev{{{-0.5, -0.5, -0.5, -0.5}}};
  DelayTrainParams p;
  train_fixed(m, ev, p, rng);
  auto d = m.row_distribution(0);
  for (double v : d) REQUIRE(v == Catch::Approx(0.25).margin(0.08));
}

TEST_CASE("dominant evidence wins the argmax") {
  DelayModel m(1, 4);
  Rng rng(19);
  FixedEvidence ev{{{std::log(0.05), std::log(0.05), std::log(0.95), std::log(0.05)}}};
  DelayTrainParams p;
  train_fixed(m, ev, p, rng);
  auto d = m.row_distribution(0);
  REQUIRE(std::max_element(d.begin(), d.end()) - d.begin() == 2);
  REQUIRE(d[2] > 0.5);
}

TEST_CASE("score-function update direction matches the exact gradient") {
  // M = 1, tau_max = 3, fixed weights. The exact gradient of
  // F(beta) = sum_tau p_tau w_tau is p_j (w_j - sum p w); the sampled update
  // with softmax-normalized weights equals it scaled by 1 / (sum p w).
  std::vector<double> beta{0.2, -0.3, 0.4};
  std::vector<double> ll{std::log(0.3), std::log(0.8), std::log(0.5)};
  auto p = softmax(beta);
  double pw = 0.0;
  for (int t = 0; t < 3; ++t) pw += p[t] * std::exp(ll[t]);
  std::vector<double> exact(3);
  for (int t = 0; t < 3; ++t) exact[t] = p[t] * (std::exp(ll[t]) - pw);

  Rng rng(23);
  const int draws = 100;
  const int k_per_draw = 1000;  // 1e5 hypotheses in total
  std::vector<double> mean(3, 0.0), m2(3, 0.0);
  for (int d = 0; d < draws; ++d) {
    std::vector<int> lags(k_per_draw);
    std::vector<double> lls(k_per_draw);
    for (int k = 0; k < k_per_draw; ++k) {
      lags[k] = 1 + rng.categorical(p);
      lls[k] = ll[lags[k] - 1];
    }
    auto u = delay_row_update(p, lags, lls);
    for (int t = 0; t < 3; ++t) {
      double scaled = u[t] * pw;  // remove the positive normalization factor
      mean[t] += scaled;
      m2[t] += scaled * scaled;
    }
  }
  for (int t = 0; t < 3; ++t) {
    double mu = mean[t] / draws;
    double se = std::sqrt((m2[t] / draws - mu * mu) / draws);
    REQUIRE(std::abs(mu - exact[t]) <= 2.0 * se + 2e-4);
  }
}

TEST_CASE("beta entries are clamped") {
  DelayModel m(1, 2);
  m.set_beta(0, 1, 100.0);
  m.set_beta(0, 2, -100.0);
  REQUIRE(m.beta(0, 1) == kBetaClamp);
  REQUIRE(m.beta(0, 2) == -kBetaClamp);
}

TEST_CASE("kl of identical distributions is zero") {
  std::vector<double> p{0.2, 0.5, 0.3};
  REQUIRE(kl_divergence(p, p) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("train_delay requires at least two hypotheses and trained lags") {
  DelayModel m(1, 2);
  Rng rng(1);
  ScmTau scm(1, 1, 1, 1);
  {
    InterventionData d;
    d.num_vars = 1;
    d.num_actions = 1;
    d.tau_max = 2;
    InterventionRecord r;
    r.cause_bits = 0;
    r.effect_lag_bits = {0};
    r.max_valid_lag = 2;
    d.records.push_back(r);
    scm.set_data(d);
  }
  std::vector<ScmTau> scms;
  scms.push_back(std::move(scm));
  DelayEvidence ev(scms);  // only lag 1 is modeled
  REQUIRE_THROWS_AS(ev.loglik(0, 2), ContractError);

  DelayTrainParams p;
  p.hypotheses = 1;
  REQUIRE_THROWS_AS(train_delay(m, ev, p, rng), ContractError);
}
