#include <gtest/gtest.h>

#include <cmath>

#include "raretraj/oracle.hpp"

using namespace raretraj;

namespace {

WalkConfig walk(int T, double eps = 0.0, double s = 1.0) {
  WalkConfig c;
  c.horizon = T;
  c.epsilon = eps;
  c.tilt = s;
  return c;
}

Trajectory from_bits(unsigned bits, int T) {
  Trajectory tr{{0}};
  for (int k = 0; k < T; ++k) tr.positions.push_back(tr.positions.back() + ((bits >> k) & 1u ? 1 : -1));
  return tr;
}

MarkovPolicy random_policy(int T, Rng& rng) {
  auto tab = std::make_shared<CellTable>(T);
  for (int t = 0; t < T; ++t)
    for (int x = -t; x <= t; x += 2) (*tab)(x, t) = uniform(rng, 0.02, 0.98);
  return [tab](int x, int t) { return (*tab)(x, t); };
}

}  // namespace

TEST(Oracle, GBoundaryAndOneStep) {
  const auto cfg = walk(20);
  const auto tab = compute_tables(cfg);
  for (int x = -20; x <= 20; x += 2) EXPECT_DOUBLE_EQ(tab.log_g(x, 20), 0.0);
  EXPECT_NEAR(std::exp(tab.log_g(-1, 19) - 0.0), 0.5 + 0.5 * std::exp(-4.0), 1e-12);
  // g(0, T-1) and g(2, T-1) need odd T-1 parity, so check on T = 21 where (0, 20) is reachable
  const auto odd = compute_tables(walk(21));
  EXPECT_NEAR(std::exp(odd.log_g(0, 20)), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(std::exp(odd.log_g(2, 20)), 0.5 * (std::exp(-1.0) + std::exp(-9.0)), 1e-12);
  EXPECT_NEAR(std::exp(odd.log_g(2, 20)), 0.18400, 1e-5);
}

TEST(Oracle, TransitionProperties) {
  const auto cfg = walk(20);
  const auto tab = compute_tables(cfg);
  EXPECT_DOUBLE_EQ(reweighted_transition(tab, 0, 0), 0.5);
  EXPECT_NEAR(reweighted_transition(tab, 1, 19), 1.0 / (1.0 + std::exp(-4.0)), 1e-12);
  EXPECT_GT(reweighted_transition(tab, 10, 10), 0.9);  // upper cone edge steps down
  EXPECT_THROW(reweighted_transition(tab, 3, 1), std::out_of_range);
  for (int t = 0; t < 20; ++t)
    for (int x = -t; x <= t; x += 2) {
      const double pd = tab.p_down(x, t);
      EXPECT_GE(pd, 0.0);
      EXPECT_LE(pd, 1.0);
    }
  const auto flat = compute_tables(walk(20, 0.0, 1e-12));
  for (int t = 0; t < 20; ++t)
    for (int x = -t; x <= t; x += 2) EXPECT_NEAR(flat.p_down(x, t), 0.5, 1e-9);
}

TEST(Oracle, BruteForceEquivalence) {
  for (int T : {4, 8, 12}) {
    for (double eps : {0.0, 0.2}) {
      const auto cfg = walk(T, eps, 0.8);
      const auto tab = compute_tables(cfg);
      double total = 0.0;
      for (unsigned b = 0; b < (1u << T); ++b) {
        const auto tr = from_bits(b, T);
        const double prod = reweighted_traj_prob(tab, cfg, tr);
        EXPECT_NEAR(prod, direct_reweighted_traj_prob(cfg, tr), 1e-12);
        total += prod;
        if (std::abs(tr.endpoint()) >= 4) {
          EXPECT_LT(prod, trajectory_prob(cfg, tr));
        }
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Oracle, ExpectedWeight) {
  const auto cfg = walk(20);
  double ew = 0.0;
  for (int x = -20; x <= 20; x += 2) ew += endpoint_prob(cfg, x) * std::exp(-1.0 * x * x);
  EXPECT_NEAR(expected_weight(cfg), ew, 1e-14);
  EXPECT_NEAR(compute_tables(cfg).log_normalizer(), std::log(ew), 1e-12);
}

TEST(Oracle, Sampling) {
  const auto cfg = walk(20);
  const auto tab = compute_tables(cfg);
  Rng rng = make_rng(7);
  const auto trajs = sample_reweighted(tab, cfg, rng, 100000);
  int bridges = 0;
  for (const auto& tr : trajs) {
    ASSERT_NO_THROW(validate_trajectory(tr));
    ASSERT_EQ(tr.horizon(), 20);
    bridges += tr.is_bridge();
  }
  EXPECT_NEAR(bridges / 1e5, 0.97, 0.01);

  const auto flat_cfg = walk(20, 0.0, 1e-12);
  const auto flat = compute_tables(flat_cfg);
  const auto t2 = sample_reweighted(flat, flat_cfg, rng, 100000);
  int b2 = 0;
  for (const auto& tr : t2) b2 += tr.is_bridge();
  EXPECT_NEAR(b2 / 1e5, rwb_prob(flat_cfg), 0.006);
}

TEST(Oracle, ValueFunction) {
  const auto cfg = walk(20);
  const auto tab = compute_tables(cfg);
  const auto pw = reweighted_policy(tab);
  const auto v = exact_value_function(cfg, pw);
  for (int x = -20; x <= 20; x += 2) EXPECT_DOUBLE_EQ(v(x, 20), 0.0);
  EXPECT_NEAR(v(0, 0), -1.70, 0.01);
  EXPECT_NEAR(v(0, 0), tab.log_normalizer(), 1e-10);
  EXPECT_NEAR(exact_value_function(cfg, original_policy(cfg))(0, 0), -20.0, 1e-9);

  // Bellman residual
  for (int t = 0; t < 20; ++t)
    for (int x = -t; x <= t; x += 2) {
      const double pd = pw(x, t);
      double rhs = 0.0;
      if (pd > 0) rhs += pd * (v(x - 1, t + 1) + step_reward(cfg, {t + 1, x, x - 1, pd, 0.0}));
      if (pd < 1) rhs += (1 - pd) * (v(x + 1, t + 1) + step_reward(cfg, {t + 1, x, x + 1, 1 - pd, 0.0}));
      EXPECT_NEAR(v(x, t), rhs, 1e-10);
    }
}

TEST(Oracle, KlProperties) {
  const auto cfg = walk(20);
  const auto tab = compute_tables(cfg);
  EXPECT_NEAR(exact_kl(cfg, reweighted_policy(tab), tab), 0.0, 1e-12);
  const double kl_p = exact_kl(cfg, original_policy(cfg), tab);
  EXPECT_NEAR(kl_p, tab.log_normalizer() + 20.0, 1e-9);
  EXPECT_NEAR(kl_p, 18.7, 0.5);

  Rng rng = make_rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto cfg_i = walk(12, 0.1 * (i % 4), 0.3 + 0.05 * i);
    const auto tab_i = compute_tables(cfg_i);
    const auto pol = random_policy(12, rng);
    const double kl = exact_kl(cfg_i, pol, tab_i);
    EXPECT_GE(kl, -1e-12);
    // E[R] two ways
    EXPECT_NEAR(exact_value_function(cfg_i, pol)(0, 0), exact_expected_return(cfg_i, pol), 1e-8);
    EXPECT_NEAR(exact_expected_return(cfg_i, pol), tab_i.log_normalizer() - kl, 1e-8);
  }
}

TEST(Oracle, KlMatchesEnumeration) {
  const auto cfg = walk(10, 0.1, 0.6);
  const auto tab = compute_tables(cfg);
  Rng rng = make_rng(11);
  const auto pol = random_policy(10, rng);
  double kl = 0.0;
  for (unsigned b = 0; b < (1u << 10); ++b) {
    const auto tr = from_bits(b, 10);
    double p = 1.0;
    for (int t = 0; t < 10; ++t) {
      const double pd = pol(tr.positions[t], t);
      p *= tr.positions[t + 1] < tr.positions[t] ? pd : 1 - pd;
    }
    kl += p * std::log(p / reweighted_traj_prob(tab, cfg, tr));
  }
  EXPECT_NEAR(exact_kl(cfg, pol, tab), kl, 1e-10);
}

TEST(Oracle, MarginalsAndRwb) {
  const auto cfg = walk(20);
  const auto m = state_marginals(original_policy(cfg), 20);
  for (int t = 0; t <= 20; ++t) {
    double s = 0.0;
    for (int x = -t; x <= t; x += 2) s += m(x, t);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_NEAR(exact_rwb_prob(original_policy(cfg), 20), rwb_prob(cfg), 1e-14);
  EXPECT_NEAR(policy_mse(original_policy(cfg), compute_tables(cfg)), 0.1488, 5e-4);
}

TEST(Oracle, CellTableSentinel) {
  CellTable t(4);
  EXPECT_TRUE(std::isnan(t(1, 2)));
  EXPECT_THROW(t.at(1, 2), std::out_of_range);
  EXPECT_FALSE(reachable(1, 2));
  EXPECT_TRUE(reachable(-2, 4));
}
