#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "raretraj/walk.hpp"

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

std::vector<StepRecord> uniform_steps(const Trajectory& tr) {
  std::vector<StepRecord> steps;
  for (std::size_t t = 1; t < tr.positions.size(); ++t)
    steps.push_back({static_cast<int>(t), tr.positions[t - 1], tr.positions[t], 0.5, 0.0});
  return steps;
}

}  // namespace

TEST(Walk, StepProb) {
  EXPECT_DOUBLE_EQ(step_prob(walk(20), 3, 4), 0.5);
  EXPECT_DOUBLE_EQ(step_prob(walk(20, 0.2), 0, 1), 0.7);
  EXPECT_DOUBLE_EQ(step_prob(walk(20), 3, 5), 0.0);
  for (double eps : {0.0, 0.1, 0.37})
    for (int x = -5; x <= 5; ++x) EXPECT_NEAR(step_prob(walk(20, eps), x, x + 1) + step_prob(walk(20, eps), x, x - 1), 1.0, 1e-15);
}

TEST(Walk, TrajectoryProb) {
  EXPECT_DOUBLE_EQ(trajectory_prob(walk(3), from_bits(0b101, 3)), 0.125);
  EXPECT_NEAR(trajectory_prob(walk(2, 0.2), from_bits(0b11, 2)), 0.49, 1e-15);
  EXPECT_NEAR(trajectory_prob(walk(20), from_bits(12345, 20)), std::ldexp(1.0, -20), 1e-20);
  EXPECT_THROW(trajectory_prob(walk(2), Trajectory{{0, 2, 1}}), std::invalid_argument);
  EXPECT_THROW(trajectory_prob(walk(2), Trajectory{{1, 2, 1}}), std::invalid_argument);
}

TEST(Walk, EnumerationSumsToOne) {
  for (int T : {1, 4, 9, 16}) {
    const auto cfg = walk(T, 0.13);
    double total = 0.0;
    for (unsigned b = 0; b < (1u << T); ++b) total += trajectory_prob(cfg, from_bits(b, T));
    EXPECT_NEAR(total, 1.0, 1e-12) << "T=" << T;
  }
}

TEST(Walk, EndpointProb) {
  EXPECT_DOUBLE_EQ(endpoint_prob(walk(4), 0), 0.375);
  EXPECT_DOUBLE_EQ(endpoint_prob(walk(4), 3), 0.0);
  EXPECT_DOUBLE_EQ(endpoint_prob(walk(4), 6), 0.0);
  EXPECT_NEAR(endpoint_prob(walk(20), 0), 0.1762, 5e-5);
  // against enumeration
  const auto cfg = walk(10, 0.2);
  std::vector<double> by_end(21, 0.0);
  for (unsigned b = 0; b < (1u << 10); ++b) {
    const auto tr = from_bits(b, 10);
    by_end[static_cast<std::size_t>(tr.endpoint() + 10)] += trajectory_prob(cfg, tr);
  }
  for (int x = -10; x <= 10; ++x) EXPECT_NEAR(endpoint_prob(cfg, x), by_end[static_cast<std::size_t>(x + 10)], 1e-14);
}

TEST(Walk, RwbProb) {
  EXPECT_DOUBLE_EQ(rwb_prob(walk(2)), 0.5);
  EXPECT_NEAR(rwb_prob(walk(20)), 184756.0 / 1048576.0, 1e-15);
  EXPECT_NEAR(rwb_prob(walk(2, 0.3)), 0.32, 1e-15);
  EXPECT_THROW(rwb_prob(walk(3)), std::invalid_argument);
  for (int T : {2, 8, 20, 60, 62, 200})
    for (double eps : {0.0, 0.25})
      EXPECT_NEAR(rwb_prob(walk(T, eps)), endpoint_prob(walk(T, eps), 0), 1e-14 * std::max(1.0, rwb_prob(walk(T, eps))));
  EXPECT_GT(rwb_prob(walk(200)), 0.0);
}

TEST(Walk, LogBinomialLargeN) {
  EXPECT_NEAR(log_binomial(200, 100), std::lgamma(201.0) - 2 * std::lgamma(101.0), 1e-9);
  EXPECT_DOUBLE_EQ(std::exp(log_binomial(20, 10)), 184756.0);
}

TEST(Walk, RateFunction) {
  EXPECT_DOUBLE_EQ(rate_function(0.0), 0.0);
  EXPECT_NEAR(rate_function(0.3), -std::log(0.8), 1e-12);
  EXPECT_NEAR(rate_function(0.4), 0.51083, 1e-5);
  EXPECT_THROW(rate_function(0.5), std::invalid_argument);
  for (double e = 0.0; e < 0.5; e += 0.05) EXPECT_GE(rate_function(e), 0.0);
}

TEST(Walk, Weight) {
  const auto cfg = walk(20);
  for (int t = 1; t < 20; ++t) EXPECT_DOUBLE_EQ(weight(cfg, 7, t), 1.0);
  EXPECT_DOUBLE_EQ(weight(cfg, 0, 20), 1.0);
  EXPECT_NEAR(weight(cfg, 2, 20), 0.018316, 1e-6);
  const auto c8 = walk(8);
  for (unsigned b = 0; b < 256; ++b) {
    const auto tr = from_bits(b, 8);
    const double w = weight(c8, tr.endpoint(), 8);
    EXPECT_GT(w, 0.0);
    EXPECT_LE(w, 1.0);
    EXPECT_EQ(w == 1.0, tr.is_bridge());
  }
}

TEST(Walk, StepReward) {
  const auto cfg = walk(20, 0.1);
  EXPECT_DOUBLE_EQ(step_reward(cfg, {5, 0, 1, 0.6, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(step_reward(walk(20), {20, 1, 0, 0.5, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(step_reward(walk(20), {20, 1, 2, 0.5, 0.0}), -4.0);
  EXPECT_THROW(step_reward(cfg, {3, 0, 1, 0.0, 0.0}), std::domain_error);
}

TEST(Walk, TrajectoryReturn) {
  const auto cfg = walk(8);
  const auto bridge = from_bits(0b10101010, 8);
  ASSERT_TRUE(bridge.is_bridge());
  EXPECT_DOUBLE_EQ(trajectory_return(cfg, uniform_steps(bridge)), 0.0);
  const auto up4 = from_bits(0b00111111, 8);
  ASSERT_EQ(up4.endpoint(), 4);
  EXPECT_DOUBLE_EQ(trajectory_return(cfg, uniform_steps(up4)), -16.0);

  // expectation under P: -s Var[x_T] = -T
  const auto c20 = walk(20);
  double e = 0.0;
  for (int x = -20; x <= 20; x += 2) e += endpoint_prob(c20, x) * (-1.0 * x * x);
  EXPECT_NEAR(e, -20.0, 1e-10);
}

TEST(Walk, ReturnClosedFormAgrees) {
  const auto cfg = walk(12, 0.15, 0.7);
  unsigned seed = 1;
  for (unsigned b = 0; b < (1u << 12); b += 7) {
    const auto tr = from_bits(b, 12);
    std::vector<StepRecord> steps;
    for (std::size_t t = 1; t < tr.positions.size(); ++t) {
      seed = seed * 1103515245u + 12345u;
      const double p = 0.01 + 0.98 * ((seed >> 8) % 10000) / 10000.0;
      steps.push_back({static_cast<int>(t), tr.positions[t - 1], tr.positions[t], p, 0.0});
    }
    EXPECT_NEAR(trajectory_return(cfg, steps), trajectory_return_closed_form(cfg, steps), 1e-10);
  }
}

TEST(Walk, Validate) {
  EXPECT_THROW(walk(0).validate(), std::invalid_argument);
  EXPECT_THROW(walk(21).validate(true), std::invalid_argument);
  EXPECT_NO_THROW(walk(21).validate(false));
  EXPECT_THROW(walk(20, 0.5).validate(), std::invalid_argument);
  EXPECT_THROW(walk(20, 0.0, 0.0).validate(), std::invalid_argument);
}
