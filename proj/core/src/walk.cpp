#include "raretraj/walk.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>

namespace raretraj {

namespace {

constexpr int kExactBinomialLimit = 60;

std::uint64_t exact_binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t c = 1;
  // c * (n - k + i) / i stays integral at every step; n <= 60 keeps it in range.
  for (int i = 1; i <= k; ++i) c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return c;
}

}  // namespace

void WalkConfig::validate(bool require_even) const {
  if (horizon < 1) throw std::invalid_argument("walk.horizon must be >= 1, got " + std::to_string(horizon));
  if (require_even && horizon % 2 != 0)
    throw std::invalid_argument("walk.horizon must be even for bridge targets, got " + std::to_string(horizon));
  if (!(epsilon >= 0.0 && epsilon < 0.5))
    throw std::invalid_argument("walk.epsilon must lie in [0, 1/2), got " + std::to_string(epsilon));
  if (!(tilt > 0.0) || !std::isfinite(tilt))
    throw std::invalid_argument("walk.tilt must be > 0, got " + std::to_string(tilt));
}

void validate_trajectory(const Trajectory& traj) {
  if (traj.positions.empty()) throw std::invalid_argument("trajectory is empty");
  if (traj.positions.front() != 0) throw std::invalid_argument("trajectory must start at x_0 = 0");
  for (std::size_t t = 1; t < traj.positions.size(); ++t) {
    if (std::abs(traj.positions[t] - traj.positions[t - 1]) != 1)
      throw std::invalid_argument("trajectory step at t=" + std::to_string(t) + " is not +-1");
  }
}

double step_prob(const WalkConfig& cfg, int x_prev, int x_next) {
  if (x_next == x_prev + 1) return cfg.up_prob();
  if (x_next == x_prev - 1) return cfg.down_prob();
  return 0.0;
}

double log_step_prob(const WalkConfig& cfg, int x_prev, int x_next) {
  const double p = step_prob(cfg, x_prev, x_next);
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

double log_trajectory_prob(const WalkConfig& cfg, const Trajectory& traj) {
  validate_trajectory(traj);
  double lp = 0.0;
  for (std::size_t t = 1; t < traj.positions.size(); ++t) lp += log_step_prob(cfg, traj.positions[t - 1], traj.positions[t]);
  return lp;
}

double trajectory_prob(const WalkConfig& cfg, const Trajectory& traj) { return std::exp(log_trajectory_prob(cfg, traj)); }

double log_binomial(int n, int k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  if (n <= kExactBinomialLimit) return std::log(static_cast<double>(exact_binomial(n, k)));
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double endpoint_prob(const WalkConfig& cfg, int x) {
  const int T = cfg.horizon;
  if (std::abs(x) > T || (T + x) % 2 != 0) return 0.0;
  const int n_up = (T + x) / 2;
  const int n_down = T - n_up;
  if (T <= kExactBinomialLimit) {
    return static_cast<double>(exact_binomial(T, n_up)) * std::pow(cfg.up_prob(), n_up) * std::pow(cfg.down_prob(), n_down);
  }
  double lp = log_binomial(T, n_up);
  if (n_up > 0) lp += n_up * std::log(cfg.up_prob());
  if (n_down > 0) lp += n_down * std::log(cfg.down_prob());
  return std::exp(lp);
}

double rwb_prob(const WalkConfig& cfg) {
  const int T = cfg.horizon;
  if (T < 0 || T % 2 != 0) throw std::invalid_argument("rwb_prob requires an even horizon, got " + std::to_string(T));
  const double base = 0.25 - cfg.epsilon * cfg.epsilon;
  if (T <= kExactBinomialLimit) return static_cast<double>(exact_binomial(T, T / 2)) * std::pow(base, T / 2);
  return std::exp(log_binomial(T, T / 2) + (T / 2) * std::log(base));
}

double rate_function(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 0.5))
    throw std::invalid_argument("rate_function requires 0 <= epsilon < 1/2, got " + std::to_string(epsilon));
  return -std::log(2.0 * std::sqrt(0.25 - epsilon * epsilon));
}

double log_weight(const WalkConfig& cfg, int x, int t) {
  if (t != cfg.horizon) return 0.0;
  return -cfg.tilt * static_cast<double>(x) * static_cast<double>(x);
}

double weight(const WalkConfig& cfg, int x, int t) { return std::exp(log_weight(cfg, x, t)); }

double step_reward(const WalkConfig& cfg, const StepRecord& rec) {
  if (!(rec.policy_prob > 0.0))
    throw std::domain_error("step_reward: policy probability is zero at t=" + std::to_string(rec.t));
  return log_weight(cfg, rec.x_next, rec.t) - (std::log(rec.policy_prob) - log_step_prob(cfg, rec.x_prev, rec.x_next));
}

double trajectory_return(const WalkConfig& cfg, std::span<const StepRecord> steps) {
  double total = 0.0;
  for (const auto& rec : steps) total += step_reward(cfg, rec);
  return total;
}

double trajectory_return_closed_form(const WalkConfig& cfg, std::span<const StepRecord> steps) {
  if (steps.empty()) return 0.0;
  const double xT = steps.back().x_next;
  double log_ratio = 0.0;
  for (const auto& rec : steps) log_ratio += std::log(rec.policy_prob) - log_step_prob(cfg, rec.x_prev, rec.x_next);
  return -cfg.tilt * xT * xT - log_ratio;
}

}  // namespace raretraj
