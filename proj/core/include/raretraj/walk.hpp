#pragma once

// One-dimensional random walk with an exponentially tilted endpoint weight.
// Everything here is a pure function of its arguments.

#include <span>
#include <vector>

namespace raretraj {

struct WalkConfig {
  int horizon = 20;      // T
  double epsilon = 0.0;  // up-step bias, P(up) = 1/2 + epsilon
  double tilt = 1.0;     // s in exp(-s x_T^2)

  /// Throws std::invalid_argument when the fields are out of range. With
  /// `require_even` the horizon must also admit bridges (T even).
  void validate(bool require_even = false) const;

  double up_prob() const { return 0.5 + epsilon; }
  double down_prob() const { return 0.5 - epsilon; }
};

enum class Action : int { down = -1, up = +1 };

constexpr int step_of(Action a) { return static_cast<int>(a); }

struct Trajectory {
  std::vector<int> positions;  // x_0 .. x_T

  int horizon() const { return static_cast<int>(positions.size()) - 1; }
  int endpoint() const { return positions.back(); }
  bool is_bridge() const { return positions.size() > 1 && positions.back() == 0; }
};

/// Throws std::invalid_argument unless x_0 = 0 and every step is +-1.
void validate_trajectory(const Trajectory& traj);

/// One transition x_prev -> x_next arriving at time t (1 <= t <= T).
struct StepRecord {
  int t = 0;
  int x_prev = 0;
  int x_next = 0;
  double policy_prob = 1.0;
  double reward = 0.0;
};

double step_prob(const WalkConfig& cfg, int x_prev, int x_next);
double log_step_prob(const WalkConfig& cfg, int x_prev, int x_next);

double log_trajectory_prob(const WalkConfig& cfg, const Trajectory& traj);
double trajectory_prob(const WalkConfig& cfg, const Trajectory& traj);

/// ln C(n, k). Exact integer arithmetic for n <= 60, log-gamma beyond.
double log_binomial(int n, int k);

double endpoint_prob(const WalkConfig& cfg, int x);
double rwb_prob(const WalkConfig& cfg);

/// Exponential decay rate of the bridge probability, -ln(2 sqrt(1/4 - eps^2)).
double rate_function(double epsilon);

/// ln W(x_t, t) = -s x_t^2 [t == T].
double log_weight(const WalkConfig& cfg, int x, int t);
double weight(const WalkConfig& cfg, int x, int t);

/// r = ln W(x_t, t) - ln(pi / P(x_t | x_{t-1})).
double step_reward(const WalkConfig& cfg, const StepRecord& rec);

/// Sum of the step rewards.
double trajectory_return(const WalkConfig& cfg, std::span<const StepRecord> steps);

/// The same return written as -s x_T^2 - sum ln(pi/P).
double trajectory_return_closed_form(const WalkConfig& cfg, std::span<const StepRecord> steps);

}  // namespace raretraj
