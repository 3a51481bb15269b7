#pragma once

// Policy-gradient (REINFORCE) and actor-critic training loops, generic over
// the function approximator.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "raretraj/model.hpp"
#include "raretraj/optimizer.hpp"
#include "raretraj/oracle.hpp"

namespace raretraj {

enum class Algorithm { pg, ac };

struct TrainConfig {
  WalkConfig walk;
  Algorithm algorithm = Algorithm::pg;
  int batch_size = 10;
  int batches = 1000;
  int agents = 10;
  std::uint64_t seed = 0;
  std::vector<double> actor_rates{0.01, 0.05, 0.1};   // per parameter class
  std::vector<double> critic_rates{0.01, 0.05, 0.7};
  OptimizerKind optimizer = OptimizerKind::sgd;
  bool critic_zero_at_horizon = false;
  int stop_after_rwb = 0;  // stop an agent once it generated this many bridges; 0 = fixed budget
  int threads = 0;         // 0 = RARETRAJ_THREADS or hardware concurrency
  bool track_kl = true;    // exact KL to P_W at start and end

  void validate() const;
};

struct Rollout {
  Trajectory trajectory;
  std::vector<StepRecord> steps;                    // steps[k]: x_k -> x_{k+1}
  std::vector<std::vector<double>> log_prob_grads;  // grad log pi(a_k | x_k, k)
  std::vector<double> return_suffix;                // size T + 1, return_suffix[T] = 0

  double total_return() const { return return_suffix.empty() ? 0.0 : return_suffix.front(); }
};

struct BatchMetrics {
  int batch = 0;
  double mean_return = 0.0;
  double rwb_fraction = 0.0;
  int distinct_rwb = 0;  // cumulative distinct bridges
};

/// Memoises logits and their gradients per cell while parameters are frozen.
class PolicyCache {
 public:
  PolicyCache(int horizon, std::size_t n_params);
  void clear();
  /// Returns z and a pointer to dz/dtheta for (x, t).
  std::pair<double, const double*> lookup(const PolicyModel& model, int x, int t);

 private:
  std::size_t index(int x, int t) const;
  int horizon_;
  std::size_t n_params_;
  std::vector<char> filled_;
  std::vector<double> z_;
  std::vector<double> grad_;
};

Rollout rollout(PolicyModel& policy, const WalkConfig& cfg, Rng& rng, PolicyCache* cache = nullptr);

/// theta += rate (1/N) sum_i sum_k A_{ik} grad log pi, A given per rollout step.
std::vector<double> actor_gradient(const PolicyModel& policy, std::span<const Rollout> batch,
                                   std::span<const std::vector<double>> advantages);
void pg_update(PolicyModel& policy, std::span<const Rollout> batch, Optimizer& opt);

/// delta_k = V(x_{k+1}, k+1) + r_{k+1} - V(x_k, k) for every step of every rollout.
std::vector<std::vector<double>> td_errors(const ValueModel& critic, std::span<const Rollout> batch, bool zero_at_horizon);
void ac_update(PolicyModel& actor, ValueModel& critic, std::span<const Rollout> batch, Optimizer& actor_opt,
               Optimizer& critic_opt, bool zero_at_horizon);

std::vector<double> ema(std::span<const double> series, double alpha = 0.1);

using PolicyFactory = std::function<std::unique_ptr<PolicyModel>(Rng&)>;
using CriticFactory = std::function<std::unique_ptr<ValueModel>(Rng&)>;

struct AgentResult {
  int agent = 0;
  std::vector<BatchMetrics> metrics;
  bool diverged = false;
  std::string diagnostic;
  double initial_kl = 0.0;
  double final_kl = 0.0;
  int rwb_generated = 0;
  std::vector<double> final_params;
  std::unique_ptr<PolicyModel> final_policy;
  std::unique_ptr<ValueModel> final_critic;  // actor-critic only

  std::vector<double> returns() const;
  std::vector<double> rwb_fractions() const;
  /// Mean rwb_fraction over the last `window` batches.
  double tail_rwb_fraction(int window) const;
  double final_ema_return(double alpha = 0.1) const;
};

struct TrainResult {
  std::vector<AgentResult> agents;
  std::vector<BatchMetrics> aggregate;  // mean over agents alive at each batch
};

AgentResult train_agent(const TrainConfig& cfg, const PolicyFactory& make_policy, const CriticFactory& make_critic,
                        int agent_index);
TrainResult train(const TrainConfig& cfg, const PolicyFactory& make_policy, const CriticFactory& make_critic = {});

}  // namespace raretraj
