#pragma once

// Exact reweighted dynamics P_W, value functions and KL divergences for
// Markov policies, by dynamic programming over the (x, t) cone.

#include <functional>
#include <vector>

#include "raretraj/random.hpp"
#include "raretraj/walk.hpp"

namespace raretraj {

/// True for cells the walk can occupy: |x| <= t and x + t even.
bool reachable(int x, int t);

/// Dense (x, t) table with x in [-T, T], t in [0, T]. Unreachable cells hold NaN.
class CellTable {
 public:
  CellTable() = default;
  explicit CellTable(int horizon);

  int horizon() const { return horizon_; }
  double& operator()(int x, int t);
  double operator()(int x, int t) const;
  /// Like operator() but throws std::out_of_range on unreachable cells.
  double at(int x, int t) const;

 private:
  std::size_t index(int x, int t) const;
  int horizon_ = 0;
  std::vector<double> data_;
};

struct ReweightedTables {
  int horizon = 0;
  CellTable log_g;   // t = 0..T, log_g(x, T) = 0
  CellTable p_down;  // t = 0..T-1

  double log_normalizer() const { return log_g.at(0, 0); }
};

/// Probability of stepping down from (x, t), t in [0, T-1].
using MarkovPolicy = std::function<double(int x, int t)>;

ReweightedTables compute_tables(const WalkConfig& cfg);

double reweighted_transition(const ReweightedTables& tables, int x, int t);

/// Product of the P_W transitions along the trajectory.
double reweighted_traj_prob(const ReweightedTables& tables, const WalkConfig& cfg, const Trajectory& traj);

/// W P / E_P[W] evaluated directly.
double direct_reweighted_traj_prob(const WalkConfig& cfg, const Trajectory& traj);

/// E_P[W] = sum_x Pr[x_T = x] exp(-s x^2).
double expected_weight(const WalkConfig& cfg);

Trajectory sample_markov(const MarkovPolicy& policy, int horizon, Rng& rng);
std::vector<Trajectory> sample_reweighted(const ReweightedTables& tables, const WalkConfig& cfg, Rng& rng, int n);

MarkovPolicy original_policy(const WalkConfig& cfg);
MarkovPolicy reweighted_policy(const ReweightedTables& tables);
/// Freezes an arbitrary policy into a table over the reachable cone.
CellTable tabulate(const MarkovPolicy& policy, int horizon);

/// V(x, t) for the reward ln W - ln(pi/P); V(x, T) = 0.
CellTable exact_value_function(const WalkConfig& cfg, const MarkovPolicy& policy);

/// E[R] under the policy, i.e. V(0, 0).
double exact_expected_return(const WalkConfig& cfg, const MarkovPolicy& policy);

/// Pr[x_t = x] under the policy, forward propagated from x_0 = 0.
CellTable state_marginals(const MarkovPolicy& policy, int horizon);

/// D(P_theta || P_W) over full trajectories.
double exact_kl(const WalkConfig& cfg, const MarkovPolicy& p_theta, const ReweightedTables& tables);

/// Mean squared difference of p_down against P_W over reachable cells with t < T.
double policy_mse(const MarkovPolicy& policy, const ReweightedTables& tables);

/// Pr[x_T = 0] under the policy.
double exact_rwb_prob(const MarkovPolicy& policy, int horizon);

}  // namespace raretraj
