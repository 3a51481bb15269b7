#include "raretraj/oracle.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace raretraj {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double checked_prob(const MarkovPolicy& policy, int x, int t) {
  const double p = policy(x, t);
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("policy returned p_down=" + std::to_string(p) + " at (x=" + std::to_string(x) +
                            ", t=" + std::to_string(t) + ")");
  return p;
}

// ln P_W(x + a | x, t)
double log_reweighted_step(const WalkConfig& cfg, const ReweightedTables& tab, int x, int t, int a) {
  return log_step_prob(cfg, x, x + a) + log_weight(cfg, x + a, t + 1) + tab.log_g(x + a, t + 1) - tab.log_g(x, t);
}

}  // namespace

bool reachable(int x, int t) { return t >= 0 && std::abs(x) <= t && ((x + t) % 2 == 0); }

CellTable::CellTable(int horizon)
    : horizon_(horizon), data_(static_cast<std::size_t>(2 * horizon + 1) * static_cast<std::size_t>(horizon + 1), kNaN) {
  if (horizon < 0) throw std::invalid_argument("CellTable horizon must be >= 0");
}

std::size_t CellTable::index(int x, int t) const {
  if (t < 0 || t > horizon_ || x < -horizon_ || x > horizon_)
    throw std::out_of_range("cell (x=" + std::to_string(x) + ", t=" + std::to_string(t) + ") outside the table");
  return static_cast<std::size_t>(t) * static_cast<std::size_t>(2 * horizon_ + 1) + static_cast<std::size_t>(x + horizon_);
}

double& CellTable::operator()(int x, int t) { return data_[index(x, t)]; }
double CellTable::operator()(int x, int t) const { return data_[index(x, t)]; }

double CellTable::at(int x, int t) const {
  if (!reachable(x, t) || t > horizon_)
    throw std::out_of_range("cell (x=" + std::to_string(x) + ", t=" + std::to_string(t) + ") is unreachable");
  return data_[index(x, t)];
}

ReweightedTables compute_tables(const WalkConfig& cfg) {
  cfg.validate();
  const int T = cfg.horizon;
  ReweightedTables tab{T, CellTable(T), CellTable(T)};
  for (int x = -T; x <= T; x += 2) tab.log_g(x, T) = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    for (int x = -t; x <= t; x += 2) {
      double acc = -std::numeric_limits<double>::infinity();
      for (int a : {-1, +1}) acc = log_add(acc, log_step_prob(cfg, x, x + a) + log_weight(cfg, x + a, t + 1) + tab.log_g(x + a, t + 1));
      tab.log_g(x, t) = acc;
    }
  }
  for (int t = 0; t < T; ++t) {
    for (int x = -t; x <= t; x += 2) {
      // Normalise the two branches jointly so p_down + p_up = 1 to rounding.
      const double ld = log_step_prob(cfg, x, x - 1) + log_weight(cfg, x - 1, t + 1) + tab.log_g(x - 1, t + 1);
      const double lu = log_step_prob(cfg, x, x + 1) + log_weight(cfg, x + 1, t + 1) + tab.log_g(x + 1, t + 1);
      tab.p_down(x, t) = 1.0 / (1.0 + std::exp(lu - ld));
    }
  }
  return tab;
}

double reweighted_transition(const ReweightedTables& tables, int x, int t) {
  if (t < 0 || t >= tables.horizon)
    throw std::out_of_range("reweighted_transition: t=" + std::to_string(t) + " outside [0, T-1]");
  return tables.p_down.at(x, t);
}

double reweighted_traj_prob(const ReweightedTables& tables, const WalkConfig& cfg, const Trajectory& traj) {
  validate_trajectory(traj);
  if (traj.horizon() != cfg.horizon || tables.horizon != cfg.horizon)
    throw std::invalid_argument("reweighted_traj_prob: horizon mismatch");
  double p = 1.0;
  for (int t = 0; t < traj.horizon(); ++t) {
    const double pd = reweighted_transition(tables, traj.positions[t], t);
    p *= traj.positions[t + 1] < traj.positions[t] ? pd : 1.0 - pd;
  }
  return p;
}

double expected_weight(const WalkConfig& cfg) {
  double z = 0.0;
  for (int x = -cfg.horizon; x <= cfg.horizon; x += 2) z += endpoint_prob(cfg, x) * weight(cfg, x, cfg.horizon);
  return z;
}

double direct_reweighted_traj_prob(const WalkConfig& cfg, const Trajectory& traj) {
  if (traj.horizon() != cfg.horizon) throw std::invalid_argument("direct_reweighted_traj_prob: horizon mismatch");
  return weight(cfg, traj.endpoint(), cfg.horizon) * trajectory_prob(cfg, traj) / expected_weight(cfg);
}

Trajectory sample_markov(const MarkovPolicy& policy, int horizon, Rng& rng) {
  Trajectory traj;
  traj.positions.resize(static_cast<std::size_t>(horizon) + 1);
  int x = 0;
  traj.positions[0] = 0;
  for (int t = 0; t < horizon; ++t) {
    x += uniform01(rng) < checked_prob(policy, x, t) ? -1 : +1;
    traj.positions[static_cast<std::size_t>(t) + 1] = x;
  }
  return traj;
}

std::vector<Trajectory> sample_reweighted(const ReweightedTables& tables, const WalkConfig& cfg, Rng& rng, int n) {
  if (n < 1) throw std::invalid_argument("sample_reweighted: n must be >= 1");
  if (tables.horizon != cfg.horizon) throw std::invalid_argument("sample_reweighted: horizon mismatch");
  const auto pol = reweighted_policy(tables);
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(sample_markov(pol, cfg.horizon, rng));
  return out;
}

MarkovPolicy original_policy(const WalkConfig& cfg) {
  const double pd = cfg.down_prob();
  return [pd](int, int) { return pd; };
}

MarkovPolicy reweighted_policy(const ReweightedTables& tables) {
  // owns a copy so the policy may outlive the tables
  return [pd = std::make_shared<const CellTable>(tables.p_down)](int x, int t) { return pd->at(x, t); };
}

CellTable tabulate(const MarkovPolicy& policy, int horizon) {
  CellTable tab(horizon);
  for (int t = 0; t < horizon; ++t)
    for (int x = -t; x <= t; x += 2) tab(x, t) = checked_prob(policy, x, t);
  return tab;
}

CellTable exact_value_function(const WalkConfig& cfg, const MarkovPolicy& policy) {
  const int T = cfg.horizon;
  CellTable v(T);
  for (int x = -T; x <= T; x += 2) v(x, T) = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    for (int x = -t; x <= t; x += 2) {
      const double pd = checked_prob(policy, x, t);
      double acc = 0.0;
      for (int a : {-1, +1}) {
        const double pa = a < 0 ? pd : 1.0 - pd;
        // An action the policy never takes contributes nothing (p ln p -> 0).
        if (pa == 0.0) continue;
        const double r = log_weight(cfg, x + a, t + 1) - (std::log(pa) - log_step_prob(cfg, x, x + a));
        acc += pa * (v(x + a, t + 1) + r);
      }
      v(x, t) = acc;
    }
  }
  return v;
}

double exact_expected_return(const WalkConfig& cfg, const MarkovPolicy& policy) {
  return exact_value_function(cfg, policy).at(0, 0);
}

CellTable state_marginals(const MarkovPolicy& policy, int horizon) {
  CellTable mu(horizon);
  for (int t = 0; t <= horizon; ++t)
    for (int x = -t; x <= t; x += 2) mu(x, t) = 0.0;
  mu(0, 0) = 1.0;
  for (int t = 0; t < horizon; ++t) {
    for (int x = -t; x <= t; x += 2) {
      const double m = mu(x, t);
      if (m == 0.0) continue;
      const double pd = checked_prob(policy, x, t);
      mu(x - 1, t + 1) += m * pd;
      mu(x + 1, t + 1) += m * (1.0 - pd);
    }
  }
  return mu;
}

double exact_kl(const WalkConfig& cfg, const MarkovPolicy& p_theta, const ReweightedTables& tables) {
  if (tables.horizon != cfg.horizon) throw std::invalid_argument("exact_kl: horizon mismatch");
  const int T = cfg.horizon;
  const CellTable mu = state_marginals(p_theta, T);
  double kl = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int x = -t; x <= t; x += 2) {
      const double m = mu(x, t);
      if (m == 0.0) continue;
      const double pd = checked_prob(p_theta, x, t);
      double local = 0.0;
      for (int a : {-1, +1}) {
        const double pa = a < 0 ? pd : 1.0 - pd;
        if (pa == 0.0) continue;
        local += pa * (std::log(pa) - log_reweighted_step(cfg, tables, x, t, a));
      }
      kl += m * local;
    }
  }
  return kl;
}

double policy_mse(const MarkovPolicy& policy, const ReweightedTables& tables) {
  double acc = 0.0;
  int cells = 0;
  for (int t = 0; t < tables.horizon; ++t) {
    for (int x = -t; x <= t; x += 2) {
      const double d = checked_prob(policy, x, t) - tables.p_down(x, t);
      acc += d * d;
      ++cells;
    }
  }
  return cells > 0 ? acc / cells : 0.0;
}

double exact_rwb_prob(const MarkovPolicy& policy, int horizon) { return state_marginals(policy, horizon)(0, horizon); }

}  // namespace raretraj
