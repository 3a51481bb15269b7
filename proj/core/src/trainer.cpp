#include "raretraj/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "raretraj/parallel.hpp"

namespace raretraj {

namespace {

std::size_t cell_index(int horizon, int x, int t) {
  return static_cast<std::size_t>(t) * static_cast<std::size_t>(2 * horizon + 1) + static_cast<std::size_t>(x + horizon);
}

std::string bridge_key(const Trajectory& traj) {
  std::string key(traj.positions.size() - 1, 'd');
  for (std::size_t k = 1; k < traj.positions.size(); ++k)
    if (traj.positions[k] > traj.positions[k - 1]) key[k - 1] = 'u';
  return key;
}

bool params_finite(const std::vector<double>& p) {
  return std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); });
}

// Critic values and gradients per visited cell for one update.
class ValueMemo {
 public:
  ValueMemo(const ValueModel& critic, int horizon)
      : critic_(critic), horizon_(horizon), filled_(static_cast<std::size_t>(2 * horizon + 1) * (horizon + 1), 0),
        v_(filled_.size(), 0.0) {}

  double value(int x, int t) {
    const auto i = cell_index(horizon_, x, t);
    if (!filled_[i]) {
      v_[i] = critic_.value(x, t);
      filled_[i] = 1;
    }
    return v_[i];
  }

 private:
  const ValueModel& critic_;
  int horizon_;
  std::vector<char> filled_;
  std::vector<double> v_;
};

}  // namespace

void TrainConfig::validate() const {
  walk.validate();
  if (batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
  if (batches < 1) throw std::invalid_argument("train.batches must be >= 1");
  if (agents < 1) throw std::invalid_argument("train.agents must be >= 1");
  for (double r : actor_rates)
    if (!(r >= 0.0)) throw std::invalid_argument("train.rates must be >= 0");
  for (double r : critic_rates)
    if (!(r >= 0.0)) throw std::invalid_argument("train.critic_rates must be >= 0");
  if (stop_after_rwb < 0) throw std::invalid_argument("train.stop_after_rwb must be >= 0");
}

PolicyCache::PolicyCache(int horizon, std::size_t n_params)
    : horizon_(horizon), n_params_(n_params), filled_(static_cast<std::size_t>(2 * horizon + 1) * (horizon + 1), 0),
      z_(filled_.size(), 0.0), grad_(filled_.size() * n_params, 0.0) {}

void PolicyCache::clear() { std::fill(filled_.begin(), filled_.end(), 0); }

std::size_t PolicyCache::index(int x, int t) const { return cell_index(horizon_, x, t); }

std::pair<double, const double*> PolicyCache::lookup(const PolicyModel& model, int x, int t) {
  const auto i = index(x, t);
  double* g = grad_.data() + i * n_params_;
  if (!filled_[i]) {
    z_[i] = model.logit_grad(x, t, std::span<double>(g, n_params_));
    filled_[i] = 1;
  }
  return {z_[i], g};
}

Rollout rollout(PolicyModel& policy, const WalkConfig& cfg, Rng& rng, PolicyCache* cache) {
  const int T = cfg.horizon;
  const std::size_t n = policy.n_params();
  policy.begin_episode(rng);
  const bool use_cache = cache != nullptr && policy.deterministic();

  Rollout out;
  out.trajectory.positions.assign(static_cast<std::size_t>(T) + 1, 0);
  out.steps.reserve(static_cast<std::size_t>(T));
  out.log_prob_grads.assign(static_cast<std::size_t>(T), std::vector<double>(n, 0.0));
  std::vector<double> scratch(n);

  int x = 0;
  for (int k = 0; k < T; ++k) {
    double z;
    const double* g;
    if (use_cache) {
      std::tie(z, g) = cache->lookup(policy, x, k);
    } else {
      z = policy.logit_grad(x, k, scratch);
      g = scratch.data();
    }
    const double p_up = sigmoid(z);
    const double p_down = sigmoid(-z);
    const bool down = uniform01(rng) < p_down;
    const double indicator = down ? 0.0 : 1.0;
    auto& lg = out.log_prob_grads[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < n; ++i) lg[i] = (indicator - p_up) * g[i];

    StepRecord rec;
    rec.t = k + 1;
    rec.x_prev = x;
    rec.x_next = down ? x - 1 : x + 1;
    rec.policy_prob = down ? p_down : p_up;
    rec.reward = step_reward(cfg, rec);
    out.steps.push_back(rec);
    x = rec.x_next;
    out.trajectory.positions[static_cast<std::size_t>(k) + 1] = x;
  }

  out.return_suffix.assign(static_cast<std::size_t>(T) + 1, 0.0);
  for (int k = T - 1; k >= 0; --k)
    out.return_suffix[static_cast<std::size_t>(k)] =
        out.steps[static_cast<std::size_t>(k)].reward + out.return_suffix[static_cast<std::size_t>(k) + 1];
  return out;
}

std::vector<double> actor_gradient(const PolicyModel& policy, std::span<const Rollout> batch,
                                   std::span<const std::vector<double>> advantages) {
  if (batch.empty()) throw std::invalid_argument("actor_gradient: empty batch");
  if (advantages.size() != batch.size()) throw std::invalid_argument("actor_gradient: advantage count mismatch");
  std::vector<double> grad(policy.n_params(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& r = batch[i];
    for (std::size_t k = 0; k < r.log_prob_grads.size(); ++k) {
      const double a = advantages[i][k];
      const auto& lg = r.log_prob_grads[k];
      for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += a * lg[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& v : grad) v *= inv;
  return grad;
}

void pg_update(PolicyModel& policy, std::span<const Rollout> batch, Optimizer& opt) {
  std::vector<std::vector<double>> adv;
  adv.reserve(batch.size());
  for (const auto& r : batch) adv.emplace_back(r.return_suffix.begin(), r.return_suffix.end() - 1);
  const auto grad = actor_gradient(policy, batch, adv);
  auto params = policy.params();
  opt.step(params, grad);
  policy.set_params(params);
}

std::vector<std::vector<double>> td_errors(const ValueModel& critic, std::span<const Rollout> batch, bool zero_at_horizon) {
  std::vector<std::vector<double>> out;
  if (batch.empty()) return out;
  const int T = batch.front().trajectory.horizon();
  ValueMemo memo(critic, T);
  for (const auto& r : batch) {
    std::vector<double> d(r.steps.size());
    for (std::size_t k = 0; k < r.steps.size(); ++k) {
      const auto& s = r.steps[k];
      const double v_next = (zero_at_horizon && s.t == T) ? 0.0 : memo.value(s.x_next, s.t);
      d[k] = v_next + s.reward - memo.value(s.x_prev, s.t - 1);
    }
    out.push_back(std::move(d));
  }
  return out;
}

void ac_update(PolicyModel& actor, ValueModel& critic, std::span<const Rollout> batch, Optimizer& actor_opt,
               Optimizer& critic_opt, bool zero_at_horizon) {
  if (batch.empty()) throw std::invalid_argument("ac_update: empty batch");
  const auto delta = td_errors(critic, batch, zero_at_horizon);

  // semi-gradient critic step: sum delta grad V(x_k, k)
  const int T = batch.front().trajectory.horizon();
  const std::size_t nc = critic.n_params();
  std::vector<double> cgrad(nc, 0.0);
  std::vector<double> cell_grad(static_cast<std::size_t>(2 * T + 1) * (T + 1) * nc, 0.0);
  std::vector<char> filled(static_cast<std::size_t>(2 * T + 1) * (T + 1), 0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t k = 0; k < batch[i].steps.size(); ++k) {
      const auto& s = batch[i].steps[k];
      const auto c = cell_index(T, s.x_prev, s.t - 1);
      std::span<double> g(cell_grad.data() + c * nc, nc);
      if (!filled[c]) {
        critic.value_grad(s.x_prev, s.t - 1, g);
        filled[c] = 1;
      }
      for (std::size_t j = 0; j < nc; ++j) cgrad[j] += delta[i][k] * g[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& v : cgrad) v *= inv;

  const auto agrad = actor_gradient(actor, batch, delta);
  auto ap = actor.params();
  actor_opt.step(ap, agrad);
  actor.set_params(ap);
  auto cp = critic.params();
  critic_opt.step(cp, cgrad);
  critic.set_params(cp);
}

std::vector<double> ema(std::span<const double> series, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("ema alpha must lie in (0, 1]");
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) out[i] = i == 0 ? series[0] : alpha * series[i] + (1.0 - alpha) * out[i - 1];
  return out;
}

std::vector<double> AgentResult::returns() const {
  std::vector<double> v;
  for (const auto& m : metrics) v.push_back(m.mean_return);
  return v;
}

std::vector<double> AgentResult::rwb_fractions() const {
  std::vector<double> v;
  for (const auto& m : metrics) v.push_back(m.rwb_fraction);
  return v;
}

double AgentResult::tail_rwb_fraction(int window) const {
  if (metrics.empty()) return 0.0;
  const std::size_t w = std::min(metrics.size(), static_cast<std::size_t>(std::max(window, 1)));
  double acc = 0.0;
  for (std::size_t i = metrics.size() - w; i < metrics.size(); ++i) acc += metrics[i].rwb_fraction;
  return acc / static_cast<double>(w);
}

double AgentResult::final_ema_return(double alpha) const {
  const auto r = returns();
  return r.empty() ? 0.0 : ema(r, alpha).back();
}

AgentResult train_agent(const TrainConfig& cfg, const PolicyFactory& make_policy, const CriticFactory& make_critic,
                        int agent_index) {
  cfg.validate();
  if (cfg.algorithm == Algorithm::ac && !make_critic) throw std::invalid_argument("actor-critic training needs a critic");
  const WalkConfig& walk = cfg.walk;
  Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(agent_index));

  auto actor = make_policy(rng);
  std::unique_ptr<ValueModel> critic = cfg.algorithm == Algorithm::ac ? make_critic(rng) : nullptr;
  Optimizer actor_opt(cfg.optimizer, cfg.actor_rates, actor->param_classes());
  std::unique_ptr<Optimizer> critic_opt;
  if (critic) critic_opt = std::make_unique<Optimizer>(cfg.optimizer, cfg.critic_rates, critic->param_classes());

  AgentResult res;
  res.agent = agent_index;
  std::unique_ptr<ReweightedTables> tables;
  auto noiseless_kl = [&](const PolicyModel& pol) {
    auto clean = pol.clone();
    clean->end_noise();
    const PolicyModel& p = *clean;
    return exact_kl(walk, [&p](int x, int t) { return p.p_down(x, t); }, *tables);
  };
  if (cfg.track_kl) {
    tables = std::make_unique<ReweightedTables>(compute_tables(walk));
    res.initial_kl = noiseless_kl(*actor);
  }

  PolicyCache cache(walk.horizon, actor->n_params());
  std::unordered_set<std::string> bridges;
  const double return_cap = 10.0 * walk.tilt * walk.horizon * walk.horizon;
  std::vector<Rollout> batch(static_cast<std::size_t>(cfg.batch_size));

  for (int b = 0; b < cfg.batches; ++b) {
    cache.clear();
    BatchMetrics m;
    m.batch = b;
    int n_rwb = 0;
    for (auto& r : batch) {
      r = rollout(*actor, walk, rng, &cache);
      m.mean_return += r.total_return();
      if (r.trajectory.is_bridge()) {
        ++n_rwb;
        bridges.insert(bridge_key(r.trajectory));
      }
      if (!std::isfinite(r.total_return()) || std::abs(r.total_return()) > return_cap) {
        res.diverged = true;
        res.diagnostic = "batch " + std::to_string(b) + ": return " + std::to_string(r.total_return()) +
                         " exceeds the divergence cap " + std::to_string(return_cap);
      }
    }
    if (res.diverged) break;
    m.mean_return /= cfg.batch_size;
    m.rwb_fraction = static_cast<double>(n_rwb) / cfg.batch_size;
    m.distinct_rwb = static_cast<int>(bridges.size());
    res.rwb_generated += n_rwb;
    res.metrics.push_back(m);

    if (critic)
      ac_update(*actor, *critic, batch, actor_opt, *critic_opt, cfg.critic_zero_at_horizon);
    else
      pg_update(*actor, batch, actor_opt);

    if (!params_finite(actor->params()) || (critic && !params_finite(critic->params()))) {
      res.diverged = true;
      res.diagnostic = "batch " + std::to_string(b) + ": non-finite parameters after update";
      break;
    }
    if (cfg.stop_after_rwb > 0 && res.rwb_generated >= cfg.stop_after_rwb) break;
  }

  res.final_params = actor->params();
  if (cfg.track_kl && !res.diverged) res.final_kl = noiseless_kl(*actor);
  res.final_policy = std::move(actor);
  res.final_critic = std::move(critic);
  return res;
}

TrainResult train(const TrainConfig& cfg, const PolicyFactory& make_policy, const CriticFactory& make_critic) {
  cfg.validate();
  TrainResult out;
  out.agents.resize(static_cast<std::size_t>(cfg.agents));
  parallel_for(cfg.agents, cfg.threads > 0 ? cfg.threads : default_threads(), [&](int a) {
    out.agents[static_cast<std::size_t>(a)] = train_agent(cfg, make_policy, make_critic, a);
  });

  std::size_t longest = 0;
  for (const auto& a : out.agents) longest = std::max(longest, a.metrics.size());
  for (std::size_t b = 0; b < longest; ++b) {
    BatchMetrics m;
    m.batch = static_cast<int>(b);
    int alive = 0;
    double distinct = 0.0;
    for (const auto& a : out.agents) {
      if (b >= a.metrics.size()) continue;
      m.mean_return += a.metrics[b].mean_return;
      m.rwb_fraction += a.metrics[b].rwb_fraction;
      distinct += a.metrics[b].distinct_rwb;
      ++alive;
    }
    m.mean_return /= alive;
    m.rwb_fraction /= alive;
    m.distinct_rwb = static_cast<int>(std::lround(distinct / alive));
    out.aggregate.push_back(m);
  }
  return out;
}

}  // namespace raretraj
