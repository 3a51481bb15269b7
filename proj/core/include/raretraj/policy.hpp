#pragma once

#include <functional>
#include <utility>

#include "raretraj/model.hpp"
#include "raretraj/qsim.hpp"

namespace raretraj {

/// Softmax over O_{+1} = omega Z..Z and O_{-1} = -O_{+1} at inverse temperature beta.
class SoftmaxPqcPolicy final : public PolicyModel {
 public:
  SoftmaxPqcPolicy(Circuit circuit, ParameterSet params, double beta = 1.0);

  const Circuit& circuit() const { return circuit_; }
  const ParameterSet& parameter_set() const { return params_; }
  double beta() const { return beta_; }

  /// (pi(up), pi(down))
  std::pair<double, double> policy_probs(int x, int t) const;
  ParameterSet log_policy_gradient(int x, int t, Action a) const;

  void set_coherent_error(CoherentErrorConfig cfg) { noise_ = cfg; }
  const std::vector<double>& offsets() const { return offsets_; }

  std::unique_ptr<PolicyModel> clone() const override { return std::make_unique<SoftmaxPqcPolicy>(*this); }
  std::size_t n_params() const override { return params_.size(); }
  std::vector<double> params() const override { return params_.flatten(); }
  void set_params(std::span<const double> flat) override { params_.assign(flat); }
  std::vector<int> param_classes() const override;
  void begin_episode(Rng& rng) override;
  bool deterministic() const override { return noise_.rate == 0.0; }
  void end_noise() override { offsets_.clear(); }
  double logit(int x, int t) const override;
  double logit_grad(int x, int t, std::span<double> grad) const override;

 private:
  CircuitInput input(int x, int t) const { return {static_cast<double>(x), static_cast<double>(t), offsets_}; }

  Circuit circuit_;
  ParameterSet params_;
  double beta_;
  CoherentErrorConfig noise_;
  std::vector<double> offsets_;
};

/// V(x, t) = omega^C <Z..Z>.
class PqcCritic final : public ValueModel {
 public:
  PqcCritic(Circuit circuit, ParameterSet params);

  const Circuit& circuit() const { return circuit_; }
  const ParameterSet& parameter_set() const { return params_; }
  double critic_value(int x, int t) const { return value(x, t); }

  std::unique_ptr<ValueModel> clone() const override { return std::make_unique<PqcCritic>(*this); }
  std::size_t n_params() const override { return params_.size(); }
  std::vector<double> params() const override { return params_.flatten(); }
  void set_params(std::span<const double> flat) override { params_.assign(flat); }
  std::vector<int> param_classes() const override;
  double value(int x, int t) const override;
  double value_grad(int x, int t, std::span<double> grad) const override;

 private:
  Circuit circuit_;
  ParameterSet params_;
};

/// A fixed Markov policy (no trainable parameters), e.g. P or P_W.
class FixedPolicy final : public PolicyModel {
 public:
  explicit FixedPolicy(std::function<double(int, int)> p_down) : p_down_(std::move(p_down)) {}

  std::unique_ptr<PolicyModel> clone() const override { return std::make_unique<FixedPolicy>(*this); }
  std::size_t n_params() const override { return 0; }
  std::vector<double> params() const override { return {}; }
  void set_params(std::span<const double>) override {}
  std::vector<int> param_classes() const override { return {}; }
  double logit(int x, int t) const override;
  double logit_grad(int x, int t, std::span<double>) const override { return logit(x, t); }

 private:
  std::function<double(int, int)> p_down_;
};

}  // namespace raretraj
