#pragma once

// Two-hidden-layer perceptron used as the classical baseline.

#include <array>
#include <span>
#include <vector>

#include "raretraj/model.hpp"

namespace raretraj {

enum class Activation { relu, sine };
enum class Head { policy, critic };

struct MlpSpec {
  int n1 = 2;
  int n2 = 2;
  Activation activation = Activation::relu;
  Head head = Head::policy;
  std::vector<std::array<double, 2>> fourier_b;  // empty: raw (x, t) input

  int in_dim() const { return fourier_b.empty() ? 2 : 2 * static_cast<int>(fourier_b.size()); }
  int out_dim() const { return head == Head::policy ? 2 : 1; }
  std::size_t param_count() const;
  void validate() const;
};

/// (cos(B s), sin(B s)) for s = (x, t).
std::vector<double> fourier_feature_map(std::span<const std::array<double, 2>> b, double x, double t);

/// Parameters are stored flat: W1 (n1 x in), b1, W2 (n2 x n1), b2, W3 (out x n2), b3.
class Mlp {
 public:
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// Uniform in +-1/sqrt(fan_in) for weights and biases.
  void init(Rng& rng);

  std::vector<double> input(double x, double t) const;
  std::vector<double> forward(double x, double t) const;
  /// Outputs, plus d(upstream . outputs)/dparams written into grad.
  std::vector<double> backward(double x, double t, std::span<const double> upstream, std::span<double> grad) const;

 private:
  MlpSpec spec_;
  std::vector<double> params_;
};

class MlpPolicy final : public PolicyModel {
 public:
  MlpPolicy(Mlp net, double beta = 1.0);

  const Mlp& net() const { return net_; }
  std::unique_ptr<PolicyModel> clone() const override { return std::make_unique<MlpPolicy>(*this); }
  std::size_t n_params() const override { return net_.params().size(); }
  std::vector<double> params() const override { return net_.params(); }
  void set_params(std::span<const double> flat) override;
  std::vector<int> param_classes() const override { return std::vector<int>(n_params(), 0); }
  double logit(int x, int t) const override;
  double logit_grad(int x, int t, std::span<double> grad) const override;

 private:
  Mlp net_;
  double beta_;
};

class MlpCritic final : public ValueModel {
 public:
  explicit MlpCritic(Mlp net);

  std::unique_ptr<ValueModel> clone() const override { return std::make_unique<MlpCritic>(*this); }
  std::size_t n_params() const override { return net_.params().size(); }
  std::vector<double> params() const override { return net_.params(); }
  void set_params(std::span<const double> flat) override;
  std::vector<int> param_classes() const override { return std::vector<int>(n_params(), 0); }
  double value(int x, int t) const override;
  double value_grad(int x, int t, std::span<double> grad) const override;

 private:
  Mlp net_;
};

}  // namespace raretraj
