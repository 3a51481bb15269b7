#pragma once

// Function-approximator interfaces shared by the trainers.
//
// A two-action policy is summarised by its logit z(x, t) with
// pi(up) = sigmoid(z); then grad log pi(a) = ([a = up] - pi(up)) grad z.

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "raretraj/random.hpp"
#include "raretraj/walk.hpp"

namespace raretraj {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// ln sigmoid(z) without cancellation.
inline double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

class ParametricModel {
 public:
  virtual ~ParametricModel() = default;
  virtual std::size_t n_params() const = 0;
  virtual std::vector<double> params() const = 0;
  virtual void set_params(std::span<const double> flat) = 0;
  /// Learning-rate class of each parameter (index into a rate table).
  virtual std::vector<int> param_classes() const = 0;
  /// Called at the start of every episode; noisy models resample here.
  virtual void begin_episode(Rng&) {}
  /// False when begin_episode changes the map (x, t) -> output.
  virtual bool deterministic() const { return true; }
  virtual void end_noise() {}
};

class PolicyModel : public ParametricModel {
 public:
  virtual std::unique_ptr<PolicyModel> clone() const = 0;
  virtual double logit(int x, int t) const = 0;
  /// Returns z and writes dz/dtheta into `grad` (size n_params()).
  virtual double logit_grad(int x, int t, std::span<double> grad) const = 0;

  double p_up(int x, int t) const { return sigmoid(logit(x, t)); }
  double p_down(int x, int t) const { return sigmoid(-logit(x, t)); }
};

class ValueModel : public ParametricModel {
 public:
  virtual std::unique_ptr<ValueModel> clone() const = 0;
  virtual double value(int x, int t) const = 0;
  virtual double value_grad(int x, int t, std::span<double> grad) const = 0;
};

}  // namespace raretraj
