#pragma once

#include <span>
#include <vector>

namespace raretraj {

enum class OptimizerKind { sgd, adam };

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Gradient *ascent* with one learning rate per parameter class.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::vector<double> class_rates, std::vector<int> param_classes, AdamConfig adam = {});

  void step(std::span<double> params, std::span<const double> grad);
  OptimizerKind kind() const { return kind_; }

 private:
  OptimizerKind kind_;
  std::vector<double> rates_;  // per parameter
  AdamConfig adam_;
  std::vector<double> m_, v_;
  long steps_ = 0;
};

}  // namespace raretraj
