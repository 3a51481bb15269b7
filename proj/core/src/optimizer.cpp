#include "raretraj/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace raretraj {

Optimizer::Optimizer(OptimizerKind kind, std::vector<double> class_rates, std::vector<int> param_classes, AdamConfig adam)
    : kind_(kind), adam_(adam) {
  rates_.reserve(param_classes.size());
  for (int c : param_classes) {
    if (c < 0 || static_cast<std::size_t>(c) >= class_rates.size())
      throw std::invalid_argument("no learning rate for parameter class " + std::to_string(c));
    rates_.push_back(class_rates[static_cast<std::size_t>(c)]);
  }
  m_.assign(rates_.size(), 0.0);
  v_.assign(rates_.size(), 0.0);
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != rates_.size() || grad.size() != rates_.size()) throw std::invalid_argument("Optimizer::step: size mismatch");
  if (kind_ == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] += rates_[i] * grad[i];
    return;
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = adam_.beta1 * m_[i] + (1.0 - adam_.beta1) * grad[i];
    v_[i] = adam_.beta2 * v_[i] + (1.0 - adam_.beta2) * grad[i] * grad[i];
    params[i] += rates_[i] * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + adam_.eps);
  }
}

}  // namespace raretraj
