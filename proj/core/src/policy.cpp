#include "raretraj/policy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace raretraj {

namespace {

void write_flat(const ParameterSet& p, std::span<double> out, double scale) {
  if (out.size() != p.size()) throw std::invalid_argument("gradient buffer has the wrong size");
  std::size_t i = 0;
  for (double v : p.phi) out[i++] = scale * v;
  for (double v : p.lambda) out[i++] = scale * v;
  for (double v : p.omega) out[i++] = scale * v;
}

std::vector<int> classes_of(const Circuit& c) {
  std::vector<int> out;
  for (auto k : c.param_classes()) out.push_back(static_cast<int>(k));
  return out;
}

}  // namespace

SoftmaxPqcPolicy::SoftmaxPqcPolicy(Circuit circuit, ParameterSet params, double beta)
    : circuit_(std::move(circuit)), params_(std::move(params)), beta_(beta) {
  if (!(beta_ > 0.0)) throw std::invalid_argument("policy beta must be > 0");
  circuit_.check_shape(params_);
}

std::vector<int> SoftmaxPqcPolicy::param_classes() const { return classes_of(circuit_); }

void SoftmaxPqcPolicy::begin_episode(Rng& rng) {
  if (noise_.rate > 0.0) offsets_ = sample_coherent_error(circuit_, noise_, rng);
}

double SoftmaxPqcPolicy::logit(int x, int t) const { return 2.0 * beta_ * circuit_.expectation(params_, input(x, t)); }

double SoftmaxPqcPolicy::logit_grad(int x, int t, std::span<double> grad) const {
  const auto g = circuit_.gradient(params_, input(x, t));
  write_flat(g.grad, grad, 2.0 * beta_);
  return 2.0 * beta_ * g.value;
}

std::pair<double, double> SoftmaxPqcPolicy::policy_probs(int x, int t) const {
  // softmax of (beta E, -beta E) after subtracting the larger logit
  const double e = beta_ * circuit_.expectation(params_, input(x, t));
  const double m = std::abs(e);
  const double up = std::exp(e - m);
  const double down = std::exp(-e - m);
  return {up / (up + down), down / (up + down)};
}

ParameterSet SoftmaxPqcPolicy::log_policy_gradient(int x, int t, Action a) const {
  const auto g = circuit_.gradient(params_, input(x, t));
  const double p_up = sigmoid(2.0 * beta_ * g.value);
  const double coef = 2.0 * beta_ * ((a == Action::up ? 1.0 : 0.0) - p_up);
  ParameterSet out = g.grad;
  for (auto* vec : {&out.phi, &out.lambda, &out.omega})
    for (auto& v : *vec) v *= coef;
  return out;
}

PqcCritic::PqcCritic(Circuit circuit, ParameterSet params) : circuit_(std::move(circuit)), params_(std::move(params)) {
  circuit_.check_shape(params_);
}

std::vector<int> PqcCritic::param_classes() const { return classes_of(circuit_); }

double PqcCritic::value(int x, int t) const { return circuit_.expectation(params_, {double(x), double(t), {}}); }

double PqcCritic::value_grad(int x, int t, std::span<double> grad) const {
  const auto g = circuit_.gradient(params_, {double(x), double(t), {}});
  write_flat(g.grad, grad, 1.0);
  return g.value;
}

double FixedPolicy::logit(int x, int t) const {
  const double pd = p_down_(x, t);
  if (!(pd >= 0.0 && pd <= 1.0)) throw std::domain_error("fixed policy probability outside [0, 1]");
  if (pd == 0.0) return std::numeric_limits<double>::infinity();
  if (pd == 1.0) return -std::numeric_limits<double>::infinity();
  return std::log1p(-pd) - std::log(pd);
}

}  // namespace raretraj
