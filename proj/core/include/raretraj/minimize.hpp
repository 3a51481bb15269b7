#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace raretraj {

/// Returns f(x); fills grad when it is non-empty.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct MinimizeOptions {
  int max_iter = 0;       // 0: 200 * dim
  double gtol = 1e-5;     // stop when the gradient inf-norm drops below this
  double step = 0.01;     // first trial step
  double line_tol = 0.1;  // line-search accuracy
};

struct MinimizeResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string status;
};

/// Quasi-Newton (BFGS) minimisation.
MinimizeResult minimize_bfgs(const Objective& objective, std::vector<double> x0, const MinimizeOptions& opts = {});

/// Central differences, step h.
std::vector<double> numeric_gradient(const Objective& objective, std::span<const double> x, double h = 1e-6);

/// Wraps a value-only objective with a forward-difference gradient, relative
/// step sqrt(machine eps) scaled by max(1, |x_i|).
Objective with_forward_difference(Objective value_only);

}  // namespace raretraj
