#include "raretraj/minimize.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace raretraj {

namespace {

struct Bridge {
  const Objective* objective;
  std::size_t dim;
  std::vector<double> x;
  std::vector<double> g;
};

void load(Bridge& b, const gsl_vector* v) {
  for (std::size_t i = 0; i < b.dim; ++i) b.x[i] = gsl_vector_get(v, i);
}

double call_f(const gsl_vector* v, void* p) {
  auto& b = *static_cast<Bridge*>(p);
  load(b, v);
  const double f = (*b.objective)(b.x, {});
  return std::isfinite(f) ? f : GSL_POSINF;
}

void call_df(const gsl_vector* v, void* p, gsl_vector* df) {
  auto& b = *static_cast<Bridge*>(p);
  load(b, v);
  (*b.objective)(b.x, b.g);
  for (std::size_t i = 0; i < b.dim; ++i) gsl_vector_set(df, i, b.g[i]);
}

void call_fdf(const gsl_vector* v, void* p, double* f, gsl_vector* df) {
  auto& b = *static_cast<Bridge*>(p);
  load(b, v);
  *f = (*b.objective)(b.x, b.g);
  for (std::size_t i = 0; i < b.dim; ++i) gsl_vector_set(df, i, b.g[i]);
}

void quiet_gsl() {
  static std::once_flag once;
  std::call_once(once, [] { gsl_set_error_handler_off(); });
}

}  // namespace

MinimizeResult minimize_bfgs(const Objective& objective, std::vector<double> x0, const MinimizeOptions& opts) {
  quiet_gsl();
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("minimize_bfgs: empty parameter vector");
  Bridge bridge{&objective, n, std::vector<double>(n), std::vector<double>(n)};

  gsl_multimin_function_fdf fn;
  fn.n = n;
  fn.f = call_f;
  fn.df = call_df;
  fn.fdf = call_fdf;
  fn.params = &bridge;

  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> start(gsl_vector_alloc(n), gsl_vector_free);
  for (std::size_t i = 0; i < n; ++i) gsl_vector_set(start.get(), i, x0[i]);
  std::unique_ptr<gsl_multimin_fdfminimizer, decltype(&gsl_multimin_fdfminimizer_free)> s(
      gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n), gsl_multimin_fdfminimizer_free);
  gsl_multimin_fdfminimizer_set(s.get(), &fn, start.get(), opts.step, opts.line_tol);

  MinimizeResult res;
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(200 * n);
  int status = GSL_CONTINUE;
  while (res.iterations < max_iter) {
    ++res.iterations;
    status = gsl_multimin_fdfminimizer_iterate(s.get());
    if (status != GSL_SUCCESS) break;
    // inf-norm, as in the usual gtol convention
    double gmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) gmax = std::max(gmax, std::abs(gsl_vector_get(s->gradient, i)));
    if (gmax < opts.gtol) {
      status = GSL_SUCCESS;
      res.converged = true;
      break;
    }
    status = GSL_CONTINUE;
  }
  if (!res.converged) {
    // no progress in the line search means we sit at a (numerically) flat point
    res.converged = status == GSL_ENOPROG;
    res.status = status == GSL_CONTINUE ? "iteration limit" : gsl_strerror(status);
  } else {
    res.status = "gradient tolerance";
  }
  res.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.x[i] = gsl_vector_get(s->x, i);
  res.f = s->f;
  return res;
}

std::vector<double> numeric_gradient(const Objective& objective, std::span<const double> x, double h) {
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = xp[i];
    xp[i] = keep + h;
    const double fp = objective(xp, {});
    xp[i] = keep - h;
    const double fm = objective(xp, {});
    xp[i] = keep;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Objective with_forward_difference(Objective value_only) {
  return [f = std::move(value_only)](std::span<const double> x, std::span<double> grad) {
    const double f0 = f(x, {});
    if (grad.empty()) return f0;
    static const double rel = std::sqrt(std::numeric_limits<double>::epsilon());
    std::vector<double> xp(x.begin(), x.end());
    for (std::size_t i = 0; i < xp.size(); ++i) {
      const double keep = xp[i];
      const double h = rel * std::max(1.0, std::abs(keep)) * (keep >= 0.0 ? 1.0 : -1.0);
      xp[i] = keep + h;
      const double dh = xp[i] - keep;  // exactly representable step
      grad[i] = (f(xp, {}) - f0) / dh;
      xp[i] = keep;
    }
    return f0;
  };
}

}  // namespace raretraj
