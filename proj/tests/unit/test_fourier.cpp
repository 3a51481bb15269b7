#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "raretraj/fourier.hpp"
#include "raretraj/minimize.hpp"
#include "raretraj/policy.hpp"

using namespace raretraj;

namespace {

constexpr double kPi = std::numbers::pi;

Circuit raw_circuit(Layout layout, int layers) {
  CircuitSpec s;
  s.layout = layout;
  s.n_layers = layers;
  s.encoding = Encoding::raw;
  s.toggles.input_scaling = false;
  return Circuit(s);
}

std::vector<double> closed_form_thetas(Layout layout, const ParameterSet& p) {
  if (layout == Layout::one_qubit) return {p.phi[0], p.phi[1], p.phi[2]};
  return {p.phi[0], p.phi[2]};
}

}  // namespace

TEST(Fourier, SeriesEvaluation) {
  FourierSeries s(1, 1);
  s.at(0, 0) = 0.5;
  EXPECT_DOUBLE_EQ(s.eval(1.3, -0.4), 0.5);
  s.at(1, 0) = 0.25;
  s.at(-1, 0) = 0.25;
  EXPECT_NEAR(s.eval(0.0, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(s.eval(kPi, 0.0), 0.0, 1e-15);
  EXPECT_EQ(s.coeff(5, 0), std::complex<double>(0.0));
  EXPECT_DOUBLE_EQ(s.reality_defect(), 0.0);
  s.at(0, 1) = {0.0, 0.1};
  EXPECT_NEAR(s.reality_defect(), 0.1, 1e-15);
}

TEST(Fourier, CosineFormMatchesComplexForm) {
  Rng rng = make_rng(4);
  FourierSeries s(2, 2);
  for (int nx = 0; nx <= 2; ++nx)
    for (int nt = -2; nt <= 2; ++nt) {
      if (nx == 0 && nt < 0) continue;
      std::complex<double> c(uniform(rng, -1, 1), (nx == 0 && nt == 0) ? 0.0 : uniform(rng, -1, 1));
      s.at(nx, nt) = c;
      s.at(-nx, -nt) = std::conj(c);
    }
  const auto form = CosineForm::from_series(s);
  for (double x : {0.0, 0.7, -2.3})
    for (double t : {0.1, 1.9}) {
      EXPECT_NEAR(form.eval(x, t), s.eval(x, t), 1e-12);
      EXPECT_NEAR(s.eval_complex(x, t).imag(), 0.0, 1e-12);
    }
  for (const auto& term : form.terms) {
    EXPECT_GE(term.phase, 0.0);
    EXPECT_LT(term.phase, 2 * kPi);
  }
  EXPECT_EQ(CosineForm::quadrant(1, 2).terms.size(), 6u);
}

TEST(Fourier, ClosedFormExamples) {
  const auto two = closed_form_coeffs_one_layer(2, {0.0, 0.0});
  for (int nx : {-1, 1})
    for (int nt : {-1, 1}) EXPECT_NEAR(std::abs(two.at(nx, nt) - 0.25), 0.0, 1e-15);
  EXPECT_EQ(two.at(0, 0), std::complex<double>(0.0));
  EXPECT_NEAR(two.eval(0.3, 1.1), std::cos(0.3) * std::cos(1.1), 1e-15);

  // all angles zero: <Z> = cos(x + t)
  const auto one = closed_form_coeffs_one_layer(1, {0.0, 0.0, 0.0});
  EXPECT_NEAR(std::abs(one.at(1, 1) - 0.5), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(one.at(1, -1)), 0.0, 1e-15);
  EXPECT_NEAR(one.eval(0.4, 0.9), std::cos(1.3), 1e-15);
  EXPECT_THROW(closed_form_coeffs_one_layer(3, {0.0}), std::invalid_argument);
}

TEST(Fourier, FftMatchesClosedForm) {
  Rng rng = make_rng(100);
  for (auto layout : {Layout::one_qubit, Layout::two_qubit}) {
    const Circuit c = raw_circuit(layout, 1);
    for (int k = 0; k < 100; ++k) {
      const auto p = c.init_params(rng);
      const auto fft = extract_coeffs_fft(c, p, 2);
      const auto cf = closed_form_coeffs_one_layer(layout == Layout::one_qubit ? 1 : 2, closed_form_thetas(layout, p));
      for (int nx = -2; nx <= 2; ++nx)
        for (int nt = -2; nt <= 2; ++nt) EXPECT_NEAR(std::abs(fft.at(nx, nt) - cf.coeff(nx, nt)), 0.0, 1e-10);
      EXPECT_LT(fft.reality_defect(), 1e-12);
    }
  }
}

TEST(Fourier, BandLimit) {
  Rng rng = make_rng(7);
  for (int layers : {1, 2, 3}) {
    for (auto layout : {Layout::one_qubit, Layout::two_qubit}) {
      const Circuit c = raw_circuit(layout, layers);
      for (int k = 0; k < 10; ++k) {
        const auto s = extract_coeffs_fft(c, c.init_params(rng), layers + 1);
        for (int n = -(layers + 1); n <= layers + 1; ++n)
          for (int edge : {-(layers + 1), layers + 1}) {
            EXPECT_NEAR(std::abs(s.at(edge, n)), 0.0, 1e-10);
            EXPECT_NEAR(std::abs(s.at(n, edge)), 0.0, 1e-10);
          }
      }
    }
  }
}

TEST(Fourier, SingleQubitOneLayerNeedsTime) {
  Rng rng = make_rng(8);
  const Circuit c = raw_circuit(Layout::one_qubit, 1);
  for (int k = 0; k < 20; ++k) {
    const auto s = extract_coeffs_fft(c, c.init_params(rng), 1);
    for (int nx = -1; nx <= 1; ++nx) EXPECT_NEAR(std::abs(s.at(nx, 0)), 0.0, 1e-10);
  }
}

TEST(Fourier, SurrogateReproducesOneLayerPolicy) {
  Rng rng = make_rng(55);
  for (auto layout : {Layout::one_qubit, Layout::two_qubit}) {
    CircuitSpec s;
    s.layout = layout;
    s.n_layers = 1;
    Circuit c(s);
    for (int k = 0; k < 10; ++k) {
      auto p = c.init_params(rng);
      p.lambda[0] = uniform(rng, 0.2, 2.0);
      p.lambda[1] = uniform(rng, 0.2, 2.0);
      p.omega[0] = uniform(rng, -2.0, 2.0);
      const double beta = uniform(rng, 0.5, 1.5);
      const SoftmaxPqcPolicy pol(c, p, beta);
      SurrogateParams sp;
      sp.form = CosineForm::from_series(
          closed_form_coeffs_one_layer(layout == Layout::one_qubit ? 1 : 2, closed_form_thetas(layout, p)));
      sp.lambda_x = p.lambda[0];
      sp.lambda_t = p.lambda[1];
      sp.omega = 2.0 * beta * p.omega[0];
      for (int t = 0; t < 20; ++t)
        for (int x = -t; x <= t; x += 2) EXPECT_NEAR(surrogate_policy(sp, x, t), pol.p_down(x, t), 1e-12);
    }
  }
}

TEST(Fourier, WrapPhase) {
  EXPECT_DOUBLE_EQ(wrap_phase(0.0), 0.0);
  EXPECT_NEAR(wrap_phase(-kPi / 2), 3 * kPi / 2, 1e-15);
  EXPECT_NEAR(wrap_phase(5 * kPi), kPi, 1e-12);
  EXPECT_LT(wrap_phase(2 * kPi), 2 * kPi);
}

TEST(Fourier, BfgsMinimisesQuadratic) {
  const Objective f = [](std::span<const double> x, std::span<double> g) {
    const double a = x[0] - 1.0, b = x[1] + 2.0;
    if (!g.empty()) {
      g[0] = 2 * a + b;
      g[1] = a + 4 * b;
    }
    return a * a + a * b + 2 * b * b;
  };
  const auto r = minimize_bfgs(f, {5.0, 5.0});
  EXPECT_TRUE(r.converged) << r.status;
  EXPECT_NEAR(r.x[0], 1.0, 1e-5);
  EXPECT_NEAR(r.x[1], -2.0, 1e-5);

  const Objective value_only = [&f](std::span<const double> x, std::span<double>) { return f(x, {}); };
  const auto r2 = minimize_bfgs(with_forward_difference(value_only), {5.0, 5.0});
  EXPECT_NEAR(r2.x[0], 1.0, 1e-4);
  const std::vector<double> at{0.3, 0.4};
  const auto ng = numeric_gradient(f, at);
  std::vector<double> g(2);
  f(at, g);
  EXPECT_NEAR(ng[0], g[0], 1e-8);
  EXPECT_NEAR(ng[1], g[1], 1e-8);
}

TEST(Fourier, SurrogateFitImprovesOnFlatPolicy) {
  const WalkConfig cfg{20, 0.0, 1.0};
  const auto tables = compute_tables(cfg);
  FitConfig fit;
  fit.restarts = 2;
  fit.rwb_samples = 2000;
  const auto r = fit_surrogate(cfg, tables, fit);
  EXPECT_EQ(r.restart_losses.size(), 2u);
  EXPECT_LT(r.mse, policy_mse(original_policy(cfg), tables));
  EXPECT_NEAR(r.mse, surrogate_mse(r.best, tables), 1e-12);
  EXPECT_GT(r.rwb_prob, rwb_prob(cfg));
}
