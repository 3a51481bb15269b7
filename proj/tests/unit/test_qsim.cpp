#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "raretraj/qsim.hpp"

using namespace raretraj;

namespace {

constexpr double kPi = std::numbers::pi;

CircuitSpec spec(Layout layout, int layers, int copies = 1) {
  CircuitSpec s;
  s.layout = layout;
  s.n_layers = layers;
  s.copies = copies;
  return s;
}

double norm2(const StateVector& psi) {
  double n = 0.0;
  for (const auto& a : psi) n += std::norm(a);
  return n;
}

ParameterSet random_params(const Circuit& c, Rng& rng) {
  auto p = c.init_params(rng);
  for (auto& l : p.lambda) l = uniform(rng, -2.0, 2.0);
  for (auto& w : p.omega) w = uniform(rng, -2.0, 2.0);
  return p;
}

// every flat gradient component against central differences
void check_gradient(const Circuit& c, const ParameterSet& p, const CircuitInput& in) {
  const auto g = c.gradient(p, in);
  EXPECT_NEAR(g.value, c.expectation(p, in), 1e-12);
  const auto flat = p.flatten();
  const auto gflat = g.grad.flatten();
  ASSERT_EQ(gflat.size(), flat.size());
  const double h = 1e-5;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    auto up = flat, dn = flat;
    up[i] += h;
    dn[i] -= h;
    ParameterSet pu = p, pd = p;
    pu.assign(up);
    pd.assign(dn);
    const double fd = (c.expectation(pu, in) - c.expectation(pd, in)) / (2 * h);
    EXPECT_NEAR(gflat[i], fd, 1e-6) << "component " << i;
  }
}

}  // namespace

TEST(Qsim, EncodeInput) {
  EXPECT_DOUBLE_EQ(encode_input(0.0, 3.7), 0.0);
  EXPECT_NEAR(encode_input(1.0, 1.0), kPi / 4, 1e-15);
  EXPECT_LT(encode_input(1e300, 1.0), kPi / 2 + 1e-15);
}

TEST(Qsim, AllGatesDisabledIsIdentity) {
  for (auto layout : {Layout::one_qubit, Layout::two_qubit}) {
    auto s = spec(layout, 3);
    s.toggles = {false, false, false, false, false, false, false};
    const Circuit c(s);
    const auto psi = c.run(c.zero_params(), {4.0, 7.0});
    EXPECT_NEAR(std::abs(psi[0]), 1.0, 1e-15);
    EXPECT_NEAR(norm2(psi), 1.0, 1e-15);
  }
}

TEST(Qsim, SingleQubitClosedForms) {
  auto s = spec(Layout::one_qubit, 1);
  s.toggles.ry = s.toggles.rz = false;
  s.toggles.input_scaling = false;
  s.encoding = Encoding::raw;
  const Circuit c(s);
  for (double x : {0.0, 0.3, 1.7})
    for (double t : {0.0, 0.9, -2.1}) EXPECT_NEAR(c.raw_expectation(c.zero_params(), {x, t}), std::cos(x + t), 1e-12);

  // phi = 0 leaves only the encodings
  auto s2 = spec(Layout::one_qubit, 1);
  s2.encoding = Encoding::raw;
  s2.toggles.input_scaling = false;
  const Circuit c2(s2);
  EXPECT_NEAR(c2.raw_expectation(c2.zero_params(), {0.4, 1.1}), std::cos(1.5), 1e-12);
}

TEST(Qsim, RxAdditivity) {
  auto s = spec(Layout::one_qubit, 1);
  s.toggles.ry = s.toggles.rz = false;
  s.toggles.input_scaling = false;
  s.encoding = Encoding::raw;
  const Circuit c(s);
  const auto a = c.run(c.zero_params(), {0.7, 1.9});
  const auto b = c.run(c.zero_params(), {2.6, 0.0});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(std::abs(a[i] - b[i]), 0.0, 1e-12);
}

TEST(Qsim, Expectation) {
  StateVector zero{1.0, 0.0}, one{0.0, 1.0};
  EXPECT_DOUBLE_EQ(expectation(zero, Observable::all(1)), 1.0);
  EXPECT_DOUBLE_EQ(expectation(one, Observable::all(1)), -1.0);
  EXPECT_THROW(expectation(zero, Observable{}), std::invalid_argument);
  EXPECT_THROW(expectation(zero, Observable{{1}}), std::invalid_argument);
}

TEST(Qsim, TwoQubitProductState) {
  const Circuit c(spec(Layout::two_qubit, 1));
  auto p = c.zero_params();
  for (int x : {0, 1, -3, 6})
    for (int t : {0, 2, 9})
      EXPECT_NEAR(c.raw_expectation(p, {double(x), double(t)}), std::cos(std::atan(x)) * std::cos(std::atan(t)), 1e-12);
}

TEST(Qsim, LastCzCommutesWithReadout) {
  Rng rng = make_rng(5);
  for (int layers : {1, 2, 4}) {
    auto on = spec(Layout::two_qubit, layers);
    auto off = on;
    off.toggles.cz_last_layer = false;
    const Circuit a(on), b(off);
    for (int k = 0; k < 10; ++k) {
      const auto p = random_params(a, rng);
      EXPECT_NEAR(a.expectation(p, {3, 5}), b.expectation(p, {3, 5}), 1e-12);
    }
  }
}

TEST(Qsim, NormAndBounds) {
  Rng rng = make_rng(9);
  for (auto [layout, copies] : {std::pair{Layout::one_qubit, 1}, {Layout::two_qubit, 1}, {Layout::two_qubit, 4}}) {
    const Circuit c(spec(layout, 3, copies));
    for (int k = 0; k < 20; ++k) {
      const auto p = random_params(c, rng);
      const CircuitInput in{double(k % 7 - 3), double(k)};
      EXPECT_NEAR(norm2(c.run(p, in)), 1.0, 1e-12);
      EXPECT_LE(std::abs(c.raw_expectation(p, in)), 1.0 + 1e-12);
    }
  }
}

TEST(Qsim, ParameterCounts) {
  EXPECT_EQ(Circuit(spec(Layout::one_qubit, 3)).n_params(), 19u);
  EXPECT_EQ(Circuit(spec(Layout::two_qubit, 3)).n_params(), 19u);
  EXPECT_EQ(Circuit(spec(Layout::two_qubit, 3, 4)).n_qubits(), 8);
  auto s = spec(Layout::two_qubit, 2);
  s.toggles.rz = false;
  s.toggles.output_scaling = false;
  EXPECT_EQ(Circuit(s).n_params(), 4u + 4u);
  CircuitSpec bad = spec(Layout::two_qubit, 1, 7);
  EXPECT_THROW(Circuit{bad}, std::invalid_argument);
}

TEST(Qsim, ShapeMismatch) {
  const Circuit c(spec(Layout::two_qubit, 2));
  auto p = c.zero_params();
  p.phi.pop_back();
  EXPECT_THROW(c.expectation(p, {0, 0}), std::invalid_argument);
}

TEST(Qsim, GradientExamples) {
  // d cos(x lambda) / d lambda = -x sin(x lambda) = -1 at x = 1, lambda = pi/2
  auto s = spec(Layout::one_qubit, 1);
  s.toggles.ry = s.toggles.rz = false;
  s.toggles.output_scaling = false;
  s.encoding = Encoding::raw;
  const Circuit c(s);
  auto p = c.zero_params();
  p.lambda[0] = kPi / 2;  // x gate
  const auto g = c.gradient(p, {1.0, 0.0});
  EXPECT_NEAR(g.grad.lambda[0], -1.0, 1e-12);

  // the trailing Rz cannot change <Z>
  const Circuit full(spec(Layout::one_qubit, 2));
  Rng rng = make_rng(1);
  const auto q = random_params(full, rng);
  const auto gq = full.gradient(q, {2, 3});
  EXPECT_NEAR(gq.grad.phi.back(), 0.0, 1e-12);
  EXPECT_NEAR(gq.grad.omega[0], full.raw_expectation(q, {2, 3}), 1e-12);
}

TEST(Qsim, GradientMatchesFiniteDifferences) {
  Rng rng = make_rng(2024);
  int draws = 0;
  for (auto [layout, copies] : {std::pair{Layout::one_qubit, 1}, {Layout::two_qubit, 1}, {Layout::two_qubit, 4}})
    for (int layers = 1; layers <= 5; ++layers) {
      const Circuit c(spec(layout, layers, copies));
      const int n = copies == 4 ? 2 : 4;
      for (int k = 0; k < n; ++k, ++draws) check_gradient(c, random_params(c, rng), {double(k - 2), double(3 * k + 1)});
    }
  EXPECT_GE(draws, 50);
}

TEST(Qsim, CoherentError) {
  const Circuit c(spec(Layout::two_qubit, 3));
  Rng rng = make_rng(4);
  for (double v : sample_coherent_error(c, {0.0, 0.1}, rng)) EXPECT_EQ(v, 0.0);
  for (double v : sample_coherent_error(c, {1.0, 0.0}, rng)) EXPECT_EQ(v, 0.0);
  const auto p = random_params(c, rng);
  int perturbed = 0;
  for (int k = 0; k < 50; ++k) {
    const auto off = sample_coherent_error(c, {0.2, 0.1}, rng);
    ASSERT_EQ(off.size(), c.n_encoding_gates());
    for (double v : off) perturbed += v != 0.0;
    const double e = c.raw_expectation(p, {1, 2, off});
    EXPECT_LE(std::abs(e), 1.0 + 1e-12);
  }
  EXPECT_GT(perturbed, 0);
  EXPECT_LT(perturbed, 50 * 6);
}
