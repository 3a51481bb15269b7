#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "raretraj/mlp.hpp"

using namespace raretraj;

namespace {

MlpSpec mlp(int n1, int n2, Activation act = Activation::relu, Head head = Head::policy) {
  MlpSpec s;
  s.n1 = n1;
  s.n2 = n2;
  s.activation = act;
  s.head = head;
  return s;
}

}  // namespace

TEST(Mlp, ParameterCounts) {
  EXPECT_EQ(mlp(2, 2).param_count(), 18u);
  EXPECT_EQ(mlp(4, 4).param_count(), 42u);
  EXPECT_EQ(mlp(5, 5).param_count(), 57u);
  EXPECT_EQ(mlp(2, 2, Activation::relu, Head::critic).param_count(), 15u);
  EXPECT_THROW(mlp(0, 2).validate(), std::invalid_argument);
}

TEST(Mlp, ZeroParametersGiveUniformPolicy) {
  MlpPolicy pol(Mlp(mlp(4, 4, Activation::sine)));
  pol.set_params(std::vector<double>(pol.n_params(), 0.0));
  for (int t = 0; t < 6; ++t) EXPECT_DOUBLE_EQ(pol.p_up(t % 3, t), 0.5);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Rng rng = make_rng(12);
  for (auto act : {Activation::relu, Activation::sine})
    for (auto head : {Head::policy, Head::critic}) {
      auto s = mlp(4, 3, act, head);
      if (act == Activation::sine) s.fourier_b = {{1.0, 0.0}, {0.5, -2.0}};
      Mlp net(s);
      net.init(rng);
      const std::vector<double> up = head == Head::policy ? std::vector<double>{0.7, -1.3} : std::vector<double>{1.0};
      for (auto [x, t] : {std::pair{0.3, 1.7}, {-2.2, 4.1}}) {
        std::vector<double> g(net.params().size());
        net.backward(x, t, up, g);
        const double h = 1e-6;
        for (std::size_t i = 0; i < g.size(); ++i) {
          Mlp a = net, b = net;
          a.params()[i] += h;
          b.params()[i] -= h;
          const auto fa = a.forward(x, t), fb = b.forward(x, t);
          double fd = 0.0;
          for (std::size_t o = 0; o < up.size(); ++o) fd += up[o] * (fa[o] - fb[o]) / (2 * h);
          EXPECT_NEAR(g[i], fd, 1e-6);
        }
      }
    }
}

TEST(Mlp, PolicyLogitIsScaledOutputDifference) {
  Rng rng = make_rng(3);
  Mlp net(mlp(2, 2));
  net.init(rng);
  const auto out = net.forward(1, 4);
  const MlpPolicy pol(net, 2.0);
  EXPECT_NEAR(pol.logit(1, 4), 2.0 * (out[0] - out[1]), 1e-14);
  std::vector<double> g(pol.n_params());
  EXPECT_NEAR(pol.logit_grad(1, 4, g), pol.logit(1, 4), 1e-14);
}

TEST(Mlp, FourierFeatures) {
  const std::vector<std::array<double, 2>> zero{{0.0, 0.0}};
  const auto f0 = fourier_feature_map(zero, 5.0, 2.0);
  ASSERT_EQ(f0.size(), 2u);
  EXPECT_DOUBLE_EQ(f0[0], 1.0);
  EXPECT_DOUBLE_EQ(f0[1], 0.0);
  const std::vector<std::array<double, 2>> bx{{1.0, 0.0}};
  const auto f = fourier_feature_map(bx, std::numbers::pi, 3.0);
  EXPECT_NEAR(f[0], -1.0, 1e-15);
  EXPECT_NEAR(f[1], 0.0, 1e-15);

  auto s = mlp(2, 2);
  s.fourier_b = {{1, 0}, {0, 1}, {1, 1}};
  EXPECT_EQ(s.in_dim(), 6);
  EXPECT_EQ(Mlp(s).input(0.0, 0.0).size(), 6u);
}
