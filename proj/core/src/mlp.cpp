#include "raretraj/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace raretraj {

namespace {

double act(Activation a, double v) { return a == Activation::relu ? (v > 0.0 ? v : 0.0) : std::sin(v); }
double act_deriv(Activation a, double v) { return a == Activation::relu ? (v > 0.0 ? 1.0 : 0.0) : std::cos(v); }

// y = W v + b, W row-major (rows x cols)
void affine(const double* w, const double* b, std::span<const double> v, std::span<double> y) {
  const std::size_t cols = v.size();
  for (std::size_t r = 0; r < y.size(); ++r) {
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += w[r * cols + c] * v[c];
    y[r] = acc;
  }
}

}  // namespace

std::size_t MlpSpec::param_count() const {
  const std::size_t in = static_cast<std::size_t>(in_dim());
  const std::size_t a = static_cast<std::size_t>(n1);
  const std::size_t b = static_cast<std::size_t>(n2);
  const std::size_t o = static_cast<std::size_t>(out_dim());
  return in * a + a + a * b + b + o * b + o;
}

void MlpSpec::validate() const {
  if (n1 < 1 || n2 < 1)
    throw std::invalid_argument("nn.hidden widths must be >= 1, got (" + std::to_string(n1) + ", " + std::to_string(n2) + ")");
}

std::vector<double> fourier_feature_map(std::span<const std::array<double, 2>> b, double x, double t) {
  std::vector<double> f(2 * b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double arg = b[i][0] * x + b[i][1] * t;
    f[i] = std::cos(arg);
    f[b.size() + i] = std::sin(arg);
  }
  return f;
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)), params_(spec_.param_count(), 0.0) { spec_.validate(); }

void Mlp::init(Rng& rng) {
  const int in = spec_.in_dim();
  const int sizes[3][2] = {{spec_.n1, in}, {spec_.n2, spec_.n1}, {spec_.out_dim(), spec_.n2}};
  std::size_t k = 0;
  for (const auto& s : sizes) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s[1]));
    for (int i = 0; i < s[0] * s[1] + s[0]; ++i) params_[k++] = uniform(rng, -bound, bound);
  }
}

std::vector<double> Mlp::input(double x, double t) const {
  if (spec_.fourier_b.empty()) return {x, t};
  return fourier_feature_map(spec_.fourier_b, x, t);
}

std::vector<double> Mlp::forward(double x, double t) const {
  std::vector<double> grad;
  return backward(x, t, {}, grad);
}

std::vector<double> Mlp::backward(double x, double t, std::span<const double> upstream, std::span<double> grad) const {
  const auto in = input(x, t);
  const std::size_t n_in = in.size();
  const auto n1 = static_cast<std::size_t>(spec_.n1);
  const auto n2 = static_cast<std::size_t>(spec_.n2);
  const auto no = static_cast<std::size_t>(spec_.out_dim());
  const double* p = params_.data();
  const double* w1 = p;
  const double* b1 = w1 + n1 * n_in;
  const double* w2 = b1 + n1;
  const double* b2 = w2 + n2 * n1;
  const double* w3 = b2 + n2;
  const double* b3 = w3 + no * n2;

  std::vector<double> z1(n1), h1(n1), z2(n2), h2(n2), out(no);
  affine(w1, b1, in, z1);
  for (std::size_t i = 0; i < n1; ++i) h1[i] = act(spec_.activation, z1[i]);
  affine(w2, b2, h1, z2);
  for (std::size_t i = 0; i < n2; ++i) h2[i] = act(spec_.activation, z2[i]);
  affine(w3, b3, h2, out);
  if (upstream.empty()) return out;

  if (upstream.size() != no || grad.size() != params_.size()) throw std::invalid_argument("Mlp::backward: buffer size mismatch");
  double* g = grad.data();
  double* gw1 = g;
  double* gb1 = gw1 + n1 * n_in;
  double* gw2 = gb1 + n1;
  double* gb2 = gw2 + n2 * n1;
  double* gw3 = gb2 + n2;
  double* gb3 = gw3 + no * n2;

  std::vector<double> d2(n2, 0.0), d1(n1, 0.0);
  for (std::size_t o = 0; o < no; ++o) {
    gb3[o] = upstream[o];
    for (std::size_t j = 0; j < n2; ++j) {
      gw3[o * n2 + j] = upstream[o] * h2[j];
      d2[j] += upstream[o] * w3[o * n2 + j];
    }
  }
  for (std::size_t j = 0; j < n2; ++j) {
    d2[j] *= act_deriv(spec_.activation, z2[j]);
    gb2[j] = d2[j];
    for (std::size_t i = 0; i < n1; ++i) {
      gw2[j * n1 + i] = d2[j] * h1[i];
      d1[i] += d2[j] * w2[j * n1 + i];
    }
  }
  for (std::size_t i = 0; i < n1; ++i) {
    d1[i] *= act_deriv(spec_.activation, z1[i]);
    gb1[i] = d1[i];
    for (std::size_t c = 0; c < n_in; ++c) gw1[i * n_in + c] = d1[i] * in[c];
  }
  return out;
}

MlpPolicy::MlpPolicy(Mlp net, double beta) : net_(std::move(net)), beta_(beta) {
  if (net_.spec().head != Head::policy) throw std::invalid_argument("MlpPolicy needs a policy head");
  if (!(beta_ > 0.0)) throw std::invalid_argument("policy beta must be > 0");
}

void MlpPolicy::set_params(std::span<const double> flat) {
  if (flat.size() != n_params()) throw std::invalid_argument("MlpPolicy::set_params: size mismatch");
  net_.params().assign(flat.begin(), flat.end());
}

// outputs are (up, down) logits
double MlpPolicy::logit(int x, int t) const {
  const auto o = net_.forward(x, t);
  return beta_ * (o[0] - o[1]);
}

double MlpPolicy::logit_grad(int x, int t, std::span<double> grad) const {
  const double up[2] = {beta_, -beta_};
  const auto o = net_.backward(x, t, up, grad);
  return beta_ * (o[0] - o[1]);
}

MlpCritic::MlpCritic(Mlp net) : net_(std::move(net)) {
  if (net_.spec().head != Head::critic) throw std::invalid_argument("MlpCritic needs a critic head");
}

void MlpCritic::set_params(std::span<const double> flat) {
  if (flat.size() != n_params()) throw std::invalid_argument("MlpCritic::set_params: size mismatch");
  net_.params().assign(flat.begin(), flat.end());
}

double MlpCritic::value(int x, int t) const { return net_.forward(x, t)[0]; }

double MlpCritic::value_grad(int x, int t, std::span<double> grad) const {
  const double up[1] = {1.0};
  return net_.backward(x, t, up, grad)[0];
}

}  // namespace raretraj
