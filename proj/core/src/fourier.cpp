#include "raretraj/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "raretraj/minimize.hpp"
#include "raretraj/model.hpp"
#include "raretraj/parallel.hpp"

namespace raretraj {

namespace {

using cd = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

// Fit parameter vector: [lambda_x, lambda_t, omega', amplitudes..., phases...].
class SurrogateModel {
 public:
  SurrogateModel(int qubits, int layers) {
    if (layers == 1 && qubits == 1) {
      // exact one-layer support of the single-qubit circuit
      for (auto f : {std::array<int, 2>{1, -1}, {0, 1}, {1, 1}}) add(f, n_amp_++, n_phase_++, 1.0);
    } else if (layers == 1 && qubits == 2) {
      // a cos x' cos t' = a/2 [cos(x' + t') + cos(x' - t')]
      add({1, 1}, 0, -1, 0.5);
      add({1, -1}, 0, -1, 0.5);
      n_amp_ = 1;
    } else {
      for (int i = 0; i <= layers; ++i)
        for (int j = 0; j <= layers; ++j) add({i, j}, n_amp_++, n_phase_++, 1.0);
    }
  }

  std::size_t size() const { return 3 + n_amp_ + n_phase_; }

  std::vector<double> init(Rng& rng) const {
    std::vector<double> p(size());
    for (std::size_t i = 0; i < 3 + n_amp_; ++i) p[i] = normal(rng);
    for (std::size_t i = 3 + n_amp_; i < p.size(); ++i) p[i] = uniform(rng, 0.0, kTwoPi);
    return p;
  }

  double amp(std::span<const double> p, std::size_t k) const { return factor_[k] * p[3 + static_cast<std::size_t>(amp_[k])]; }
  double phase(std::span<const double> p, std::size_t k) const {
    return phase_[k] < 0 ? 0.0 : p[3 + n_amp_ + static_cast<std::size_t>(phase_[k])];
  }

  // Per-evaluation cache of exp(i phi_k); the trig calls then happen once per
  // term rather than once per (term, cell).
  std::vector<cd> phase_factors(std::span<const double> p) const {
    std::vector<cd> e(freq_.size());
    for (std::size_t k = 0; k < freq_.size(); ++k) e[k] = std::polar(1.0, phase(p, k));
    return e;
  }

  // O = omega' f(x', t')
  double logit(std::span<const double> p, const std::vector<cd>& eph, int x, int t) const {
    powers(p, x, t);
    double f = 0.0;
    for (std::size_t k = 0; k < freq_.size(); ++k) f += amp(p, k) * (mode(k) * eph[k]).real();
    return p[2] * f;
  }

  // grad += g_o * dO/dp
  void backprop(std::span<const double> p, const std::vector<cd>& eph, int x, int t, double g_o, std::span<double> grad) const {
    const double lx = x * p[0];
    const double lt = t * p[1];
    powers(p, x, t);
    const double w = p[2];
    double f = 0.0, dfdx = 0.0, dfdt = 0.0;
    for (std::size_t k = 0; k < freq_.size(); ++k) {
      const cd z = mode(k) * eph[k];
      const double c = z.real();
      const double s = z.imag();
      const double a = amp(p, k);
      f += a * c;
      dfdx -= a * s * freq_[k][0];
      dfdt -= a * s * freq_[k][1];
      grad[3 + static_cast<std::size_t>(amp_[k])] += g_o * w * factor_[k] * c;
      if (phase_[k] >= 0) grad[3 + n_amp_ + static_cast<std::size_t>(phase_[k])] -= g_o * w * a * s;
    }
    grad[0] += g_o * w * dfdx * x / (1.0 + lx * lx);
    grad[1] += g_o * w * dfdt * t / (1.0 + lt * lt);
    grad[2] += g_o * f;
  }

  // Forward-difference MSE gradient. A shift of one amplitude or phase moves a
  // single term, so each component costs O(cells) instead of a full re-evaluation.
  double mse_forward_difference(const std::vector<double>& targets, const std::vector<std::array<int, 2>>& xt,
                                std::span<const double> p, std::span<double> grad) const {
    static const double rel = std::sqrt(std::numeric_limits<double>::epsilon());
    const std::size_t nc = xt.size();
    const std::size_t nk = freq_.size();
    const double inv = 1.0 / static_cast<double>(nc);
    auto eph = phase_factors(p);
    zs_.resize(nc * nk);
    fs_.resize(nc);
    double f0 = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      powers(p, xt[c][0], xt[c][1]);
      double f = 0.0;
      for (std::size_t k = 0; k < nk; ++k) {
        zs_[c * nk + k] = mode(k) * eph[k];
        f += amp(p, k) * zs_[c * nk + k].real();
      }
      fs_[c] = f;
      const double r = sigmoid(-p[2] * f) - targets[c];
      f0 += r * r;
    }
    f0 *= inv;
    if (grad.empty()) return f0;

    auto step = [&](double v) {
      const double h = rel * std::max(1.0, std::abs(v)) * (v >= 0.0 ? 1.0 : -1.0);
      return (v + h) - v;
    };
    auto loss_with = [&](auto&& f_of_cell, double w) {
      double l = 0.0;
      for (std::size_t c = 0; c < nc; ++c) {
        const double r = sigmoid(-w * f_of_cell(c)) - targets[c];
        l += r * r;
      }
      return l * inv;
    };
    std::vector<double> q(p.begin(), p.end());
    for (std::size_t i = 0; i < 2; ++i) {
      const double h = step(p[i]);
      q[i] = p[i] + h;
      double l = 0.0;
      for (std::size_t c = 0; c < nc; ++c) {
        const double r = sigmoid(-logit(q, eph, xt[c][0], xt[c][1])) - targets[c];
        l += r * r;
      }
      grad[i] = (l * inv - f0) / h;
      q[i] = p[i];
    }
    {
      const double h = step(p[2]);
      grad[2] = (loss_with([&](std::size_t c) { return fs_[c]; }, p[2] + h) - f0) / h;
    }
    for (std::size_t j = 0; j < n_amp_; ++j) {
      const double h = step(p[3 + j]);
      grad[3 + j] = (loss_with(
                         [&](std::size_t c) {
                           double f = fs_[c];
                           for (std::size_t k = 0; k < nk; ++k)
                             if (static_cast<std::size_t>(amp_[k]) == j) f += factor_[k] * h * zs_[c * nk + k].real();
                           return f;
                         },
                         p[2]) -
                     f0) /
                    h;
    }
    for (std::size_t k = 0; k < nk; ++k) {
      if (phase_[k] < 0) continue;
      const std::size_t i = 3 + n_amp_ + static_cast<std::size_t>(phase_[k]);
      const double h = step(p[i]);
      const cd rot = std::polar(1.0, h);
      const double a = amp(p, k);
      grad[i] = (loss_with(
                     [&](std::size_t c) {
                       const cd z = zs_[c * nk + k];
                       return fs_[c] + a * ((z * rot).real() - z.real());
                     },
                     p[2]) -
                 f0) /
                h;
    }
    return f0;
  }

  SurrogateParams to_params(std::span<const double> p) const {
    SurrogateParams sp;
    sp.lambda_x = p[0];
    sp.lambda_t = p[1];
    sp.omega = p[2];
    for (std::size_t k = 0; k < freq_.size(); ++k) {
      double a = amp(p, k);
      double ph = phase(p, k);
      if (a < 0.0) {
        a = -a;
        ph += std::numbers::pi;
      }
      sp.form.terms.push_back({freq_[k][0], freq_[k][1], a, wrap_phase(ph)});
    }
    return sp;
  }

 private:
  void add(std::array<int, 2> f, int amp, int phase, double factor) {
    max_freq_ = std::max({max_freq_, std::abs(f[0]), std::abs(f[1])});
    px_.assign(static_cast<std::size_t>(max_freq_) + 1, 0.0);
    pt_.assign(px_.size(), 0.0);
    freq_.push_back(f);
    amp_.push_back(amp);
    phase_.push_back(phase);
    factor_.push_back(factor);
  }

  // fills px_[n] = exp(i n x'), pt_[n] = exp(i n t')
  void powers(std::span<const double> p, int x, int t) const {
    const cd ex = std::polar(1.0, std::atan(x * p[0]));
    const cd et = std::polar(1.0, std::atan(t * p[1]));
    px_[0] = pt_[0] = 1.0;
    for (int n = 1; n <= max_freq_; ++n) {
      px_[static_cast<std::size_t>(n)] = px_[static_cast<std::size_t>(n) - 1] * ex;
      pt_[static_cast<std::size_t>(n)] = pt_[static_cast<std::size_t>(n) - 1] * et;
    }
  }

  cd mode(std::size_t k) const {
    const int nx = freq_[k][0];
    const int nt = freq_[k][1];
    const cd zx = nx >= 0 ? px_[static_cast<std::size_t>(nx)] : std::conj(px_[static_cast<std::size_t>(-nx)]);
    const cd zt = nt >= 0 ? pt_[static_cast<std::size_t>(nt)] : std::conj(pt_[static_cast<std::size_t>(-nt)]);
    return zx * zt;
  }

  std::vector<std::array<int, 2>> freq_;
  std::vector<int> amp_;
  std::vector<int> phase_;
  std::vector<double> factor_;
  std::size_t n_amp_ = 0;
  std::size_t n_phase_ = 0;
  int max_freq_ = 0;
  mutable std::vector<cd> px_, pt_;
  mutable std::vector<cd> zs_;
  mutable std::vector<double> fs_;
};

struct Cell {
  int x;
  int t;
  double target;
};

std::vector<Cell> reachable_cells(const ReweightedTables& tables) {
  std::vector<Cell> cells;
  for (int t = 0; t < tables.horizon; ++t)
    for (int x = -t; x <= t; x += 2) cells.push_back({x, t, tables.p_down(x, t)});
  return cells;
}

double mse_objective(const SurrogateModel& model, const std::vector<Cell>& cells, std::span<const double> p,
                     std::span<double> grad) {
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  const double inv = 1.0 / static_cast<double>(cells.size());
  const auto eph = model.phase_factors(p);
  double loss = 0.0;
  for (const auto& c : cells) {
    const double o = model.logit(p, eph, c.x, c.t);
    const double pd = sigmoid(-o);
    const double r = pd - c.target;
    loss += r * r;
    if (!grad.empty()) model.backprop(p, eph, c.x, c.t, 2.0 * r * inv * (-pd * (1.0 - pd)), grad);
  }
  return loss * inv;
}

// Negative mean return over paths driven by fixed uniforms (common random
// numbers); the gradient is the almost-everywhere derivative along fixed paths.
double mc_kl_objective(const SurrogateModel& model, const WalkConfig& cfg, const std::vector<double>& uniforms, int n,
                       std::span<const double> p, std::span<double> grad) {
  const int T = cfg.horizon;
  const std::size_t stride = static_cast<std::size_t>(2 * T + 1);
  std::vector<double> o_cell(stride * static_cast<std::size_t>(T), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> w_cell(o_cell.size(), 0.0);
  const auto eph = model.phase_factors(p);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    int x = 0;
    double neg_r = 0.0;
    for (int t = 0; t < T; ++t) {
      const std::size_t idx = static_cast<std::size_t>(t) * stride + static_cast<std::size_t>(x + T);
      if (std::isnan(o_cell[idx])) o_cell[idx] = model.logit(p, eph, x, t);
      const double o = o_cell[idx];
      const double pd = sigmoid(-o);
      const bool down = uniforms[static_cast<std::size_t>(i) * T + t] < pd;
      const int xn = down ? x - 1 : x + 1;
      // d ln pi / dO: -p_up for down, p_down for up
      w_cell[idx] += down ? -(1.0 - pd) : pd;
      neg_r += (down ? log_sigmoid(-o) : log_sigmoid(o)) - log_step_prob(cfg, x, xn);
      x = xn;
    }
    neg_r -= log_weight(cfg, x, T);
    total += neg_r;
  }
  const double inv = 1.0 / n;
  if (!grad.empty()) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int t = 0; t < T; ++t)
      for (int x = -t; x <= t; x += 2) {
        const std::size_t idx = static_cast<std::size_t>(t) * stride + static_cast<std::size_t>(x + T);
        if (w_cell[idx] != 0.0) model.backprop(p, eph, x, t, w_cell[idx] * inv, grad);
      }
  }
  return total * inv;
}

}  // namespace

FourierSeries::FourierSeries(int nx_max, int nt_max)
    : nx_max_(nx_max), nt_max_(nt_max), c_(static_cast<std::size_t>(2 * nx_max + 1) * (2 * nt_max + 1), 0.0) {
  if (nx_max < 0 || nt_max < 0) throw std::invalid_argument("FourierSeries: negative frequency bound");
}

cd& FourierSeries::at(int nx, int nt) {
  if (std::abs(nx) > nx_max_ || std::abs(nt) > nt_max_) throw std::out_of_range("Fourier index outside the series");
  return c_[static_cast<std::size_t>(nx + nx_max_) * (2 * nt_max_ + 1) + static_cast<std::size_t>(nt + nt_max_)];
}

cd FourierSeries::at(int nx, int nt) const { return const_cast<FourierSeries*>(this)->at(nx, nt); }

cd FourierSeries::coeff(int nx, int nt) const {
  if (std::abs(nx) > nx_max_ || std::abs(nt) > nt_max_) return 0.0;
  return at(nx, nt);
}

cd FourierSeries::eval_complex(double x, double t) const {
  cd acc = 0.0;
  for (int nx = -nx_max_; nx <= nx_max_; ++nx)
    for (int nt = -nt_max_; nt <= nt_max_; ++nt) acc += at(nx, nt) * std::polar(1.0, nx * x + nt * t);
  return acc;
}

double FourierSeries::reality_defect() const {
  double d = 0.0;
  for (int nx = -nx_max_; nx <= nx_max_; ++nx)
    for (int nt = -nt_max_; nt <= nt_max_; ++nt) d = std::max(d, std::abs(at(-nx, -nt) - std::conj(at(nx, nt))));
  return d;
}

double wrap_phase(double phi) {
  double r = std::fmod(phi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r >= kTwoPi ? 0.0 : r;
}

double CosineForm::eval(double x, double t) const {
  double acc = 0.0;
  for (const auto& k : terms) acc += k.amplitude * std::cos(k.nx * x + k.nt * t + k.phase);
  return acc;
}

CosineForm CosineForm::from_series(const FourierSeries& series, double drop_below) {
  CosineForm form;
  for (int nx = 0; nx <= series.nx_max(); ++nx) {
    for (int nt = -series.nt_max(); nt <= series.nt_max(); ++nt) {
      if (nx == 0 && nt < 0) continue;
      const cd c = series.at(nx, nt);
      // c e^{i a} + conj(c) e^{-i a} = 2|c| cos(a + arg c); the constant term stands alone
      const double a = (nx == 0 && nt == 0) ? std::abs(c.real()) : 2.0 * std::abs(c);
      if (a <= drop_below) continue;
      const double ph = (nx == 0 && nt == 0) ? (c.real() < 0.0 ? std::numbers::pi : 0.0) : std::arg(c);
      form.terms.push_back({nx, nt, a, wrap_phase(ph)});
    }
  }
  return form;
}

CosineForm CosineForm::quadrant(int nx_max, int nt_max) {
  CosineForm form;
  for (int i = 0; i <= nx_max; ++i)
    for (int j = 0; j <= nt_max; ++j) form.terms.push_back({i, j, 0.0, 0.0});
  return form;
}

FourierSeries closed_form_coeffs_one_layer(int qubits, const std::vector<double>& thetas) {
  FourierSeries s(1, 1);
  if (qubits == 1) {
    if (thetas.size() != 3) throw std::invalid_argument("one-qubit closed form needs 3 angles");
    const double c1 = std::cos(thetas[0]), s1 = std::sin(thetas[0]);
    const double c2 = std::cos(thetas[1]), s2 = std::sin(thetas[1]);
    const double c3 = std::cos(thetas[2]), s3 = std::sin(thetas[2]);
    const cd i(0.0, 1.0);
    s.at(1, -1) = 0.25 * (c1 - c2 - i * s1 * s2) * c3;
    s.at(0, -1) = 0.5 * i * (-s2 + i * s1 * c2) * s3;
    s.at(-1, -1) = 0.25 * (c1 + c2 + i * s1 * s2) * c3;
    for (auto [nx, nt] : {std::pair{1, -1}, {0, -1}, {-1, -1}}) s.at(-nx, -nt) = std::conj(s.at(nx, nt));
  } else if (qubits == 2) {
    if (thetas.size() != 2) throw std::invalid_argument("two-qubit closed form needs 2 angles");
    const double c = 0.25 * std::cos(thetas[0]) * std::cos(thetas[1]);
    for (int nx : {-1, 1})
      for (int nt : {-1, 1}) s.at(nx, nt) = c;
  } else {
    throw std::invalid_argument("closed-form coefficients exist for 1 or 2 qubits only, got " + std::to_string(qubits));
  }
  return s;
}

FourierSeries extract_coeffs_fft(const Circuit& circuit, const ParameterSet& params, int n_max) {
  if (n_max < 0) throw std::invalid_argument("extract_coeffs_fft: n_max must be >= 0");
  if (circuit.spec().encoding != Encoding::raw || circuit.spec().toggles.input_scaling)
    throw std::invalid_argument("extract_coeffs_fft needs raw encoding without input scaling");
  const int m = 2 * n_max + 1;
  const std::size_t cells = static_cast<std::size_t>(m) * m;

  fftw_complex* in = fftw_alloc_complex(cells);
  fftw_complex* out = fftw_alloc_complex(cells);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(m, m, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      const double x = kTwoPi * j / m;
      const double t = kTwoPi * k / m;
      const std::size_t idx = static_cast<std::size_t>(j) * m + static_cast<std::size_t>(k);
      in[idx][0] = circuit.raw_expectation(params, {x, t, {}});
      in[idx][1] = 0.0;
    }
  }
  fftw_execute(plan);

  FourierSeries s(n_max, n_max);
  const double norm = 1.0 / static_cast<double>(cells);
  for (int nx = -n_max; nx <= n_max; ++nx) {
    for (int nt = -n_max; nt <= n_max; ++nt) {
      const std::size_t idx = static_cast<std::size_t>((nx + m) % m) * m + static_cast<std::size_t>((nt + m) % m);
      s.at(nx, nt) = cd(out[idx][0], out[idx][1]) * norm;
    }
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return s;
}

double surrogate_policy(const SurrogateParams& sp, int x, int t) {
  const double o = sp.omega * sp.form.eval(std::atan(x * sp.lambda_x), std::atan(t * sp.lambda_t));
  return sigmoid(-o);
}

void FitConfig::validate() const {
  if (qubits != 1 && qubits != 2) throw std::invalid_argument("fit.qubits must be 1 or 2");
  if (layers < 1) throw std::invalid_argument("fit.layers must be >= 1");
  if (restarts < 1) throw std::invalid_argument("fit.restarts must be >= 1");
  if (mc_samples < 1) throw std::invalid_argument("fit.mc_samples must be >= 1");
  if (rwb_samples < 1) throw std::invalid_argument("fit.rwb_samples must be >= 1");
}

double FitResult::mean_loss() const {
  if (restart_losses.empty()) return 0.0;
  return std::accumulate(restart_losses.begin(), restart_losses.end(), 0.0) / static_cast<double>(restart_losses.size());
}

double FitResult::std_loss() const {
  if (restart_losses.empty()) return 0.0;
  const double mu = mean_loss();
  double acc = 0.0;
  for (double v : restart_losses) acc += (v - mu) * (v - mu);
  return std::sqrt(acc / static_cast<double>(restart_losses.size()));
}

double surrogate_mse(const SurrogateParams& sp, const ReweightedTables& tables) {
  return policy_mse([&sp](int x, int t) { return surrogate_policy(sp, x, t); }, tables);
}

FitResult fit_surrogate(const WalkConfig& cfg, const ReweightedTables& tables, const FitConfig& fit) {
  fit.validate();
  if (tables.horizon != cfg.horizon) throw std::invalid_argument("fit_surrogate: horizon mismatch");
  const SurrogateModel model(fit.qubits, fit.layers);
  const auto cells = reachable_cells(tables);
  std::vector<double> targets;
  std::vector<std::array<int, 2>> xt;
  for (const auto& c : cells) {
    targets.push_back(c.target);
    xt.push_back({c.x, c.t});
  }

  std::vector<double> uniforms;
  if (fit.loss == FitLoss::mc_kl) {
    Rng crn = make_rng(fit.seed, 0xC0FFEEu);
    uniforms.resize(static_cast<std::size_t>(fit.mc_samples) * cfg.horizon);
    for (auto& u : uniforms) u = uniform01(crn);
  }
  std::vector<MinimizeResult> runs(static_cast<std::size_t>(fit.restarts));
  std::vector<char> ok(runs.size(), 0);
  MinimizeOptions opts;
  opts.max_iter = fit.max_iter;
  parallel_for(fit.restarts, fit.threads > 0 ? fit.threads : default_threads(), [&](int r) {
    // each worker owns its model: the model keeps per-cell scratch buffers
    const SurrogateModel local(fit.qubits, fit.layers);
    Objective objective;
    if (fit.loss == FitLoss::mse && fit.gradient == FitGradient::numeric) {
      objective = [&](std::span<const double> p, std::span<double> grad) {
        return local.mse_forward_difference(targets, xt, p, grad);
      };
    } else {
      objective = [&](std::span<const double> p, std::span<double> grad) {
        return fit.loss == FitLoss::mse ? mse_objective(local, cells, p, grad)
                                        : mc_kl_objective(local, cfg, uniforms, fit.mc_samples, p, grad);
      };
      if (fit.gradient == FitGradient::numeric) objective = with_forward_difference(std::move(objective));
    }
    Rng rng = make_rng(fit.seed, static_cast<std::uint64_t>(r));
    auto res = minimize_bfgs(objective, local.init(rng), opts);
    ok[static_cast<std::size_t>(r)] = std::isfinite(res.f);
    runs[static_cast<std::size_t>(r)] = std::move(res);
  });

  FitResult out;
  out.n_params = model.size();
  std::size_t best = runs.size();
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (!ok[r]) {
      ++out.failed_restarts;
      continue;
    }
    out.restart_losses.push_back(runs[r].f);
    if (best == runs.size() || runs[r].f < runs[best].f) best = r;
  }
  if (best == runs.size()) throw std::runtime_error("fit_surrogate: every restart failed");

  out.best = model.to_params(runs[best].x);
  out.loss = runs[best].f;
  const SurrogateParams& sp = out.best;
  const MarkovPolicy pol = [&sp](int x, int t) { return surrogate_policy(sp, x, t); };
  out.mse = policy_mse(pol, tables);
  out.kl = exact_kl(cfg, pol, tables);
  const CellTable table = tabulate(pol, cfg.horizon);
  const MarkovPolicy frozen = [&table](int x, int t) { return table(x, t); };
  Rng rng = make_rng(fit.seed, static_cast<std::uint64_t>(fit.restarts) + 1);
  int bridges = 0;
  for (int i = 0; i < fit.rwb_samples; ++i) bridges += sample_markov(frozen, cfg.horizon, rng).is_bridge();
  out.rwb_prob = static_cast<double>(bridges) / fit.rwb_samples;
  return out;
}

}  // namespace raretraj
