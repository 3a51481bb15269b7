#pragma once

// Truncated Fourier series of circuit expectation values in the encoded
// inputs (x', t'), and classical surrogate policies fitted to P_W.

#include <complex>
#include <string>
#include <vector>

#include "raretraj/oracle.hpp"
#include "raretraj/qsim.hpp"

namespace raretraj {

/// sum_{|n_x| <= N_x, |n_t| <= N_t} c_{n_x n_t} exp(i (n_x x + n_t t))
class FourierSeries {
 public:
  FourierSeries() = default;
  FourierSeries(int nx_max, int nt_max);

  int nx_max() const { return nx_max_; }
  int nt_max() const { return nt_max_; }
  std::complex<double>& at(int nx, int nt);
  std::complex<double> at(int nx, int nt) const;
  /// Zero outside the stored range.
  std::complex<double> coeff(int nx, int nt) const;

  std::complex<double> eval_complex(double x, double t) const;
  /// Real part; the imaginary part vanishes when the reality condition holds.
  double eval(double x, double t) const { return eval_complex(x, t).real(); }
  /// max |c_{-n} - conj(c_n)|
  double reality_defect() const;

 private:
  int nx_max_ = 0;
  int nt_max_ = 0;
  std::vector<std::complex<double>> c_;
};

struct CosineTerm {
  int nx = 0;
  int nt = 0;
  double amplitude = 0.0;
  double phase = 0.0;  // [0, 2 pi)
};

/// sum_k a_k cos(n_x x + n_t t + phi_k)
struct CosineForm {
  std::vector<CosineTerm> terms;

  double eval(double x, double t) const;
  static CosineForm from_series(const FourierSeries& series, double drop_below = 0.0);
  /// n_x in [0, N_x], n_t in [0, N_t], all amplitudes zero.
  static CosineForm quadrant(int nx_max, int nt_max);
};

double wrap_phase(double phi);

/// Non-zero one-layer coefficients. One qubit: thetas = (Ry, Rz after the
/// t encoding, Ry after the x encoding). Two qubits: thetas = (Ry on wire 0, Ry on wire 1).
FourierSeries closed_form_coeffs_one_layer(int qubits, const std::vector<double>& thetas);

/// Samples the unscaled expectation on a (2N+1)^2 grid over [0, 2 pi)^2 and
/// takes its 2D DFT. The circuit must use raw encoding (angle = input).
FourierSeries extract_coeffs_fft(const Circuit& circuit, const ParameterSet& params, int n_max);

struct SurrogateParams {
  CosineForm form;
  double lambda_x = 1.0;
  double lambda_t = 1.0;
  double omega = 1.0;  // omega' = 2 beta omega of the matching circuit
};

/// 1 / (exp(omega' f(arctan(x lambda_x), arctan(t lambda_t))) + 1)
double surrogate_policy(const SurrogateParams& sp, int x, int t);

enum class FitLoss { mse, mc_kl };
enum class FitGradient { numeric, analytic };

struct FitConfig {
  int qubits = 1;
  int layers = 1;
  int restarts = 100;
  FitLoss loss = FitLoss::mse;
  FitGradient gradient = FitGradient::numeric;  // forward differences, step sqrt(eps) max(1, |p|)
  int mc_samples = 10000;     // MC-KL loss
  int rwb_samples = 100000;   // rwb_prob of the best fit
  std::uint64_t seed = 0;
  int threads = 0;
  int max_iter = 0;           // 0: minimiser default

  void validate() const;
};

struct FitResult {
  SurrogateParams best;
  double loss = 0.0;
  double mse = 0.0;
  double kl = 0.0;
  double rwb_prob = 0.0;
  std::vector<double> restart_losses;
  int failed_restarts = 0;
  std::size_t n_params = 0;

  double mean_loss() const;
  double std_loss() const;
};

/// Loss of a surrogate: mean squared deviation from P_W over reachable cells (t < T).
double surrogate_mse(const SurrogateParams& sp, const ReweightedTables& tables);

FitResult fit_surrogate(const WalkConfig& cfg, const ReweightedTables& tables, const FitConfig& fit);

}  // namespace raretraj
