#pragma once

// Dense statevector simulation of data re-uploading circuits: Rx encoding of
// (x, t), Ry/Rz variational rotations, CZ entanglers, Z-product readout.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "raretraj/random.hpp"

namespace raretraj {

enum class Layout { one_qubit, two_qubit };
enum class Encoding { arctan, raw };

struct GateToggles {
  bool rx_encoding = true;
  bool ry = true;
  bool rz = true;
  bool cz = true;
  bool cz_last_layer = true;  // only consulted when cz is on
  bool input_scaling = true;
  bool output_scaling = true;
};

struct CircuitSpec {
  Layout layout = Layout::two_qubit;
  int n_layers = 3;
  int copies = 1;  // two-qubit layout only
  bool ring = true;  // CZ ring across copy boundaries
  Encoding encoding = Encoding::arctan;
  GateToggles toggles;

  int n_qubits() const { return layout == Layout::one_qubit ? 1 : 2 * copies; }
  void validate() const;
};

constexpr int kMaxQubits = 12;

/// Trainable parameters. lambda holds one entry per encoding gate ordered by
/// layer then wire; on the single-qubit layout each layer stores (x, t).
struct ParameterSet {
  std::vector<double> phi;
  std::vector<double> lambda;
  std::vector<double> omega;  // empty when output scaling is off

  std::size_t size() const { return phi.size() + lambda.size() + omega.size(); }
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  bool all_finite() const;
};

/// 0 = phi, 1 = lambda, 2 = omega, in flatten() order.
enum class ParamClass : int { phi = 0, lambda = 1, omega = 2 };

using StateVector = std::vector<std::complex<double>>;

/// Z on every wire in `support`.
struct Observable {
  std::vector<int> support;
  static Observable all(int n_qubits);
};

double encode_input(double value, double lambda);
double expectation(const StateVector& state, const Observable& obs);

struct CircuitInput {
  double x = 0.0;
  double t = 0.0;
  std::span<const double> offsets = {};  // additive encoding-angle errors, one per encoding gate
};

struct CircuitGradient {
  double value = 0.0;  // omega-scaled
  double raw = 0.0;    // unscaled <O>
  ParameterSet grad;
};

struct CoherentErrorConfig {
  double rate = 0.0;   // probability per encoding gate
  double sigma = 0.1;  // angle std
};

class Circuit {
 public:
  explicit Circuit(CircuitSpec spec);

  const CircuitSpec& spec() const { return spec_; }
  int n_qubits() const { return spec_.n_qubits(); }
  std::size_t n_phi() const { return n_phi_; }
  std::size_t n_encoding_gates() const { return n_enc_; }
  std::size_t n_lambda() const { return spec_.toggles.input_scaling ? n_enc_ : 0; }
  std::size_t n_omega() const { return spec_.toggles.output_scaling ? 1 : 0; }
  std::size_t n_params() const { return n_phi() + n_lambda() + n_omega(); }
  std::vector<ParamClass> param_classes() const;

  /// phi ~ U[0, 2 pi), lambda = 1, omega = 1.
  ParameterSet init_params(Rng& rng) const;
  ParameterSet zero_params() const;
  void check_shape(const ParameterSet& params) const;

  StateVector run(const ParameterSet& params, const CircuitInput& in) const;
  double raw_expectation(const ParameterSet& params, const CircuitInput& in) const;
  double expectation(const ParameterSet& params, const CircuitInput& in) const;
  /// Parameter-shift for every rotation angle, chain rule into lambda.
  CircuitGradient gradient(const ParameterSet& params, const CircuitInput& in) const;

 private:
  enum class Kind { rx, ry, rz, cz };
  struct Op {
    Kind kind;
    int q0;
    int q1;
    int phi_index;   // -1 unless variational
    int enc_index;   // -1 unless encoding
    bool enc_is_x;
  };

  std::vector<double> angles(const ParameterSet& params, const CircuitInput& in) const;
  void apply(StateVector& psi, const Op& op, double angle) const;
  double readout(const StateVector& psi) const;

  CircuitSpec spec_;
  std::vector<Op> ops_;
  std::size_t n_phi_ = 0;
  std::size_t n_enc_ = 0;
  unsigned parity_mask_ = 0;
};

/// Draws one set of encoding-angle offsets: with probability `rate` each gate
/// gets N(0, sigma), otherwise 0.
std::vector<double> sample_coherent_error(const Circuit& circuit, const CoherentErrorConfig& cfg, Rng& rng);

}  // namespace raretraj
