#include "raretraj/qsim.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace raretraj {

namespace {

using cd = std::complex<double>;
constexpr double kHalfPi = std::numbers::pi / 2.0;

void apply_1q(StateVector& psi, int q, cd m00, cd m01, cd m10, cd m11) {
  const std::size_t bit = std::size_t{1} << q;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (i & bit) continue;
    const cd a = psi[i];
    const cd b = psi[i | bit];
    psi[i] = m00 * a + m01 * b;
    psi[i | bit] = m10 * a + m11 * b;
  }
}

}  // namespace

void CircuitSpec::validate() const {
  if (n_layers < 1) throw std::invalid_argument("circuit.layers must be >= 1, got " + std::to_string(n_layers));
  if (copies < 1) throw std::invalid_argument("circuit.copies must be >= 1, got " + std::to_string(copies));
  if (layout == Layout::one_qubit && copies != 1)
    throw std::invalid_argument("circuit.copies must be 1 for the one-qubit layout");
  if (n_qubits() > kMaxQubits)
    throw std::invalid_argument("circuit needs " + std::to_string(n_qubits()) + " qubits, limit is " + std::to_string(kMaxQubits));
}

std::vector<double> ParameterSet::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  out.insert(out.end(), phi.begin(), phi.end());
  out.insert(out.end(), lambda.begin(), lambda.end());
  out.insert(out.end(), omega.begin(), omega.end());
  return out;
}

void ParameterSet::assign(std::span<const double> flat) {
  if (flat.size() != size()) throw std::invalid_argument("ParameterSet::assign: size mismatch");
  auto it = flat.begin();
  for (auto& v : phi) v = *it++;
  for (auto& v : lambda) v = *it++;
  for (auto& v : omega) v = *it++;
}

bool ParameterSet::all_finite() const {
  for (const auto* vec : {&phi, &lambda, &omega})
    for (double v : *vec)
      if (!std::isfinite(v)) return false;
  return true;
}

Observable Observable::all(int n_qubits) {
  Observable o;
  for (int q = 0; q < n_qubits; ++q) o.support.push_back(q);
  return o;
}

double encode_input(double value, double lambda) { return std::atan(value * lambda); }

double expectation(const StateVector& state, const Observable& obs) {
  if (obs.support.empty()) throw std::invalid_argument("observable support is empty");
  unsigned mask = 0;
  for (int q : obs.support) {
    if (q < 0 || (std::size_t{1} << q) >= state.size()) throw std::invalid_argument("observable support outside the register");
    mask |= 1u << q;
  }
  double e = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const double p = std::norm(state[i]);
    e += (std::popcount(static_cast<unsigned>(i) & mask) & 1) ? -p : p;
  }
  return e;
}

Circuit::Circuit(CircuitSpec spec) : spec_(spec) {
  spec_.validate();
  const auto& tg = spec_.toggles;
  const int n = spec_.n_qubits();
  int phi = 0;
  int enc = 0;
  auto variational = [&](int q) {
    if (tg.ry) ops_.push_back({Kind::ry, q, -1, phi++, -1, false});
    if (tg.rz) ops_.push_back({Kind::rz, q, -1, phi++, -1, false});
  };
  for (int l = 0; l < spec_.n_layers; ++l) {
    if (spec_.layout == Layout::one_qubit) {
      // t is uploaded before x on the single wire
      if (tg.rx_encoding) ops_.push_back({Kind::rx, 0, -1, -1, 2 * l + 1, false});
      variational(0);
      if (tg.rx_encoding) ops_.push_back({Kind::rx, 0, -1, -1, 2 * l, true});
      variational(0);
      enc += 2;
    } else {
      if (tg.rx_encoding)
        for (int q = 0; q < n; ++q) ops_.push_back({Kind::rx, q, -1, -1, l * n + q, q % 2 == 0});
      enc += n;
      for (int q = 0; q < n; ++q) variational(q);
      const bool last = l == spec_.n_layers - 1;
      if (tg.cz && (!last || tg.cz_last_layer)) {
        for (int c = 0; c < spec_.copies; ++c) ops_.push_back({Kind::cz, 2 * c, 2 * c + 1, -1, -1, false});
        if (spec_.ring && spec_.copies > 1)
          for (int c = 0; c < spec_.copies; ++c) ops_.push_back({Kind::cz, 2 * c + 1, (2 * c + 2) % n, -1, -1, false});
      }
    }
  }
  n_phi_ = static_cast<std::size_t>(phi);
  n_enc_ = tg.rx_encoding ? static_cast<std::size_t>(enc) : 0;
  parity_mask_ = (1u << n) - 1u;
}

std::vector<ParamClass> Circuit::param_classes() const {
  std::vector<ParamClass> out(n_phi(), ParamClass::phi);
  out.insert(out.end(), n_lambda(), ParamClass::lambda);
  out.insert(out.end(), n_omega(), ParamClass::omega);
  return out;
}

ParameterSet Circuit::init_params(Rng& rng) const {
  ParameterSet p = zero_params();
  for (auto& v : p.phi) v = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  return p;
}

ParameterSet Circuit::zero_params() const {
  ParameterSet p;
  p.phi.assign(n_phi(), 0.0);
  p.lambda.assign(n_lambda(), 1.0);
  p.omega.assign(n_omega(), 1.0);
  return p;
}

void Circuit::check_shape(const ParameterSet& params) const {
  if (params.phi.size() != n_phi() || params.lambda.size() != n_lambda() || params.omega.size() != n_omega())
    throw std::invalid_argument("parameter shape (" + std::to_string(params.phi.size()) + ", " +
                                std::to_string(params.lambda.size()) + ", " + std::to_string(params.omega.size()) +
                                ") does not match circuit (" + std::to_string(n_phi()) + ", " +
                                std::to_string(n_lambda()) + ", " + std::to_string(n_omega()) + ")");
}

std::vector<double> Circuit::angles(const ParameterSet& params, const CircuitInput& in) const {
  check_shape(params);
  if (!in.offsets.empty() && in.offsets.size() != n_enc_)
    throw std::invalid_argument("encoding offsets: expected " + std::to_string(n_enc_) + " entries");
  std::vector<double> a(ops_.size(), 0.0);
  for (std::size_t k = 0; k < ops_.size(); ++k) {
    const Op& op = ops_[k];
    if (op.phi_index >= 0) {
      a[k] = params.phi[static_cast<std::size_t>(op.phi_index)];
    } else if (op.enc_index >= 0) {
      const auto e = static_cast<std::size_t>(op.enc_index);
      const double v = op.enc_is_x ? in.x : in.t;
      const double lam = spec_.toggles.input_scaling ? params.lambda[e] : 1.0;
      a[k] = spec_.encoding == Encoding::arctan ? encode_input(v, lam) : v * lam;
      if (!in.offsets.empty()) a[k] += in.offsets[e];
    }
  }
  return a;
}

void Circuit::apply(StateVector& psi, const Op& op, double angle) const {
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  switch (op.kind) {
    case Kind::rx: apply_1q(psi, op.q0, {c, 0}, {0, -s}, {0, -s}, {c, 0}); break;
    case Kind::ry: apply_1q(psi, op.q0, {c, 0}, {-s, 0}, {s, 0}, {c, 0}); break;
    case Kind::rz: apply_1q(psi, op.q0, {c, -s}, {0, 0}, {0, 0}, {c, s}); break;
    case Kind::cz: {
      const std::size_t m = (std::size_t{1} << op.q0) | (std::size_t{1} << op.q1);
      for (std::size_t i = 0; i < psi.size(); ++i)
        if ((i & m) == m) psi[i] = -psi[i];
      break;
    }
  }
}

double Circuit::readout(const StateVector& psi) const {
  double e = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double p = std::norm(psi[i]);
    e += (std::popcount(static_cast<unsigned>(i) & parity_mask_) & 1) ? -p : p;
  }
  return e;
}

StateVector Circuit::run(const ParameterSet& params, const CircuitInput& in) const {
  const auto a = angles(params, in);
  StateVector psi(std::size_t{1} << n_qubits(), {0.0, 0.0});
  psi[0] = 1.0;
  for (std::size_t k = 0; k < ops_.size(); ++k) apply(psi, ops_[k], a[k]);
  return psi;
}

double Circuit::raw_expectation(const ParameterSet& params, const CircuitInput& in) const {
  return readout(run(params, in));
}

double Circuit::expectation(const ParameterSet& params, const CircuitInput& in) const {
  const double e = raw_expectation(params, in);
  return params.omega.empty() ? e : params.omega[0] * e;
}

CircuitGradient Circuit::gradient(const ParameterSet& params, const CircuitInput& in) const {
  const auto a = angles(params, in);
  const std::size_t dim = std::size_t{1} << n_qubits();
  // prefix[k] is the state just before op k
  std::vector<StateVector> prefix(ops_.size() + 1);
  prefix[0].assign(dim, {0.0, 0.0});
  prefix[0][0] = 1.0;
  for (std::size_t k = 0; k < ops_.size(); ++k) {
    prefix[k + 1] = prefix[k];
    apply(prefix[k + 1], ops_[k], a[k]);
  }

  CircuitGradient out;
  out.raw = readout(prefix.back());
  const double omega = params.omega.empty() ? 1.0 : params.omega[0];
  out.value = omega * out.raw;
  out.grad.phi.assign(n_phi(), 0.0);
  out.grad.lambda.assign(n_lambda(), 0.0);
  out.grad.omega.assign(n_omega(), out.raw);

  auto shifted = [&](std::size_t k, double delta) {
    StateVector psi = prefix[k];
    apply(psi, ops_[k], a[k] + delta);
    for (std::size_t j = k + 1; j < ops_.size(); ++j) apply(psi, ops_[j], a[j]);
    return readout(psi);
  };

  for (std::size_t k = 0; k < ops_.size(); ++k) {
    const Op& op = ops_[k];
    const bool trainable_enc = op.enc_index >= 0 && spec_.toggles.input_scaling;
    if (op.phi_index < 0 && !trainable_enc) continue;
    const double d_angle = 0.5 * (shifted(k, kHalfPi) - shifted(k, -kHalfPi));
    if (op.phi_index >= 0) {
      out.grad.phi[static_cast<std::size_t>(op.phi_index)] = omega * d_angle;
    } else {
      const auto e = static_cast<std::size_t>(op.enc_index);
      const double v = op.enc_is_x ? in.x : in.t;
      const double lv = v * params.lambda[e];
      const double dtheta_dlambda = spec_.encoding == Encoding::arctan ? v / (1.0 + lv * lv) : v;
      out.grad.lambda[e] = omega * d_angle * dtheta_dlambda;
    }
  }
  return out;
}

std::vector<double> sample_coherent_error(const Circuit& circuit, const CoherentErrorConfig& cfg, Rng& rng) {
  if (!(cfg.rate >= 0.0 && cfg.rate <= 1.0))
    throw std::invalid_argument("coherent_error.rate must lie in [0, 1], got " + std::to_string(cfg.rate));
  if (!(cfg.sigma >= 0.0)) throw std::invalid_argument("coherent_error.sigma must be >= 0");
  std::vector<double> off(circuit.n_encoding_gates(), 0.0);
  if (cfg.rate == 0.0) return off;
  for (auto& o : off)
    if (uniform01(rng) < cfg.rate) o = normal(rng, 0.0, cfg.sigma);
  return off;
}

}  // namespace raretraj
