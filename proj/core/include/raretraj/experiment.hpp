#pragma once

// Config-driven experiment runner behind the CLI.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "raretraj/fourier.hpp"
#include "raretraj/mlp.hpp"
#include "raretraj/oracle.hpp"
#include "raretraj/qsim.hpp"
#include "raretraj/trainer.hpp"

namespace raretraj {

enum class ExperimentKind { oracle, train_pg, train_ac, fourier_fit, fft_coeffs, nn_train, sample, ablation, scan };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& name);

struct PqcSettings {
  CircuitSpec circuit;
  double beta = 1.0;
  CoherentErrorConfig noise;
};

enum class FeatureScheme { integer, gaussian };

struct NnSettings {
  MlpSpec spec;  // policy head
  int feature_rows = 0;  // Fourier features; 0 = raw (x, t)
  FeatureScheme scheme = FeatureScheme::integer;
  double feature_scale = 1.0;  // gaussian std
  int max_frequency = 3;       // integer scheme: entries in [-max, max]
  double beta = 1.0;
};

enum class SampleSource { oracle, uniform, trained };

struct AblationVariant {
  std::string name;
  GateToggles toggles;
};

struct ScanSettings {
  std::string parameter = "layers";  // layers | qubits | epsilon | tilt | horizon
  std::vector<double> values{1, 3, 5, 10, 15};
  std::string model = "pqc";         // pqc | nn
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::train_pg;
  std::uint64_t seed = 0;
  WalkConfig walk;
  PqcSettings actor;
  CircuitSpec critic;
  NnSettings nn;
  TrainConfig train;
  FitConfig fit;
  int fft_qubits = 1;
  int fft_layers = 1;
  int fft_draws = 100;
  int fft_n_max = 0;  // 0: number of layers
  SampleSource sample_source = SampleSource::oracle;
  int sample_n = 1000;
  std::vector<AblationVariant> ablation;
  ScanSettings scan;
  std::filesystem::path out_dir = "out";
  bool plots = false;
  int trajectories = 1000;  // sampled from the final policy after training

  std::string resolved_json;  // defaults filled, overrides applied
};

/// Errors name the offending key path, e.g. "train.rates.phi: expected a number".
ExperimentConfig parse_config_text(const std::string& text, std::optional<ExperimentKind> kind = std::nullopt);
ExperimentConfig parse_config_file(const std::filesystem::path& path, std::optional<ExperimentKind> kind = std::nullopt);

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<bool> plots;
};
void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& o);

struct RunManifest {
  std::string config_json;
  std::uint64_t seed = 0;
  std::string version;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;  // relative to the output directory
  bool complete = false;
};

std::string version_string();

RunManifest run_experiment(const ExperimentConfig& cfg);

PolicyFactory pqc_policy_factory(const PqcSettings& s);
CriticFactory pqc_critic_factory(const CircuitSpec& spec);
PolicyFactory mlp_policy_factory(const NnSettings& s);
CriticFactory mlp_critic_factory(const NnSettings& s);

std::vector<Trajectory> sample_trajectories(const MarkovPolicy& policy, int horizon, int n, Rng& rng);
double bridge_fraction(const std::vector<Trajectory>& trajs);

}  // namespace raretraj
