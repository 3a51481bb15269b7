#include "raretraj/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "raretraj/io.hpp"
#include "raretraj/plot.hpp"
#include "raretraj/policy.hpp"

#ifndef RARETRAJ_VERSION
#define RARETRAJ_VERSION "unknown"
#endif

namespace raretraj {

using json = nlohmann::ordered_json;

namespace {

const std::vector<std::pair<ExperimentKind, std::string>> kKinds = {
    {ExperimentKind::oracle, "oracle"},           {ExperimentKind::train_pg, "train-pg"},
    {ExperimentKind::train_ac, "train-ac"},       {ExperimentKind::fourier_fit, "fourier-fit"},
    {ExperimentKind::fft_coeffs, "fft-coeffs"},   {ExperimentKind::nn_train, "nn-train"},
    {ExperimentKind::sample, "sample"},           {ExperimentKind::ablation, "ablation"},
    {ExperimentKind::scan, "scan"}};

json gates_json() {
  return {{"rx_encoding", true}, {"ry", true},           {"rz", true},           {"cz", true},
          {"cz_last_layer", true}, {"input_scaling", true}, {"output_scaling", true}};
}

json default_config(ExperimentKind kind) {
  const bool ac = kind == ExperimentKind::train_ac;
  json variants = json::array();
  for (const auto& [name, gate] : std::vector<std::pair<std::string, std::string>>{
           {"full", ""}, {"no-cz", "cz"}, {"no-cz-last", "cz_last_layer"}, {"no-ry", "ry"}, {"no-rz", "rz"}}) {
    json v = {{"name", name}, {"gates", gates_json()}};
    if (!gate.empty()) v["gates"][gate] = false;
    variants.push_back(v);
  }
  return {
      {"kind", to_string(kind)},
      {"seed", 0},
      {"walk", {{"horizon", 20}, {"epsilon", 0.0}, {"tilt", 1.0}}},
      {"circuit",
       {{"qubits", 2},
        {"layers", 3},
        {"ring", true},
        {"encoding", "arctan"},
        {"beta", 1.0},
        {"gates", gates_json()},
        {"noise", {{"rate", 0.0}, {"sigma", 0.1}}}}},
      {"critic", {{"qubits", 2}, {"layers", 3}, {"ring", true}, {"encoding", "arctan"}, {"gates", gates_json()}}},
      {"nn",
       {{"hidden", {2, 2}},
        {"activation", "relu"},
        {"beta", 1.0},
        {"learning_rate", 0.01},
        {"critic_learning_rate", 0.01},
        {"algorithm", "pg"},
        {"fourier_features", {{"rows", 0}, {"scheme", "integer"}, {"scale", 1.0}, {"max_frequency", 3}}}}},
      {"train",
       {{"batch_size", 10},
        {"batches", 1000},
        {"agents", 10},
        {"optimizer", "sgd"},
        {"rates", {{"phi", 0.01}, {"lambda", 0.05}, {"omega", ac ? 0.2 : 0.1}}},
        {"critic_rates", {{"phi", 0.01}, {"lambda", 0.05}, {"omega", 0.7}}},
        {"critic_zero_at_horizon", false},
        {"stop_after_rwb", 0},
        {"threads", 0},
        {"track_kl", true}}},
      {"fit",
       {{"qubits", 1},
        {"layers", 1},
        {"restarts", 100},
        {"loss", "mse"},
        {"gradient", "numeric"},
        {"mc_samples", 10000},
        {"rwb_samples", 100000},
        {"max_iter", 0}}},
      {"fft", {{"qubits", 1}, {"layers", 1}, {"draws", 100}, {"n_max", 0}}},
      {"sample", {{"source", "oracle"}, {"n", 1000}}},
      {"ablation", {{"variants", variants}}},
      {"scan", {{"parameter", "layers"}, {"values", {1.0, 3.0, 5.0, 10.0, 15.0}}, {"model", "pqc"}}},
      {"output", {{"dir", "out"}, {"plots", false}, {"trajectories", 1000}}},
  };
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw std::invalid_argument(path + ": " + msg); }

std::string type_name(const json& v) {
  if (v.is_boolean()) return "a boolean";
  if (v.is_number_integer()) return "an integer";
  if (v.is_number()) return "a number";
  if (v.is_string()) return "a string";
  if (v.is_array()) return "an array";
  if (v.is_object()) return "an object";
  return "null";
}

void check_scalar(const json& def, const json& v, const std::string& path) {
  bool ok = false;
  if (def.is_boolean()) ok = v.is_boolean();
  else if (def.is_number_integer()) ok = v.is_number_integer();
  else if (def.is_number()) ok = v.is_number();
  else if (def.is_string()) ok = v.is_string();
  if (!ok) fail(path, "expected " + type_name(def) + ", got " + type_name(v));
}

void merge(json& base, const json& user, const std::string& path);

json merge_variant(const json& user, const std::string& path) {
  if (!user.is_object()) fail(path, "expected an object, got " + type_name(user));
  json v = {{"name", ""}, {"gates", gates_json()}};
  merge(v, user, path);
  if (v["name"].get<std::string>().empty()) fail(path + ".name", "must be a non-empty string");
  return v;
}

void merge(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) fail(path.empty() ? "config" : path, "expected an object, got " + type_name(user));
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) fail(key, "unknown key");
    json& b = base[it.key()];
    const json& v = it.value();
    if (key == "ablation.variants") {
      if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of variants");
      json out = json::array();
      for (std::size_t i = 0; i < v.size(); ++i) out.push_back(merge_variant(v[i], key + "[" + std::to_string(i) + "]"));
      b = out;
    } else if (b.is_object()) {
      merge(b, v, key);
    } else if (b.is_array()) {
      if (!v.is_array()) fail(key, "expected an array, got " + type_name(v));
      for (std::size_t i = 0; i < v.size(); ++i) check_scalar(b.front(), v[i], key + "[" + std::to_string(i) + "]");
      b = v;
    } else {
      check_scalar(b, v, key);
      b = v;
    }
  }
}

template <class E>
E pick(const json& j, const std::string& path, const std::vector<std::pair<E, std::string>>& options) {
  const auto s = j.get<std::string>();
  std::string names;
  for (const auto& [e, n] : options) {
    if (n == s) return e;
    names += (names.empty() ? "" : ", ") + n;
  }
  fail(path, "expected one of " + names + ", got '" + s + "'");
}

int positive(const json& j, const std::string& path, int min = 1) {
  const auto v = j.get<long long>();
  if (v < min) fail(path, "must be >= " + std::to_string(min) + ", got " + std::to_string(v));
  return static_cast<int>(v);
}

GateToggles read_gates(const json& g) {
  GateToggles t;
  t.rx_encoding = g["rx_encoding"];
  t.ry = g["ry"];
  t.rz = g["rz"];
  t.cz = g["cz"];
  t.cz_last_layer = g["cz_last_layer"];
  t.input_scaling = g["input_scaling"];
  t.output_scaling = g["output_scaling"];
  return t;
}

void set_qubits(CircuitSpec& spec, int qubits, const std::string& path) {
  if (qubits == 1) {
    spec.layout = Layout::one_qubit;
    spec.copies = 1;
  } else if (qubits >= 2 && qubits % 2 == 0 && qubits <= kMaxQubits) {
    spec.layout = Layout::two_qubit;
    spec.copies = qubits / 2;
  } else {
    fail(path, "must be 1 or an even number up to " + std::to_string(kMaxQubits) + ", got " + std::to_string(qubits));
  }
}

CircuitSpec read_circuit(const json& c, const std::string& path) {
  CircuitSpec spec;
  set_qubits(spec, positive(c["qubits"], path + ".qubits"), path + ".qubits");
  spec.n_layers = positive(c["layers"], path + ".layers");
  spec.ring = c["ring"];
  spec.encoding = pick<Encoding>(c["encoding"], path + ".encoding", {{Encoding::arctan, "arctan"}, {Encoding::raw, "raw"}});
  spec.toggles = read_gates(c["gates"]);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  return spec;
}

std::vector<double> read_rates(const json& r) { return {r["phi"].get<double>(), r["lambda"].get<double>(), r["omega"].get<double>()}; }

void check_rates(const std::vector<double>& rates, const std::string& path) {
  for (double r : rates)
    if (!(r >= 0.0) || !std::isfinite(r)) fail(path, "learning rates must be finite and >= 0");
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.kind = parse_kind(j["kind"].get<std::string>());
  if (j["seed"].get<long long>() < 0) fail("seed", "must be >= 0");
  cfg.seed = j["seed"].get<std::uint64_t>();

  const json& w = j["walk"];
  cfg.walk.horizon = positive(w["horizon"], "walk.horizon");
  cfg.walk.epsilon = w["epsilon"];
  cfg.walk.tilt = w["tilt"];
  // every experiment here targets bridges, which need an even horizon
  cfg.walk.validate(true);

  const json& c = j["circuit"];
  cfg.actor.circuit = read_circuit(c, "circuit");
  cfg.actor.beta = c["beta"];
  if (!(cfg.actor.beta > 0.0)) fail("circuit.beta", "must be > 0");
  cfg.actor.noise.rate = c["noise"]["rate"];
  cfg.actor.noise.sigma = c["noise"]["sigma"];
  if (!(cfg.actor.noise.rate >= 0.0 && cfg.actor.noise.rate <= 1.0)) fail("circuit.noise.rate", "must lie in [0, 1]");
  if (!(cfg.actor.noise.sigma >= 0.0)) fail("circuit.noise.sigma", "must be >= 0");
  cfg.critic = read_circuit(j["critic"], "critic");

  const json& n = j["nn"];
  if (n["hidden"].size() != 2) fail("nn.hidden", "expected two hidden-layer widths");
  cfg.nn.spec.n1 = positive(n["hidden"][0], "nn.hidden[0]");
  cfg.nn.spec.n2 = positive(n["hidden"][1], "nn.hidden[1]");
  cfg.nn.spec.activation =
      pick<Activation>(n["activation"], "nn.activation", {{Activation::relu, "relu"}, {Activation::sine, "sine"}});
  cfg.nn.beta = n["beta"];
  if (!(cfg.nn.beta > 0.0)) fail("nn.beta", "must be > 0");
  const json& ff = n["fourier_features"];
  cfg.nn.feature_rows = positive(ff["rows"], "nn.fourier_features.rows", 0);
  cfg.nn.scheme = pick<FeatureScheme>(ff["scheme"], "nn.fourier_features.scheme",
                                      {{FeatureScheme::integer, "integer"}, {FeatureScheme::gaussian, "gaussian"}});
  cfg.nn.feature_scale = ff["scale"];
  cfg.nn.max_frequency = positive(ff["max_frequency"], "nn.fourier_features.max_frequency", 0);

  const json& t = j["train"];
  TrainConfig& tc = cfg.train;
  tc.walk = cfg.walk;
  tc.seed = cfg.seed;
  tc.batch_size = positive(t["batch_size"], "train.batch_size");
  tc.batches = positive(t["batches"], "train.batches");
  tc.agents = positive(t["agents"], "train.agents");
  tc.optimizer = pick<OptimizerKind>(t["optimizer"], "train.optimizer", {{OptimizerKind::sgd, "sgd"}, {OptimizerKind::adam, "adam"}});
  tc.critic_zero_at_horizon = t["critic_zero_at_horizon"];
  tc.stop_after_rwb = positive(t["stop_after_rwb"], "train.stop_after_rwb", 0);
  tc.threads = positive(t["threads"], "train.threads", 0);
  tc.track_kl = t["track_kl"];
  tc.algorithm = cfg.kind == ExperimentKind::train_ac ? Algorithm::ac : Algorithm::pg;
  if (cfg.kind == ExperimentKind::nn_train)
    tc.algorithm = pick<Algorithm>(n["algorithm"], "nn.algorithm", {{Algorithm::pg, "pg"}, {Algorithm::ac, "ac"}});
  const bool nn_model = cfg.kind == ExperimentKind::nn_train || (cfg.kind == ExperimentKind::scan && j["scan"]["model"] == "nn");
  if (nn_model) {
    tc.actor_rates = {n["learning_rate"].get<double>()};
    tc.critic_rates = {n["critic_learning_rate"].get<double>()};
    check_rates(tc.actor_rates, "nn.learning_rate");
    check_rates(tc.critic_rates, "nn.critic_learning_rate");
  } else {
    tc.actor_rates = read_rates(t["rates"]);
    tc.critic_rates = read_rates(t["critic_rates"]);
    check_rates(tc.actor_rates, "train.rates");
    check_rates(tc.critic_rates, "train.critic_rates");
  }

  const json& f = j["fit"];
  cfg.fit.qubits = positive(f["qubits"], "fit.qubits");
  if (cfg.fit.qubits > 2) fail("fit.qubits", "must be 1 or 2");
  cfg.fit.layers = positive(f["layers"], "fit.layers");
  cfg.fit.restarts = positive(f["restarts"], "fit.restarts");
  cfg.fit.loss = pick<FitLoss>(f["loss"], "fit.loss", {{FitLoss::mse, "mse"}, {FitLoss::mc_kl, "mc-kl"}});
  cfg.fit.gradient =
      pick<FitGradient>(f["gradient"], "fit.gradient", {{FitGradient::numeric, "numeric"}, {FitGradient::analytic, "analytic"}});
  cfg.fit.mc_samples = positive(f["mc_samples"], "fit.mc_samples");
  cfg.fit.rwb_samples = positive(f["rwb_samples"], "fit.rwb_samples");
  cfg.fit.max_iter = positive(f["max_iter"], "fit.max_iter", 0);
  cfg.fit.seed = cfg.seed;
  cfg.fit.threads = tc.threads;

  const json& ft = j["fft"];
  cfg.fft_qubits = positive(ft["qubits"], "fft.qubits");
  {
    CircuitSpec probe;
    set_qubits(probe, cfg.fft_qubits, "fft.qubits");
  }
  cfg.fft_layers = positive(ft["layers"], "fft.layers");
  cfg.fft_draws = positive(ft["draws"], "fft.draws");
  cfg.fft_n_max = positive(ft["n_max"], "fft.n_max", 0);

  cfg.sample_source = pick<SampleSource>(j["sample"]["source"], "sample.source",
                                         {{SampleSource::oracle, "oracle"}, {SampleSource::uniform, "uniform"}, {SampleSource::trained, "trained"}});
  cfg.sample_n = positive(j["sample"]["n"], "sample.n");

  for (const auto& v : j["ablation"]["variants"]) cfg.ablation.push_back({v["name"].get<std::string>(), read_gates(v["gates"])});

  const json& s = j["scan"];
  cfg.scan.parameter = s["parameter"].get<std::string>();
  cfg.scan.model = s["model"].get<std::string>();
  if (cfg.scan.model != "pqc" && cfg.scan.model != "nn") fail("scan.model", "expected one of pqc, nn, got '" + cfg.scan.model + "'");
  static const std::vector<std::string> params{"layers", "qubits", "epsilon", "tilt", "horizon"};
  if (std::find(params.begin(), params.end(), cfg.scan.parameter) == params.end())
    fail("scan.parameter", "expected one of layers, qubits, epsilon, tilt, horizon, got '" + cfg.scan.parameter + "'");
  if (cfg.scan.model == "nn" && (cfg.scan.parameter == "layers" || cfg.scan.parameter == "qubits"))
    fail("scan.parameter", "'" + cfg.scan.parameter + "' does not apply to the nn model");
  cfg.scan.values = s["values"].get<std::vector<double>>();
  if (cfg.kind == ExperimentKind::scan && cfg.scan.values.empty()) fail("scan.values", "must not be empty");

  const json& o = j["output"];
  cfg.out_dir = o["dir"].get<std::string>();
  cfg.plots = o["plots"];
  cfg.trajectories = positive(o["trajectories"], "output.trajectories", 0);
  cfg.resolved_json = j.dump(2);
  return cfg;
}

// --------------------------------------------------------------------------

class RunContext {
 public:
  RunContext(const ExperimentConfig& cfg) : cfg_(cfg), dir_(cfg.out_dir) {
    std::filesystem::create_directories(dir_);
    manifest_.config_json = cfg.resolved_json;
    manifest_.seed = cfg.seed;
    manifest_.version = version_string();
    manifest_.outputs.push_back("manifest.json");
    write_manifest();
  }

  std::filesystem::path file(const std::string& name) {
    if (std::find(manifest_.outputs.begin(), manifest_.outputs.end(), name) == manifest_.outputs.end())
      manifest_.outputs.push_back(name);
    return dir_ / name;
  }

  void write_json(const std::string& name, const json& j) {
    std::ofstream out(file(name));
    out << j.dump(2) << '\n';
  }

  RunManifest finish(double seconds) {
    manifest_.wall_seconds = seconds;
    manifest_.complete = true;
    write_manifest();
    return manifest_;
  }

  const ExperimentConfig& cfg() const { return cfg_; }
  bool plots() const { return cfg_.plots; }

 private:
  void write_manifest() {
    json m = {{"version", manifest_.version},
              {"seed", manifest_.seed},
              {"complete", manifest_.complete},
              {"wall_seconds", manifest_.wall_seconds},
              {"outputs", manifest_.outputs},
              {"config", json::parse(manifest_.config_json)}};
    std::ofstream out(dir_ / "manifest.json");
    out << m.dump(2) << '\n';
  }

  const ExperimentConfig& cfg_;
  std::filesystem::path dir_;
  RunManifest manifest_;
};

MarkovPolicy frozen_policy(const PolicyModel& model) {
  std::shared_ptr<PolicyModel> clean = model.clone();
  clean->end_noise();
  return [clean](int x, int t) { return clean->p_down(x, t); };
}

void write_trajectory_outputs(RunContext& run, const std::string& prefix, const std::vector<Trajectory>& trajs, int horizon) {
  write_trajectories(run.file(prefix + "trajectories.csv"), trajs);
  const auto edges = edge_counts(trajs);
  write_edges(run.file(prefix + "edges.csv"), edges);
  if (run.plots()) trajectories_svg(run.file(prefix + "trajectories.svg"), "sampled trajectories", edges, horizon);
}

void plot_metrics(RunContext& run, const std::string& prefix, const std::vector<BatchMetrics>& metrics) {
  std::vector<double> ret, rwb;
  for (const auto& m : metrics) {
    ret.push_back(m.mean_return);
    rwb.push_back(m.rwb_fraction);
  }
  line_chart_svg(run.file(prefix + "return.svg"), "mean return", "batch", "return",
                 {{"batch mean", ret, "#1f77b4", 1.0, 0.35}, {"EMA", ema(ret), "#1f77b4", 2.0, 1.0}});
  line_chart_svg(run.file(prefix + "rwb_fraction.svg"), "bridge fraction", "batch", "rwb fraction",
                 {{"batch mean", rwb, "#d62728", 1.0, 0.35}, {"EMA", ema(rwb), "#d62728", 2.0, 1.0}});
}

json train_and_report(RunContext& run, const std::string& prefix, const TrainConfig& tc, const PolicyFactory& pf,
                      const CriticFactory& cf) {
  const TrainResult res = train(tc, pf, cf);
  const int T = tc.walk.horizon;

  write_metrics(run.file(prefix + "metrics.csv"), res.aggregate, true);
  for (const auto& a : res.agents) write_metrics(run.file(prefix + "metrics_agent_" + std::to_string(a.agent) + ".csv"), a.metrics, true);

  CellTable policy_mean(T), value_mean(T);
  int alive = 0;
  for (const auto& a : res.agents) {
    if (a.diverged) continue;
    const auto pol = frozen_policy(*a.final_policy);
    for (int t = 0; t < T; ++t)
      for (int x = -t; x <= t; x += 2) {
        const double prev = alive == 0 ? 0.0 : policy_mean(x, t);
        policy_mean(x, t) = prev + pol(x, t);
        if (a.final_critic) value_mean(x, t) = (alive == 0 ? 0.0 : value_mean(x, t)) + a.final_critic->value(x, t);
      }
    ++alive;
  }
  if (alive > 0) {
    for (int t = 0; t < T; ++t)
      for (int x = -t; x <= t; x += 2) {
        policy_mean(x, t) /= alive;
        if (tc.algorithm == Algorithm::ac) value_mean(x, t) /= alive;
      }
    write_cell_table(run.file(prefix + "policy_heatmap.csv"), policy_mean, "value", T);
    if (tc.algorithm == Algorithm::ac) write_cell_table(run.file(prefix + "value_heatmap.csv"), value_mean, "value", T);
  }

  json agents = json::array();
  const AgentResult* sampler = nullptr;
  for (const auto& a : res.agents) {
    if (!a.diverged && !sampler) sampler = &a;
    json row = {{"agent", a.agent},
                {"batches", a.metrics.size()},
                {"diverged", a.diverged},
                {"tail_rwb_fraction", a.tail_rwb_fraction(100)},
                {"final_ema_return", a.final_ema_return()},
                {"rwb_generated", a.rwb_generated}};
    if (tc.track_kl) {
      row["initial_kl"] = a.initial_kl;
      row["final_kl"] = a.diverged ? json(nullptr) : json(a.final_kl);
    }
    if (a.diverged) row["diagnostic"] = a.diagnostic;
    agents.push_back(row);
  }
  if (sampler && run.cfg().trajectories > 0) {
    Rng rng = make_rng(tc.seed, 0x5A3D1E5ull);
    write_trajectory_outputs(run, prefix, sample_trajectories(frozen_policy(*sampler->final_policy), T, run.cfg().trajectories, rng), T);
  }
  if (run.plots()) {
    plot_metrics(run, prefix, res.aggregate);
    if (alive > 0) heatmap_svg(run.file(prefix + "policy_heatmap.svg"), "p_down", policy_mean, T, 0.0, 1.0);
  }
  const std::size_t n_params = res.agents.empty() || !res.agents.front().final_policy ? 0 : res.agents.front().final_policy->n_params();
  return {{"n_params", n_params}, {"agents", agents}};
}

json run_oracle(RunContext& run) {
  const auto& cfg = run.cfg();
  const auto tables = compute_tables(cfg.walk);
  const int T = cfg.walk.horizon;
  write_cell_table(run.file("p_down.csv"), tables.p_down, "p_down", T);
  const auto pw = reweighted_policy(tables);
  const auto v = exact_value_function(cfg.walk, pw);
  write_cell_table(run.file("value.csv"), v, "v", T + 1);
  const auto p = original_policy(cfg.walk);
  json summary = {{"log_normalizer", tables.log_normalizer()},
                  {"rwb_prob_original", exact_rwb_prob(p, T)},
                  {"rwb_prob_reweighted", exact_rwb_prob(pw, T)},
                  {"expected_return_original", exact_expected_return(cfg.walk, p)},
                  {"expected_return_reweighted", exact_expected_return(cfg.walk, pw)},
                  {"kl_original_to_reweighted", exact_kl(cfg.walk, p, tables)}};
  if (run.plots()) heatmap_svg(run.file("p_down.svg"), "reweighted p_down", tables.p_down, T, 0.0, 1.0);
  if (cfg.trajectories > 0) {
    Rng rng = make_rng(cfg.seed, 0x5A3D1E5ull);
    write_trajectory_outputs(run, "", sample_trajectories(pw, T, cfg.trajectories, rng), T);
  }
  return summary;
}

json run_fit(RunContext& run) {
  const auto& cfg = run.cfg();
  const auto tables = compute_tables(cfg.walk);
  const FitResult r = fit_surrogate(cfg.walk, tables, cfg.fit);
  const int T = cfg.walk.horizon;
  CellTable fitted(T);
  for (int t = 0; t < T; ++t)
    for (int x = -t; x <= t; x += 2) fitted(x, t) = surrogate_policy(r.best, x, t);
  write_cell_table(run.file("fitted_policy.csv"), fitted, "value", T);
  write_cell_table(run.file("target_policy.csv"), tables.p_down, "value", T);
  if (run.plots()) heatmap_svg(run.file("fitted_policy.svg"), "surrogate p_down", fitted, T, 0.0, 1.0);

  json terms = json::array();
  for (const auto& k : r.best.form.terms)
    terms.push_back({{"nx", k.nx}, {"nt", k.nt}, {"amplitude", k.amplitude}, {"phase", k.phase}});
  return {{"qubits", cfg.fit.qubits},
          {"layers", cfg.fit.layers},
          {"n_params", r.n_params},
          {"loss", r.loss},
          {"mse", r.mse},
          {"kl", r.kl},
          {"rwb_prob", r.rwb_prob},
          {"mean_loss", r.mean_loss()},
          {"std_loss", r.std_loss()},
          {"failed_restarts", r.failed_restarts},
          {"restart_losses", r.restart_losses},
          {"best", {{"lambda_x", r.best.lambda_x}, {"lambda_t", r.best.lambda_t}, {"omega", r.best.omega}, {"terms", terms}}}};
}

json run_fft(RunContext& run) {
  const auto& cfg = run.cfg();
  CircuitSpec spec = cfg.actor.circuit;
  set_qubits(spec, cfg.fft_qubits, "fft.qubits");
  spec.n_layers = cfg.fft_layers;
  spec.encoding = Encoding::raw;
  spec.toggles.input_scaling = false;
  const Circuit circuit(spec);
  const int n_max = cfg.fft_n_max > 0 ? cfg.fft_n_max : cfg.fft_layers * spec.copies;
  Rng rng = make_rng(cfg.seed, 0xFF7ull);
  CsvWriter csv(run.file("coefficients.csv"), {"draw", "nx", "nt", "re", "im", "abs"});
  double defect = 0.0;
  for (int d = 0; d < cfg.fft_draws; ++d) {
    const auto params = circuit.init_params(rng);
    // one extra frequency guards against aliasing of the band edge
    const auto s = extract_coeffs_fft(circuit, params, n_max + 1);
    defect = std::max(defect, s.reality_defect());
    for (int nx = -n_max; nx <= n_max; ++nx)
      for (int nt = -n_max; nt <= n_max; ++nt) {
        const auto c = s.at(nx, nt);
        csv << d << nx << nt << c.real() << c.imag() << std::abs(c);
        csv.end_row();
      }
  }
  return {{"qubits", cfg.fft_qubits}, {"layers", cfg.fft_layers}, {"n_max", n_max}, {"draws", cfg.fft_draws}, {"max_reality_defect", defect}};
}

json run_sample(RunContext& run) {
  const auto& cfg = run.cfg();
  const int T = cfg.walk.horizon;
  MarkovPolicy policy;
  std::string source;
  if (cfg.sample_source == SampleSource::oracle) {
    policy = reweighted_policy(compute_tables(cfg.walk));
    source = "oracle";
  } else if (cfg.sample_source == SampleSource::uniform) {
    policy = original_policy(cfg.walk);
    source = "uniform";
  } else {
    TrainConfig tc = cfg.train;
    tc.agents = 1;
    const AgentResult a = train_agent(tc, pqc_policy_factory(cfg.actor), pqc_critic_factory(cfg.critic), 0);
    if (a.diverged) throw std::runtime_error("sample: training diverged: " + a.diagnostic);
    write_metrics(run.file("metrics.csv"), a.metrics, true);
    policy = frozen_policy(*a.final_policy);
    source = "trained";
  }
  Rng rng = make_rng(cfg.seed, 0x5A3D1E5ull);
  const auto trajs = sample_trajectories(policy, T, cfg.sample_n, rng);
  write_trajectory_outputs(run, "", trajs, T);
  return {{"source", source}, {"n", cfg.sample_n}, {"rwb_fraction", bridge_fraction(trajs)}};
}

json run_ablation(RunContext& run) {
  const auto& cfg = run.cfg();
  json out = json::object();
  for (const auto& v : cfg.ablation) {
    PqcSettings s = cfg.actor;
    s.circuit.toggles = v.toggles;
    try {
      s.circuit.validate();
    } catch (const std::invalid_argument& e) {
      fail("ablation " + v.name, e.what());
    }
    TrainConfig tc = cfg.train;
    tc.algorithm = Algorithm::pg;
    out[v.name] = train_and_report(run, v.name + "_", tc, pqc_policy_factory(s), {});
  }
  return out;
}

json run_scan(RunContext& run) {
  const auto& cfg = run.cfg();
  json out = json::object();
  for (double value : cfg.scan.values) {
    const std::string tag = cfg.scan.parameter + "_" + format_number(value);
    PqcSettings s = cfg.actor;
    NnSettings nn = cfg.nn;
    TrainConfig tc = cfg.train;
    tc.algorithm = Algorithm::pg;
    const auto as_int = [&] {
      if (value != std::floor(value)) fail("scan.values", "'" + cfg.scan.parameter + "' needs integer values, got " + format_number(value));
      return static_cast<int>(value);
    };
    if (cfg.scan.parameter == "layers") s.circuit.n_layers = as_int();
    else if (cfg.scan.parameter == "qubits") set_qubits(s.circuit, as_int(), "scan.values");
    else if (cfg.scan.parameter == "epsilon") tc.walk.epsilon = value;
    else if (cfg.scan.parameter == "tilt") tc.walk.tilt = value;
    else if (cfg.scan.parameter == "horizon") tc.walk.horizon = as_int();
    try {
      tc.walk.validate(true);
      s.circuit.validate();
    } catch (const std::invalid_argument& e) {
      fail("scan " + tag, e.what());
    }
    out[tag] = cfg.scan.model == "nn" ? train_and_report(run, tag + "_", tc, mlp_policy_factory(nn), {})
                                      : train_and_report(run, tag + "_", tc, pqc_policy_factory(s), {});
  }
  return out;
}

std::vector<std::array<double, 2>> draw_features(const NnSettings& s, Rng& rng) {
  std::vector<std::array<double, 2>> b(static_cast<std::size_t>(s.feature_rows));
  for (auto& row : b)
    for (double& v : row) {
      if (s.scheme == FeatureScheme::gaussian) {
        v = s.feature_scale * normal(rng);
      } else {
        const int span = 2 * s.max_frequency + 1;
        v = static_cast<double>(std::min(static_cast<int>(uniform01(rng) * span), span - 1) - s.max_frequency);
      }
    }
  return b;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, n] : kKinds)
    if (k == kind) return n;
  return "unknown";
}

ExperimentKind parse_kind(const std::string& name) {
  std::string names;
  for (const auto& [k, n] : kKinds) {
    if (n == name) return k;
    names += (names.empty() ? "" : ", ") + n;
  }
  throw std::invalid_argument("kind: expected one of " + names + ", got '" + name + "'");
}

ExperimentConfig parse_config_text(const std::string& text, std::optional<ExperimentKind> kind) {
  json user;
  try {
    user = text.find_first_not_of(" \t\r\n") == std::string::npos ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
  }
  if (!user.is_object()) fail("config", "expected a JSON object at the top level");
  ExperimentKind k = kind.value_or(ExperimentKind::train_pg);
  if (user.contains("kind")) {
    if (!user["kind"].is_string()) fail("kind", "expected a string, got " + type_name(user["kind"]));
    const auto file_kind = parse_kind(user["kind"].get<std::string>());
    if (kind && *kind != file_kind) fail("kind", "config says '" + to_string(file_kind) + "' but '" + to_string(*kind) + "' was requested");
    k = file_kind;
  }
  json merged = default_config(k);
  merge(merged, user, "");
  merged["kind"] = to_string(k);
  return from_json(merged);
}

ExperimentConfig parse_config_file(const std::filesystem::path& path, std::optional<ExperimentKind> kind) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), kind);
}

void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& o) {
  json j = json::parse(cfg.resolved_json);
  if (o.seed) j["seed"] = *o.seed;
  if (o.out_dir) j["output"]["dir"] = o.out_dir->string();
  if (o.plots) j["output"]["plots"] = *o.plots;
  cfg = from_json(j);
}

std::string version_string() { return RARETRAJ_VERSION; }

PolicyFactory pqc_policy_factory(const PqcSettings& s) {
  return [s](Rng& rng) -> std::unique_ptr<PolicyModel> {
    Circuit c(s.circuit);
    auto params = c.init_params(rng);
    auto p = std::make_unique<SoftmaxPqcPolicy>(std::move(c), std::move(params), s.beta);
    p->set_coherent_error(s.noise);
    return p;
  };
}

CriticFactory pqc_critic_factory(const CircuitSpec& spec) {
  return [spec](Rng& rng) -> std::unique_ptr<ValueModel> {
    Circuit c(spec);
    auto params = c.init_params(rng);
    return std::make_unique<PqcCritic>(std::move(c), std::move(params));
  };
}

PolicyFactory mlp_policy_factory(const NnSettings& s) {
  return [s](Rng& rng) -> std::unique_ptr<PolicyModel> {
    MlpSpec spec = s.spec;
    spec.head = Head::policy;
    spec.fourier_b = draw_features(s, rng);
    Mlp net(spec);
    net.init(rng);
    return std::make_unique<MlpPolicy>(std::move(net), s.beta);
  };
}

CriticFactory mlp_critic_factory(const NnSettings& s) {
  return [s](Rng& rng) -> std::unique_ptr<ValueModel> {
    MlpSpec spec = s.spec;
    spec.head = Head::critic;
    spec.fourier_b = draw_features(s, rng);
    Mlp net(spec);
    net.init(rng);
    return std::make_unique<MlpCritic>(std::move(net));
  };
}

std::vector<Trajectory> sample_trajectories(const MarkovPolicy& policy, int horizon, int n, Rng& rng) {
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(sample_markov(policy, horizon, rng));
  return out;
}

double bridge_fraction(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) return 0.0;
  const auto n = std::count_if(trajs.begin(), trajs.end(), [](const Trajectory& t) { return t.is_bridge(); });
  return static_cast<double>(n) / static_cast<double>(trajs.size());
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunContext run(cfg);
  json summary;
  try {
    switch (cfg.kind) {
      case ExperimentKind::oracle: summary = run_oracle(run); break;
      case ExperimentKind::train_pg:
      case ExperimentKind::train_ac:
        summary = train_and_report(run, "", cfg.train, pqc_policy_factory(cfg.actor), pqc_critic_factory(cfg.critic));
        break;
      case ExperimentKind::nn_train:
        summary = train_and_report(run, "", cfg.train, mlp_policy_factory(cfg.nn), mlp_critic_factory(cfg.nn));
        break;
      case ExperimentKind::fourier_fit: summary = run_fit(run); break;
      case ExperimentKind::fft_coeffs: summary = run_fft(run); break;
      case ExperimentKind::sample: summary = run_sample(run); break;
      case ExperimentKind::ablation: summary = run_ablation(run); break;
      case ExperimentKind::scan: summary = run_scan(run); break;
    }
  } catch (const std::exception& e) {
    throw std::runtime_error(to_string(cfg.kind) + " run: " + e.what());
  }
  run.write_json(cfg.kind == ExperimentKind::fourier_fit ? "fit_result.json" : "summary.json", summary);
  return run.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

}  // namespace raretraj
