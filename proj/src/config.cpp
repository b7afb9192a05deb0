#include "aigx/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

namespace aigx {
namespace {

const std::string kDefaultConfig = R"(# Power-allocation diffusion lifecycle configuration.
# All gains and powers are linear scale.
seed: 2024

channel:
  num_channels: 20
  noise_power_linear: 1.0
  power_budget_linear: 0.2
  waterfill_tolerance: 1.0e-10

# Per-channel independent uniform gain ranges, listed as consecutive blocks.
distributions:
  t1:
    - {channels: 10, gain_lo_linear: 5.0, gain_hi_linear: 8.0}
    - {channels: 10, gain_lo_linear: 3.0, gain_hi_linear: 6.0}
  t2:
    - {channels: 20, gain_lo_linear: 1.0, gain_hi_linear: 7.0}

diffusion:
  num_steps: 50
  beta_start: 1.0e-4
  beta_end: 0.02
  deterministic_last_step: true
  hidden_layers: 3
  hidden_units: 128
  time_embedding_dim: 16
  gain_center: 4.5
  gain_scale: 2.0

training:
  epochs: 200
  batch_size: 128
  learning_rate: 3.0e-4
  validation_fraction: 0.2

lifecycle:
  t1_dataset_size: 10000
  t2_dataset_size: 10000
  eval_size: 2000
  retrain_mode: fine_tune   # fine_tune | from_scratch
  retrain_epochs: 200

drl:
  hidden_layers: 2
  hidden_units: 128
  log_std_min: -5.0
  log_std_max: 1.0
  iterations_per_phase: 2000
  batch_size: 256
  learning_rate: 1.0e-4
  entropy_weight: 1.0e-3
)";

void check_keys(const YAML::Node& node, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw std::invalid_argument("config: '" + where + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      throw std::invalid_argument("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <typename T>
void read(const YAML::Node& node, const std::string& where, const char* key, T& out) {
  if (!node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw std::invalid_argument("config: bad value for '" + where + "." + key + "'");
  }
}

std::vector<GainDistribution::Block> read_blocks(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence() || node.size() == 0) {
    throw std::invalid_argument("config: '" + where + "' must be a non-empty list of blocks");
  }
  std::vector<GainDistribution::Block> blocks;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto entry = node[i];
    const auto here = where + "[" + std::to_string(i) + "]";
    check_keys(entry, here, {"channels", "gain_lo_linear", "gain_hi_linear"});
    if (!entry["channels"] || !entry["gain_lo_linear"] || !entry["gain_hi_linear"]) {
      throw std::invalid_argument("config: '" + here + "' needs channels, gain_lo_linear, gain_hi_linear");
    }
    GainDistribution::Block b{};
    read(entry, here, "channels", b.count);
    read(entry, here, "gain_lo_linear", b.lo);
    read(entry, here, "gain_hi_linear", b.hi);
    blocks.push_back(b);
  }
  return blocks;
}

}  // namespace

std::string to_string(RetrainMode mode) {
  return mode == RetrainMode::fine_tune ? "fine_tune" : "from_scratch";
}

RetrainMode retrain_mode_from_string(const std::string& name) {
  if (name == "fine_tune") return RetrainMode::fine_tune;
  if (name == "from_scratch") return RetrainMode::from_scratch;
  throw std::invalid_argument("unknown retrain mode '" + name + "' (fine_tune | from_scratch)");
}

void RunConfig::validate() const {
  channel.validate();
  if (!(waterfill_tolerance > 0.0)) throw std::invalid_argument("waterfill_tolerance must be > 0");
  const auto t1 = t1_distribution();
  const auto t2 = t2_distribution();
  const auto m = static_cast<std::size_t>(channel.num_channels);
  if (t1.size() != m || t2.size() != m) {
    throw std::invalid_argument("distributions must cover exactly num_channels channels");
  }
  gdm::make_schedule(schedule.num_steps, schedule.beta_start, schedule.beta_end);
  if (denoiser.hidden_layers < 0 || denoiser.hidden_units < 1 || denoiser.time_embedding_dim < 2 ||
      denoiser.time_embedding_dim % 2 != 0 || !(denoiser.gain_scale > 0.0)) {
    throw std::invalid_argument("invalid diffusion network settings");
  }
  if (training.epochs < 1 || training.batch_size < 1 || !(training.learning_rate > 0.0) ||
      !(training.validation_fraction > 0.0 && training.validation_fraction < 1.0)) {
    throw std::invalid_argument("invalid training settings");
  }
  if (lifecycle.t1_dataset_size < 100 || lifecycle.t2_dataset_size < 100) {
    throw std::invalid_argument("lifecycle dataset sizes must be >= 100");
  }
  if (lifecycle.eval_size < 1 || lifecycle.retrain_epochs < 1) {
    throw std::invalid_argument("invalid lifecycle settings");
  }
  if (drl.policy.hidden_layers < 0 || drl.policy.hidden_units < 1 ||
      !(drl.policy.log_std_min < drl.policy.log_std_max) || drl.train.iterations < 1 ||
      drl.train.batch_size < 1 || !(drl.train.learning_rate > 0.0) || drl.train.entropy_weight < 0.0) {
    throw std::invalid_argument("invalid drl settings");
  }
}

const std::string& default_config_text() { return kDefaultConfig; }

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument(std::string("config: malformed YAML: ") + e.what());
  }
  RunConfig cfg;
  if (root.IsNull()) return cfg;
  check_keys(root, "", {"seed", "channel", "distributions", "diffusion", "training", "lifecycle", "drl"});
  read(root, "", "seed", cfg.seed);

  if (const auto n = root["channel"]) {
    check_keys(n, "channel", {"num_channels", "noise_power_linear", "power_budget_linear", "waterfill_tolerance"});
    read(n, "channel", "num_channels", cfg.channel.num_channels);
    read(n, "channel", "noise_power_linear", cfg.channel.noise_power);
    read(n, "channel", "power_budget_linear", cfg.channel.power_budget);
    read(n, "channel", "waterfill_tolerance", cfg.waterfill_tolerance);
  }
  if (const auto n = root["distributions"]) {
    check_keys(n, "distributions", {"t1", "t2"});
    if (n["t1"]) cfg.t1_blocks = read_blocks(n["t1"], "distributions.t1");
    if (n["t2"]) cfg.t2_blocks = read_blocks(n["t2"], "distributions.t2");
  }
  if (const auto n = root["diffusion"]) {
    check_keys(n, "diffusion", {"num_steps", "beta_start", "beta_end", "deterministic_last_step",
                                "hidden_layers", "hidden_units", "time_embedding_dim", "gain_center",
                                "gain_scale"});
    read(n, "diffusion", "num_steps", cfg.schedule.num_steps);
    read(n, "diffusion", "beta_start", cfg.schedule.beta_start);
    read(n, "diffusion", "beta_end", cfg.schedule.beta_end);
    read(n, "diffusion", "deterministic_last_step", cfg.schedule.deterministic_last_step);
    read(n, "diffusion", "hidden_layers", cfg.denoiser.hidden_layers);
    read(n, "diffusion", "hidden_units", cfg.denoiser.hidden_units);
    read(n, "diffusion", "time_embedding_dim", cfg.denoiser.time_embedding_dim);
    read(n, "diffusion", "gain_center", cfg.denoiser.gain_center);
    read(n, "diffusion", "gain_scale", cfg.denoiser.gain_scale);
  }
  if (const auto n = root["training"]) {
    check_keys(n, "training", {"epochs", "batch_size", "learning_rate", "validation_fraction"});
    read(n, "training", "epochs", cfg.training.epochs);
    read(n, "training", "batch_size", cfg.training.batch_size);
    read(n, "training", "learning_rate", cfg.training.learning_rate);
    read(n, "training", "validation_fraction", cfg.training.validation_fraction);
  }
  if (const auto n = root["lifecycle"]) {
    check_keys(n, "lifecycle", {"t1_dataset_size", "t2_dataset_size", "eval_size", "retrain_mode",
                                "retrain_epochs"});
    read(n, "lifecycle", "t1_dataset_size", cfg.lifecycle.t1_dataset_size);
    read(n, "lifecycle", "t2_dataset_size", cfg.lifecycle.t2_dataset_size);
    read(n, "lifecycle", "eval_size", cfg.lifecycle.eval_size);
    read(n, "lifecycle", "retrain_epochs", cfg.lifecycle.retrain_epochs);
    if (n["retrain_mode"]) {
      cfg.lifecycle.retrain_mode = retrain_mode_from_string(n["retrain_mode"].as<std::string>());
    }
  }
  if (const auto n = root["drl"]) {
    check_keys(n, "drl", {"hidden_layers", "hidden_units", "log_std_min", "log_std_max",
                          "iterations_per_phase", "batch_size", "learning_rate", "entropy_weight"});
    read(n, "drl", "hidden_layers", cfg.drl.policy.hidden_layers);
    read(n, "drl", "hidden_units", cfg.drl.policy.hidden_units);
    read(n, "drl", "log_std_min", cfg.drl.policy.log_std_min);
    read(n, "drl", "log_std_max", cfg.drl.policy.log_std_max);
    read(n, "drl", "iterations_per_phase", cfg.drl.train.iterations);
    read(n, "drl", "batch_size", cfg.drl.train.batch_size);
    read(n, "drl", "learning_rate", cfg.drl.train.learning_rate);
    read(n, "drl", "entropy_weight", cfg.drl.train.entropy_weight);
  }
  // The policy shares the denoiser's gain standardization.
  cfg.drl.policy.gain_center = cfg.denoiser.gain_center;
  cfg.drl.policy.gain_scale = cfg.denoiser.gain_scale;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace aigx
