#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "aigx/config.hpp"
#include "aigx/lifecycle.hpp"

namespace aigx::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kManifestSchemaVersion = 1;

enum class Phase { t1, t2 };
Phase phase_from_string(const std::string& name);

/// Resolves the configuration: file (or defaults when empty) plus command
/// line overrides.
RunConfig resolve_config(const std::string& config_path, std::optional<std::uint64_t> seed,
                         std::optional<RetrainMode> retrain_mode = std::nullopt);

struct CollectOptions {
  Phase phase = Phase::t1;
  std::optional<int> samples;  // defaults to the phase's dataset size
};

/// Writes an expert dataset CSV; returns the number of rows.
std::size_t cmd_collect(const RunConfig& cfg, const std::filesystem::path& out_path,
                        const CollectOptions& opts = {});

struct TrainOutputs {
  gdm::TrainResult result;
  std::filesystem::path checkpoint;
  std::filesystem::path loss_curve;
};

/// Trains a fresh denoiser on a dataset file. The checkpoint is written only
/// after the dataset parses and training completes.
TrainOutputs cmd_train(const RunConfig& cfg, const std::filesystem::path& dataset_path,
                       const std::filesystem::path& checkpoint_out);

struct EvaluateRow {
  std::string phase;
  std::string method;
  double mean_sum_rate = 0.0;
  double expert_sum_rate = 0.0;
  double uniform_sum_rate = 0.0;
  double ratio_to_expert = 0.0;
  double improvement_over_uniform = 0.0;

  static std::string csv_header();
  std::string csv() const;
};

/// Scores a saved denoiser or policy on fresh states from the config's
/// distribution for `phase`. Throws CheckpointError on schema problems.
EvaluateRow cmd_evaluate(const std::filesystem::path& checkpoint, const RunConfig& cfg, Phase phase);

struct LifecycleRun {
  T1Outcome t1;
  T2Outcome t2;
  T3Outcome t3;
  RunMetrics metrics;
};

/// Runs T1, T2, T3, writing each phase's artifacts into `out_dir` as soon
/// as the phase finishes. Progress goes to `log` when non-null.
LifecycleRun cmd_lifecycle(const RunConfig& cfg, const std::filesystem::path& out_dir,
                           std::ostream* log = nullptr);

/// Entry point shared by the executable; returns the process exit code.
int run_main(int argc, char** argv);

}  // namespace aigx::cli
