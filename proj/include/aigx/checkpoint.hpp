#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "aigx/config.hpp"
#include "aigx/drl_baseline.hpp"
#include "aigx/gdm.hpp"
#include "aigx/nn_core.hpp"

namespace aigx {

inline constexpr int kCheckpointSchemaVersion = 1;
inline constexpr const char* kCheckpointSchema = "aigx.checkpoint";

/// Raised for unreadable, corrupt, or incompatible checkpoints.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json net_to_json(const nn::DenseNet& net);
nn::DenseNet net_from_json(const nlohmann::json& j);

/// Self-contained diffusion checkpoint: network, schedule, normalization.
struct DenoiserCheckpoint {
  gdm::Denoiser denoiser;
  ScheduleConfig schedule;
  ChannelConfig channel;
  std::uint64_t seed = 0;
};

struct PolicyCheckpoint {
  drl::PolicyModel policy;
  ChannelConfig channel;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const DenoiserCheckpoint& ckpt);
nlohmann::json to_json(const PolicyCheckpoint& ckpt);

/// Throws CheckpointError on any schema or shape problem.
DenoiserCheckpoint denoiser_from_json(const nlohmann::json& j);
PolicyCheckpoint policy_from_json(const nlohmann::json& j);

/// "gdm_denoiser" or "drl_policy"; throws CheckpointError otherwise.
std::string checkpoint_kind(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);

}  // namespace aigx
