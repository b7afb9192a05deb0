#include "aigx/checkpoint.hpp"

#include <fstream>

namespace aigx {
namespace {

using nlohmann::json;

void require_schema(const json& j, const std::string& kind) {
  if (!j.is_object() || j.value("schema", "") != kCheckpointSchema) {
    throw CheckpointError("not an aigx checkpoint");
  }
  if (j.value("schema_version", -1) != kCheckpointSchemaVersion) {
    throw CheckpointError("unsupported checkpoint schema_version " +
                          j.value("schema_version", json(nullptr)).dump());
  }
  if (j.value("kind", "") != kind) {
    throw CheckpointError("checkpoint kind is '" + j.value("kind", "") + "', expected '" + kind + "'");
  }
}

json channel_to_json(const ChannelConfig& c) {
  return {{"num_channels", c.num_channels},
          {"noise_power_linear", c.noise_power},
          {"power_budget_linear", c.power_budget}};
}

ChannelConfig channel_from_json(const json& j) {
  ChannelConfig c;
  c.num_channels = j.at("num_channels").get<int>();
  c.noise_power = j.at("noise_power_linear").get<double>();
  c.power_budget = j.at("power_budget_linear").get<double>();
  c.validate();
  return c;
}

// Wraps json/shape exceptions from a parse step into CheckpointError.
template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }
}

}  // namespace

json net_to_json(const nn::DenseNet& net) {
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto& w = net.weights[l];
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    }
    weights.push_back(std::move(flat));
    biases.push_back(std::vector<double>(net.biases[l].data(), net.biases[l].data() + net.biases[l].size()));
  }
  return {{"layer_dims", net.layer_dims},
          {"activation", nn::to_string(net.hidden_activation)},
          {"weights_row_major", std::move(weights)},
          {"biases", std::move(biases)}};
}

nn::DenseNet net_from_json(const json& j) {
  return guarded([&] {
    nn::DenseNet net;
    net.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    net.hidden_activation = nn::activation_from_string(j.at("activation").get<std::string>());
    const auto& weights = j.at("weights_row_major");
    const auto& biases = j.at("biases");
    if (net.layer_dims.size() < 2 || weights.size() != net.layer_dims.size() - 1 ||
        biases.size() != weights.size()) {
      throw CheckpointError("checkpoint layer count does not match layer_dims");
    }
    for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
      const int rows = net.layer_dims[l + 1];
      const int cols = net.layer_dims[l];
      const auto flat = weights[l].get<std::vector<double>>();
      const auto b = biases[l].get<std::vector<double>>();
      if (rows < 1 || cols < 1 || flat.size() != static_cast<std::size_t>(rows) * cols ||
          b.size() != static_cast<std::size_t>(rows)) {
        throw CheckpointError("checkpoint parameter shape mismatch at layer " + std::to_string(l));
      }
      nn::Matrix w(rows, cols);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) w(r, c) = flat[static_cast<std::size_t>(r) * cols + c];
      }
      net.weights.push_back(std::move(w));
      net.biases.push_back(Eigen::Map<const nn::Vector>(b.data(), rows));
    }
    net.validate();
    return net;
  });
}

json to_json(const DenoiserCheckpoint& ckpt) {
  const auto& d = ckpt.denoiser;
  return {{"schema", kCheckpointSchema},
          {"schema_version", kCheckpointSchemaVersion},
          {"kind", "gdm_denoiser"},
          {"seed", ckpt.seed},
          {"channel", channel_to_json(ckpt.channel)},
          {"schedule",
           {{"num_steps", ckpt.schedule.num_steps},
            {"beta_start", ckpt.schedule.beta_start},
            {"beta_end", ckpt.schedule.beta_end},
            {"deterministic_last_step", ckpt.schedule.deterministic_last_step}}},
          {"denoiser",
           {{"action_dim", d.action_dim},
            {"condition_dim", d.condition_dim},
            {"time_embedding_dim", d.time_embedding_dim},
            {"gain_center", d.gain_center},
            {"gain_scale", d.gain_scale},
            {"action_normalization", "2*p/power_budget-1"}}},
          {"network", net_to_json(d.net)}};
}

json to_json(const PolicyCheckpoint& ckpt) {
  const auto& p = ckpt.policy;
  return {{"schema", kCheckpointSchema},
          {"schema_version", kCheckpointSchemaVersion},
          {"kind", "drl_policy"},
          {"seed", ckpt.seed},
          {"channel", channel_to_json(ckpt.channel)},
          {"policy",
           {{"action_dim", p.action_dim},
            {"log_std_min", p.log_std_min},
            {"log_std_max", p.log_std_max},
            {"gain_center", p.gain_center},
            {"gain_scale", p.gain_scale}}},
          {"network", net_to_json(p.net)}};
}

std::string checkpoint_kind(const json& j) {
  if (!j.is_object() || j.value("schema", "") != kCheckpointSchema) {
    throw CheckpointError("not an aigx checkpoint");
  }
  const auto kind = j.value("kind", "");
  if (kind != "gdm_denoiser" && kind != "drl_policy") {
    throw CheckpointError("unknown checkpoint kind '" + kind + "'");
  }
  return kind;
}

DenoiserCheckpoint denoiser_from_json(const json& j) {
  require_schema(j, "gdm_denoiser");
  return guarded([&] {
    DenoiserCheckpoint c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.channel = channel_from_json(j.at("channel"));
    const auto& s = j.at("schedule");
    c.schedule.num_steps = s.at("num_steps").get<int>();
    c.schedule.beta_start = s.at("beta_start").get<double>();
    c.schedule.beta_end = s.at("beta_end").get<double>();
    c.schedule.deterministic_last_step = s.at("deterministic_last_step").get<bool>();
    gdm::make_schedule(c.schedule.num_steps, c.schedule.beta_start, c.schedule.beta_end);
    const auto& d = j.at("denoiser");
    c.denoiser.action_dim = d.at("action_dim").get<int>();
    c.denoiser.condition_dim = d.at("condition_dim").get<int>();
    c.denoiser.time_embedding_dim = d.at("time_embedding_dim").get<int>();
    c.denoiser.gain_center = d.at("gain_center").get<double>();
    c.denoiser.gain_scale = d.at("gain_scale").get<double>();
    c.denoiser.net = net_from_json(j.at("network"));
    c.denoiser.validate();
    if (c.denoiser.action_dim != c.channel.num_channels) {
      throw CheckpointError("denoiser action_dim does not match channel count");
    }
    return c;
  });
}

PolicyCheckpoint policy_from_json(const json& j) {
  require_schema(j, "drl_policy");
  return guarded([&] {
    PolicyCheckpoint c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.channel = channel_from_json(j.at("channel"));
    const auto& p = j.at("policy");
    c.policy.action_dim = p.at("action_dim").get<int>();
    c.policy.log_std_min = p.at("log_std_min").get<double>();
    c.policy.log_std_max = p.at("log_std_max").get<double>();
    c.policy.gain_center = p.at("gain_center").get<double>();
    c.policy.gain_scale = p.at("gain_scale").get<double>();
    c.policy.net = net_from_json(j.at("network"));
    c.policy.validate();
    if (c.policy.action_dim != c.channel.num_channels) {
      throw CheckpointError("policy action_dim does not match channel count");
    }
    return c;
  });
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot read checkpoint '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CheckpointError("corrupt checkpoint '" + path + "': " + e.what());
  }
}

}  // namespace aigx
