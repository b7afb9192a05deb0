#include "aigx/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace aigx::io {
namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

nlohmann::json blocks_to_json(const std::vector<GainDistribution::Block>& blocks) {
  auto arr = nlohmann::json::array();
  for (const auto& b : blocks) {
    arr.push_back({{"channels", b.count}, {"gain_lo_linear", b.lo}, {"gain_hi_linear", b.hi}});
  }
  return arr;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot move output into place at '" + path.string() + "'");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dataset_to_csv(const ExpertDataset& ds) {
  std::ostringstream os;
  const std::size_t m = ds.samples.empty() ? 0 : ds.samples.front().state.gains.size();
  for (std::size_t i = 0; i < m; ++i) os << "gain_" << i << ',';
  for (std::size_t i = 0; i < m; ++i) os << "power_" << i << ',';
  os << "sum_rate\n";
  for (const auto& s : ds.samples) {
    for (double g : s.state.gains) os << exact(g) << ',';
    for (double p : s.expert.powers) os << exact(p) << ',';
    os << exact(s.sum_rate) << '\n';
  }
  return os.str();
}

ExpertDataset dataset_from_csv(const std::string& text, const ChannelConfig& cfg,
                               std::string source_phase) {
  const auto m = static_cast<std::size_t>(cfg.num_channels);
  const std::size_t columns = 2 * m + 1;
  if (text.empty()) throw std::runtime_error("dataset is empty");
  if (text.back() != '\n') throw std::runtime_error("dataset is truncated (no final newline)");

  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (split(line, ',').size() != columns) {
    throw std::runtime_error("dataset header has " + std::to_string(split(line, ',').size()) +
                             " columns, config expects " + std::to_string(columns));
  }
  ExpertDataset ds;
  ds.source_phase = std::move(source_phase);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cells = split(line, ',');
    if (cells.size() != columns) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": expected " +
                               std::to_string(columns) + " columns, got " + std::to_string(cells.size()));
    }
    std::vector<double> values;
    values.reserve(columns);
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size() || !std::isfinite(v)) {
        throw std::runtime_error("dataset line " + std::to_string(line_no) + ": bad number '" + c + "'");
      }
      values.push_back(v);
    }
    ExpertSample s;
    s.state.gains.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(m));
    s.expert.powers.assign(values.begin() + static_cast<std::ptrdiff_t>(m), values.end() - 1);
    s.sum_rate = values.back();
    for (double g : s.state.gains) {
      if (!(g > 0.0)) throw std::runtime_error("dataset line " + std::to_string(line_no) + ": nonpositive gain");
    }
    if (!is_feasible(s.expert, cfg, 1e-9)) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": powers are not a feasible allocation for this config");
    }
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw std::runtime_error("dataset has no rows");
  return ds;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  return {
      {"seed", cfg.seed},
      {"channel",
       {{"num_channels", cfg.channel.num_channels},
        {"noise_power_linear", cfg.channel.noise_power},
        {"power_budget_linear", cfg.channel.power_budget},
        {"waterfill_tolerance", cfg.waterfill_tolerance}}},
      {"distributions", {{"t1", blocks_to_json(cfg.t1_blocks)}, {"t2", blocks_to_json(cfg.t2_blocks)}}},
      {"diffusion",
       {{"num_steps", cfg.schedule.num_steps},
        {"beta_start", cfg.schedule.beta_start},
        {"beta_end", cfg.schedule.beta_end},
        {"deterministic_last_step", cfg.schedule.deterministic_last_step},
        {"hidden_layers", cfg.denoiser.hidden_layers},
        {"hidden_units", cfg.denoiser.hidden_units},
        {"time_embedding_dim", cfg.denoiser.time_embedding_dim},
        {"hidden_activation", "silu"},
        {"gain_center", cfg.denoiser.gain_center},
        {"gain_scale", cfg.denoiser.gain_scale}}},
      {"training",
       {{"epochs", cfg.training.epochs},
        {"batch_size", cfg.training.batch_size},
        {"learning_rate", cfg.training.learning_rate},
        {"validation_fraction", cfg.training.validation_fraction}}},
      {"lifecycle",
       {{"t1_dataset_size", cfg.lifecycle.t1_dataset_size},
        {"t2_dataset_size", cfg.lifecycle.t2_dataset_size},
        {"eval_size", cfg.lifecycle.eval_size},
        {"retrain_mode", to_string(cfg.lifecycle.retrain_mode)},
        {"retrain_epochs", cfg.lifecycle.retrain_epochs}}},
      {"drl",
       {{"hidden_layers", cfg.drl.policy.hidden_layers},
        {"hidden_units", cfg.drl.policy.hidden_units},
        {"log_std_min", cfg.drl.policy.log_std_min},
        {"log_std_max", cfg.drl.policy.log_std_max},
        {"iterations_per_phase", cfg.drl.train.iterations},
        {"batch_size", cfg.drl.train.batch_size},
        {"learning_rate", cfg.drl.train.learning_rate},
        {"entropy_weight", cfg.drl.train.entropy_weight}}},
  };
}

}  // namespace aigx::io
