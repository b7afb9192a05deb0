#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "aigx/config.hpp"
#include "aigx/lifecycle.hpp"

namespace aigx::io {

/// Writes to a sibling temporary file and renames it over `path`, so
/// readers never observe a partially written file. Throws
/// std::runtime_error when the target cannot be written.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Header gain_0..gain_{M-1},power_0..power_{M-1},sum_rate, then one row
/// per sample at full double precision.
std::string dataset_to_csv(const ExpertDataset& ds);

/// Parses and checks a dataset file against `cfg`: column count, numeric
/// cells, positive gains, feasible powers. Throws std::runtime_error with
/// the line number on any problem.
ExpertDataset dataset_from_csv(const std::string& text, const ChannelConfig& cfg,
                               std::string source_phase = "file");

/// Full resolved configuration as JSON (used in the run manifest).
nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace aigx::io
