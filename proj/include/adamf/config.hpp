#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "adamf/evaluation.hpp"
#include "adamf/model.hpp"
#include "adamf/training.hpp"

namespace adamf {

/// Everything a run needs, read from a flat `key = value` file.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::filesystem::path train_path;
  std::filesystem::path valid_path;
  std::filesystem::path test_path;
  std::filesystem::path visual_path;   // empty: every entity lacks visual features
  std::filesystem::path textual_path;  // empty: every entity lacks textual features
  double modality_missing_ratio = 0.0;
  bool shared_missing_mask = true;
  std::filesystem::path output_dir = "out";

  void validate(bool require_data = true) const;
};

/// Parses config text. Relative paths resolve against `base_dir`. Unknown or
/// repeated keys and malformed values raise ConfigError. Values outside the
/// usual tuning grid are accepted; a note is appended to `warnings`.
/// `require_data` = false skips the dataset path checks (gradcheck).
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                           std::vector<std::string>* warnings = nullptr,
                           bool require_data = true);

/// Reads and parses a config file; grid warnings are logged.
RunConfig load_run_config(const std::filesystem::path& path, bool require_data = true);

/// Fully resolved config with every key, in a form parse_run_config accepts.
std::string format_run_config(const RunConfig& config);

/// Applies AMF_SEED when set.
void apply_env_overrides(RunConfig& config);

/// The recognised keys, in echo order.
const std::vector<std::string_view>& run_config_keys();

}  // namespace adamf
