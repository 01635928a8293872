#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "adamf/config.hpp"
#include "adamf/kgdata.hpp"
#include "adamf/model.hpp"

namespace adamf {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitIo = 4,
  kExitGradcheck = 5,
};

/// Dataset plus a model whose feature tables have the configured
/// modality-missing masks applied.
struct Experiment {
  TripleDataset dataset;
  Model model;
};

Experiment load_experiment(const RunConfig& config);

/// Seeds of the visual and textual masks. Identical when the mask is shared.
std::pair<std::uint64_t, std::uint64_t> missing_mask_seeds(const RunConfig& config);

struct CommandOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides output_dir
  bool deterministic = false;
};

struct EvalOptions {
  std::vector<std::size_t> ks = {1, 3, 10};
  std::string split = "test";  // or "valid"
};

// Each command reports errors on `err` and returns an ExitCode.
int cmd_train(const std::filesystem::path& config_path, const CommandOptions& options,
              std::ostream& out, std::ostream& err);
int cmd_eval(const std::filesystem::path& checkpoint_path,
             const std::filesystem::path& config_path, const EvalOptions& eval,
             const CommandOptions& options, std::ostream& out, std::ostream& err);
/// `config_path` may be empty: fixture defaults are used.
int cmd_gradcheck(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);
int cmd_dump_weights(const std::filesystem::path& checkpoint_path,
                     const std::filesystem::path& config_path, const CommandOptions& options,
                     std::ostream& out, std::ostream& err);
int cmd_mask_modality(const std::filesystem::path& config_path, Modality modality, double ratio,
                      std::optional<std::uint64_t> seed, const std::filesystem::path& output,
                      std::ostream& out, std::ostream& err);

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace adamf
