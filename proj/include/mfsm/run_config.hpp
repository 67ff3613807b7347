#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfsm/preprocess.hpp"
#include "mfsm/tuner.hpp"

namespace mfsm::cfg {

/// Dataset files. Single-fidelity commands read `x`/`y`; multi-fidelity
/// commands read `lf_x`/`lf_y`/`hf_x`/`hf_y`. `test_x`/`test_y` name an
/// optional external test set used in place of the held-out test bin.
struct DataPaths {
  std::optional<std::filesystem::path> x, y;
  std::optional<std::filesystem::path> lf_x, lf_y;
  std::optional<std::filesystem::path> hf_x, hf_y;
  std::optional<std::filesystem::path> test_x, test_y;
};

/// Parsed run configuration.
///
/// INI layout, `#` or `;` comments, `key = value`, comma-separated lists:
///
///   [data]        x y lf_x lf_y hf_x hf_y test_x test_y
///   [split]       train test val
///   [model]       kind (gpr|mlp) lf_kind project
///   [gpr]         kernels restarts max_iterations optimize_noise initial_noise
///   [mlp]         layers widths activation optimizer learning_rate max_epochs
///                 batch_size patience
///   [convergence] sizes
///   [run]         seed out binary_payloads verbose
///
/// Relative data paths resolve against the config file's directory.
struct RunConfig {
  DataPaths data;
  prep::SplitSpec split;
  tune::ModelSpec model;     // single-fidelity model, or the top stage of a composite
  tune::ModelSpec lf_model;  // lowest stage of a composite
  std::vector<std::size_t> convergence_sizes{8, 16, 32};
  std::string project = "model";
  std::uint64_t seed = 0;
  std::filesystem::path out = "runs";
  bool binary_payloads = false;
  bool verbose = false;

  /// Sets the split, optimizer-restart and training seeds.
  void apply_seed(std::uint64_t s);
  /// Cross-field checks (fractions, grids, sizes).
  void validate() const;
  /// Canonical INI text equivalent to this config.
  std::string to_ini() const;
};

/// Unknown sections and keys are rejected with their `section.key` path.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>",
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace mfsm::cfg
