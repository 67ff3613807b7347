#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mfsm/multifid.hpp"
#include "mfsm/surrogate.hpp"

namespace mfsm::store {

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kToolVersion = "1.0.0";

/// Everything needed to rebuild a predictor from disk.
///
/// A single model bundle has one stage; an mf-composite bundle has one stage
/// per fidelity level, lowest first. `training` is free-form metadata (seed,
/// data shapes, sweep summary) copied verbatim into meta.json.
struct ModelBundle {
  std::vector<FittedSurrogate> stages;
  bool composite = false;
  std::string fidelity_level = "HF";
  nlohmann::json training = nlohmann::json::object();

  static ModelBundle single(FittedSurrogate s, std::string fidelity_level = "HF");
  static ModelBundle multi_fidelity(mf::MfComposite c);

  /// "gpr", "mlp" or "mf-composite".
  std::string model_type() const;
  const FittedSurrogate& surrogate() const;
  mf::MfComposite as_composite() const;
  const data::ColumnLayout& input_layout() const;
  const data::ColumnLayout& output_layout() const;
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x_raw) const;
  void validate() const;
};

struct SaveOptions {
  /// Write matrices as little-endian binary (.bin) instead of tensor-text.
  bool binary = false;
};

/// Writes <root>/<project>/v<N>/ with N one past the highest existing version:
///   meta.json   format_version, model_type, stages, hyperparameters, metadata
///   payload/    one file per matrix (tensor-text .txt or binary .bin)
///   CHECKSUMS   "<sha256 hex>  <relative path>" for every other file
/// Returns the version directory.
std::filesystem::path save_model(const ModelBundle& bundle, const std::filesystem::path& root,
                                 const std::string& project_name, const SaveOptions& opts = {});

/// Accepts a version directory (containing meta.json) or a project directory,
/// in which case the highest v<N> is loaded. Verifies every checksum, the
/// format version and all shapes before returning.
ModelBundle load_model(const std::filesystem::path& path);

/// Resolves a project directory to its latest version directory.
std::filesystem::path resolve_bundle_dir(const std::filesystem::path& path);

/// Parsed meta.json of a bundle directory (checksums are not verified).
nlohmann::json read_metadata(const std::filesystem::path& path);

/// Binary matrix payload: "MFSBIN01", u64 rows, u64 cols, rows*cols f64
/// row-major, all little-endian.
std::string encode_binary_matrix(const Eigen::MatrixXd& m);
Eigen::MatrixXd decode_binary_matrix(std::string_view bytes, const std::string& source);

std::string sha256_hex(std::string_view bytes);

}  // namespace mfsm::store
