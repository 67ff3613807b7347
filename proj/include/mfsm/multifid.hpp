#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mfsm/preprocess.hpp"
#include "mfsm/surrogate.hpp"
#include "mfsm/tensor.hpp"
#include "mfsm/tuner.hpp"

namespace mfsm::mf {

/// Chain of surrogates across fidelity levels.
///
/// Stage 0 maps raw inputs X to the lowest-fidelity outputs. Every later stage
/// k maps the raw augmented input [Y_{k-1}(X) | X] to its own outputs, where
/// Y_{k-1}(X) is the previous stage's inverse-transformed prediction. Each
/// stage carries its own input and output scalers. A two-level composite has
/// exactly two stages (LF then MF).
struct MfComposite {
  std::vector<FittedSurrogate> stages;

  Eigen::Index input_dim() const;
  Eigen::Index lf_output_dim() const;
  Eigen::Index hf_output_dim() const;
  const data::ColumnLayout& input_layout() const;
  const data::ColumnLayout& output_layout() const;

  /// Stage dimensions, scalers and layouts all agree.
  void validate() const;
  /// Runs the whole chain on raw inputs, returns raw outputs of the last stage.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x_raw) const;
  /// The same chain truncated after `stage_count` stages.
  Eigen::MatrixXd predict_through(const Eigen::MatrixXd& x_raw, std::size_t stage_count) const;
};

/// [lf_prediction | x] with the LF block first. Both blocks are raw units.
data::FlatMatrix build_mf_input(const Eigen::MatrixXd& lf_prediction_raw,
                                const data::ColumnLayout& lf_layout, const data::FlatMatrix& x_raw);
data::FlatMatrix build_mf_input(const FittedSurrogate& lf, const data::FlatMatrix& x_raw);
data::FlatMatrix build_mf_input(const MfComposite& lower_levels, const data::FlatMatrix& x_raw);

struct MfTrainOptions {
  prep::SplitSpec split;
  tune::ModelSpec lf;
  tune::ModelSpec mf;
};

struct StageRecord {
  prep::PreparedData prepared;
  tune::SweepResult sweep;
};

struct MfTrainResult {
  MfComposite composite;
  std::vector<StageRecord> stages;
};

/// LF preprocess -> LF tune/train -> augment HF inputs with LF predictions ->
/// preprocess augmented HF -> MF tune/train.
MfTrainResult train_mf(const data::FidelityDataset& lf, const data::FidelityDataset& hf,
                       const MfTrainOptions& opts);

/// Fold of train_mf over fidelity levels ordered low to high; `specs[k]`
/// configures level k.
MfTrainResult train_n_step(const std::vector<data::FidelityDataset>& levels,
                           const prep::SplitSpec& split, const std::vector<tune::ModelSpec>& specs);

struct DesignSiteRequest {
  data::DataTensor x_ds;
  std::optional<std::filesystem::path> csv_path;
};

/// Evaluates the chain at raw design sites; the result has the HF output
/// tensor layout. With a csv path, writes one row per site: inputs then
/// outputs.
data::DataTensor predict_at_design_sites(const MfComposite& c, const DesignSiteRequest& r);

/// Header plus one row per site: input columns followed by output columns.
std::string design_sites_csv(const Eigen::MatrixXd& x_raw, const data::ColumnLayout& input_layout,
                             const Eigen::MatrixXd& y_raw, const data::ColumnLayout& output_layout);

}  // namespace mfsm::mf
