#pragma once

#include <string>
#include <variant>

#include <Eigen/Dense>

#include "mfsm/gpr.hpp"
#include "mfsm/mlp.hpp"
#include "mfsm/preprocess.hpp"
#include "mfsm/tensor.hpp"

namespace mfsm {

enum class ModelKind { gpr, mlp };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

using SurrogateModel = std::variant<gpr::GprModel, mlp::MlpModel>;

ModelKind kind_of(const SurrogateModel& m);
Eigen::Index input_dim(const SurrogateModel& m);
Eigen::Index output_dim(const SurrogateModel& m);
/// Forward pass in scaled space (GPR posterior mean or network output).
Eigen::MatrixXd predict_scaled(const SurrogateModel& m, const Eigen::MatrixXd& x_scaled);

/// A trained model together with the scalers it was trained behind and the
/// column layouts of its raw inputs and outputs.
struct FittedSurrogate {
  SurrogateModel model;
  prep::StandardScaler x_scaler;
  prep::StandardScaler y_scaler;
  data::ColumnLayout input_layout;
  data::ColumnLayout output_layout;

  ModelKind kind() const { return kind_of(model); }
  /// Raw inputs -> x-scaler -> model -> inverse y-scaler -> raw outputs.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x_raw) const;
  /// Checks that the scalers and layouts agree with the model dimensions.
  void validate() const;
};

/// Single-fidelity evaluation at new design sites, reshaped to the output
/// tensor layout.
data::DataTensor predict_single_fidelity(const FittedSurrogate& s, const data::DataTensor& x_ds);

}  // namespace mfsm
