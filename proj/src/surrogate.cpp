#include "mfsm/surrogate.hpp"

#include "mfsm/errors.hpp"

namespace mfsm {

std::string to_string(ModelKind k) { return k == ModelKind::gpr ? "gpr" : "mlp"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "gpr") return ModelKind::gpr;
  if (s == "mlp" || s == "dnn") return ModelKind::mlp;
  throw InputError("unknown model kind '" + s + "' (expected gpr or mlp)");
}

ModelKind kind_of(const SurrogateModel& m) {
  return std::holds_alternative<gpr::GprModel>(m) ? ModelKind::gpr : ModelKind::mlp;
}

Eigen::Index input_dim(const SurrogateModel& m) {
  if (const auto* g = std::get_if<gpr::GprModel>(&m)) return g->input_dim();
  return std::get<mlp::MlpModel>(m).arch.input_dim;
}

Eigen::Index output_dim(const SurrogateModel& m) {
  if (const auto* g = std::get_if<gpr::GprModel>(&m)) return g->output_dim();
  return std::get<mlp::MlpModel>(m).arch.output_dim;
}

Eigen::MatrixXd predict_scaled(const SurrogateModel& m, const Eigen::MatrixXd& x_scaled) {
  if (const auto* g = std::get_if<gpr::GprModel>(&m)) return gpr::gpr_predict_mean(*g, x_scaled);
  return mlp::mlp_predict(std::get<mlp::MlpModel>(m), x_scaled);
}

Eigen::MatrixXd FittedSurrogate::predict(const Eigen::MatrixXd& x_raw) const {
  if (!x_scaler.fitted() || !y_scaler.fitted()) throw InputError("surrogate has unfitted scalers");
  return y_scaler.inverse_transform(predict_scaled(model, x_scaler.transform(x_raw)));
}

void FittedSurrogate::validate() const {
  const auto d = input_dim(model);
  const auto q = output_dim(model);
  if (x_scaler.fitted_on() != d || y_scaler.fitted_on() != q) {
    throw InputError("surrogate scalers (" + std::to_string(x_scaler.fitted_on()) + ", " +
                     std::to_string(y_scaler.fitted_on()) + " columns) do not match model (" +
                     std::to_string(d) + " inputs, " + std::to_string(q) + " outputs)");
  }
  if (static_cast<Eigen::Index>(input_layout.width()) != d ||
      static_cast<Eigen::Index>(output_layout.width()) != q) {
    throw InputError("surrogate column layouts do not match model dimensions");
  }
}

data::DataTensor predict_single_fidelity(const FittedSurrogate& s, const data::DataTensor& x_ds) {
  const auto flat = data::flatten(x_ds);
  if (flat.cols() != input_dim(s.model)) {
    throw InputError("design sites have " + std::to_string(flat.cols()) +
                     " input columns, model expects " + std::to_string(input_dim(s.model)));
  }
  return data::unflatten(s.predict(flat.values()), s.output_layout);
}

}  // namespace mfsm
