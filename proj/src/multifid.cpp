#include "mfsm/multifid.hpp"

#include "mfsm/errors.hpp"
#include "mfsm/tensor_io.hpp"

namespace mfsm::mf {

Eigen::Index MfComposite::input_dim() const {
  if (stages.empty()) throw InputError("composite has no stages");
  return mfsm::input_dim(stages.front().model);
}

Eigen::Index MfComposite::lf_output_dim() const {
  if (stages.empty()) throw InputError("composite has no stages");
  return mfsm::output_dim(stages.front().model);
}

Eigen::Index MfComposite::hf_output_dim() const {
  if (stages.empty()) throw InputError("composite has no stages");
  return mfsm::output_dim(stages.back().model);
}

const data::ColumnLayout& MfComposite::input_layout() const {
  if (stages.empty()) throw InputError("composite has no stages");
  return stages.front().input_layout;
}

const data::ColumnLayout& MfComposite::output_layout() const {
  if (stages.empty()) throw InputError("composite has no stages");
  return stages.back().output_layout;
}

void MfComposite::validate() const {
  if (stages.empty()) throw InputError("composite has no stages (unfitted)");
  for (const auto& s : stages) s.validate();
  const Eigen::Index d = input_dim();
  for (std::size_t k = 1; k < stages.size(); ++k) {
    const Eigen::Index expected = mfsm::output_dim(stages[k - 1].model) + d;
    if (mfsm::input_dim(stages[k].model) != expected) {
      throw InputError("composite stage " + std::to_string(k) + " takes " +
                       std::to_string(mfsm::input_dim(stages[k].model)) +
                       " inputs, expected previous outputs + d = " + std::to_string(expected));
    }
  }
}

Eigen::MatrixXd MfComposite::predict_through(const Eigen::MatrixXd& x_raw,
                                             std::size_t stage_count) const {
  validate();
  if (stage_count == 0 || stage_count > stages.size()) {
    throw InputError("composite has " + std::to_string(stages.size()) + " stages");
  }
  if (x_raw.cols() != input_dim()) {
    throw InputError("composite expects " + std::to_string(input_dim()) + " inputs, got " +
                     std::to_string(x_raw.cols()));
  }
  Eigen::MatrixXd y = stages.front().predict(x_raw);
  for (std::size_t k = 1; k < stage_count; ++k) {
    Eigen::MatrixXd aug(x_raw.rows(), y.cols() + x_raw.cols());
    aug << y, x_raw;
    y = stages[k].predict(aug);
  }
  return y;
}

Eigen::MatrixXd MfComposite::predict(const Eigen::MatrixXd& x_raw) const {
  return predict_through(x_raw, stages.size());
}

data::FlatMatrix build_mf_input(const Eigen::MatrixXd& lf_prediction_raw,
                                const data::ColumnLayout& lf_layout, const data::FlatMatrix& x_raw) {
  if (lf_prediction_raw.rows() != x_raw.rows()) {
    throw InputError("LF prediction rows do not match HF input rows");
  }
  if (static_cast<std::size_t>(lf_prediction_raw.cols()) != lf_layout.width()) {
    throw InputError("LF prediction width does not match its layout");
  }
  Eigen::MatrixXd aug(x_raw.rows(), lf_prediction_raw.cols() + x_raw.cols());
  aug << lf_prediction_raw, x_raw.values();

  data::ColumnLayout layout;
  layout.coord_labels = {"0"};
  for (std::size_t c = 0; c < lf_layout.width(); ++c) {
    layout.scalar_names.push_back("lf:" + lf_layout.column_name(c));
  }
  for (std::size_t c = 0; c < x_raw.layout().width(); ++c) {
    layout.scalar_names.push_back(x_raw.layout().column_name(c));
  }
  return data::FlatMatrix(std::move(aug), std::move(layout));
}

data::FlatMatrix build_mf_input(const FittedSurrogate& lf, const data::FlatMatrix& x_raw) {
  if (x_raw.cols() != mfsm::input_dim(lf.model)) {
    throw InputError("LF model expects " + std::to_string(mfsm::input_dim(lf.model)) +
                     " inputs, HF inputs have " + std::to_string(x_raw.cols()));
  }
  return build_mf_input(lf.predict(x_raw.values()), lf.output_layout, x_raw);
}

data::FlatMatrix build_mf_input(const MfComposite& lower_levels, const data::FlatMatrix& x_raw) {
  return build_mf_input(lower_levels.predict(x_raw.values()), lower_levels.output_layout(), x_raw);
}

MfTrainResult train_n_step(const std::vector<data::FidelityDataset>& levels,
                           const prep::SplitSpec& split, const std::vector<tune::ModelSpec>& specs) {
  if (levels.size() < 2) throw InputError("multi-fidelity training needs at least two levels");
  if (specs.size() != levels.size()) throw InputError("need one model spec per fidelity level");
  const std::size_t d = levels.front().x.m() * levels.front().x.l();
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const std::size_t dk = levels[k].x.m() * levels[k].x.l();
    if (dk != d) {
      throw InputError("fidelity level " + std::to_string(k) + " has input dimension " +
                       std::to_string(dk) + ", level 0 has " + std::to_string(d));
    }
  }

  MfTrainResult result;
  {
    StageRecord rec;
    rec.prepared = prep::preprocess_data_pipeline(levels.front(), split);
    auto outcome = tune::tune(rec.prepared, specs.front());
    rec.sweep = std::move(outcome.sweep);
    result.composite.stages.push_back(std::move(outcome.winner));
    result.stages.push_back(std::move(rec));
  }
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const auto x_aug = build_mf_input(result.composite, data::flatten(levels[k].x));
    StageRecord rec;
    rec.prepared = prep::preprocess_data_pipeline(x_aug, data::flatten(levels[k].y), split);
    auto outcome = tune::tune(rec.prepared, specs[k]);
    rec.sweep = std::move(outcome.sweep);
    result.composite.stages.push_back(std::move(outcome.winner));
    result.stages.push_back(std::move(rec));
  }
  result.composite.validate();
  return result;
}

MfTrainResult train_mf(const data::FidelityDataset& lf, const data::FidelityDataset& hf,
                       const MfTrainOptions& opts) {
  return train_n_step({lf, hf}, opts.split, {opts.lf, opts.mf});
}

std::string design_sites_csv(const Eigen::MatrixXd& x_raw, const data::ColumnLayout& input_layout,
                             const Eigen::MatrixXd& y_raw, const data::ColumnLayout& output_layout) {
  std::string out;
  for (std::size_t c = 0; c < input_layout.width(); ++c) {
    if (c) out += ',';
    out += data::csv_escape(input_layout.column_name(c));
  }
  for (std::size_t c = 0; c < output_layout.width(); ++c) {
    out += ',' + data::csv_escape(output_layout.column_name(c));
  }
  out += '\n';
  for (Eigen::Index i = 0; i < x_raw.rows(); ++i) {
    for (Eigen::Index c = 0; c < x_raw.cols(); ++c) {
      if (c) out += ',';
      out += data::format_double(x_raw(i, c));
    }
    for (Eigen::Index c = 0; c < y_raw.cols(); ++c) out += ',' + data::format_double(y_raw(i, c));
    out += '\n';
  }
  return out;
}

data::DataTensor predict_at_design_sites(const MfComposite& c, const DesignSiteRequest& r) {
  c.validate();
  const auto flat = data::flatten(r.x_ds);
  if (flat.cols() != c.input_dim()) {
    throw InputError("design sites have " + std::to_string(flat.cols()) +
                     " input columns, composite expects " + std::to_string(c.input_dim()));
  }
  const Eigen::MatrixXd y = c.predict(flat.values());
  if (r.csv_path) {
    data::write_file(*r.csv_path, design_sites_csv(flat.values(), flat.layout(), y, c.output_layout()));
  }
  return data::unflatten(y, c.output_layout());
}

}  // namespace mfsm::mf
