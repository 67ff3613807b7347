#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfsm/surrogate.hpp"
#include "mfsm/tensor.hpp"

namespace mfsm::metrics {

/// 1 - SS_res/SS_tot pooled over every entry. Throws NumericError when the
/// truth is constant and InputError on shape mismatch or fewer than 2 entries.
double r_squared(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred);
double rmse(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred);

struct QoiMetrics {
  std::string name;
  std::optional<double> r2;  // empty when this QoI's truth is constant
  double rmse = 0.0;
  double rmse_normalized = 0.0;
};

/// Global figures pool every entry after min-max normalizing each QoI block
/// by its true range; per-QoI figures are also reported in raw units.
struct EvalReport {
  std::string model_id;
  std::string hyperparameters;
  std::size_t n_points = 0;
  double r2 = 0.0;
  double rmse = 0.0;
  double rmse_raw = 0.0;
  std::vector<QoiMetrics> per_qoi;

  std::string to_text() const;
  std::string to_json() const;
};

/// Per-QoI min-max normalization of `values` using the ranges of `truth`.
/// Constant QoIs are shifted by their value with unit range.
Eigen::MatrixXd normalize_per_qoi(const Eigen::MatrixXd& values, const Eigen::MatrixXd& truth,
                                  const data::ColumnLayout& layout);

EvalReport evaluate(const Eigen::MatrixXd& y_true_raw, const Eigen::MatrixXd& y_pred_raw,
                    const data::ColumnLayout& layout, const std::string& model_id = {},
                    const std::string& hyperparameters = {});

using Predictor = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;
EvalReport evaluate(const Predictor& predict_raw, const Eigen::MatrixXd& x_test_raw,
                    const Eigen::MatrixXd& y_test_raw, const data::ColumnLayout& layout,
                    const std::string& model_id = {}, const std::string& hyperparameters = {});

/// qoi_name,true,pred,normalized_true,normalized_pred; one row per
/// (sample, QoI, coordinate), in flat row-major order.
std::string one_to_one_csv(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred,
                           const data::ColumnLayout& layout);
void one_to_one_export(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred,
                       const data::ColumnLayout& layout, const std::filesystem::path& path);

struct UqReport {
  Eigen::MatrixXd sites;       // raw inputs
  Eigen::MatrixXd mean;        // raw outputs
  Eigen::VectorXd latent_std;  // sqrt of the shared latent variance, scaled space
  Eigen::MatrixXd std;         // latent std times each output's scaler std

  std::string to_csv(const data::ColumnLayout& input_layout,
                     const data::ColumnLayout& output_layout) const;
};

/// GPR predictive standard deviation at raw sites. Throws
/// UnsupportedModelError for networks.
UqReport uq_report(const FittedSurrogate& s, const Eigen::MatrixXd& x_raw);

/// Pearson correlation between |pred - truth| and predictive std over every
/// entry. Informational only.
double error_std_correlation(const UqReport& uq, const Eigen::MatrixXd& y_true_raw);

struct Throughput {
  double predictions_per_second = 0.0;
  double seconds = 0.0;
  std::size_t predictions = 0;
};

/// Predicts each row of x on its own, `repeats` times over.
Throughput throughput_benchmark(const Predictor& predict, const Eigen::MatrixXd& x, int repeats);

}  // namespace mfsm::metrics
