#include "mfsm/metrics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "mfsm/errors.hpp"
#include "mfsm/tensor_io.hpp"

namespace mfsm::metrics {

namespace {

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError("shape mismatch: (" + std::to_string(a.rows()) + "," +
                     std::to_string(a.cols()) + ") vs (" + std::to_string(b.rows()) + "," +
                     std::to_string(b.cols()) + ")");
  }
}

Eigen::MatrixXd block(const Eigen::MatrixXd& m, const data::ColumnLayout& layout, std::size_t q) {
  const auto l = static_cast<Eigen::Index>(layout.l());
  return m.middleCols(static_cast<Eigen::Index>(q) * l, l);
}

std::string fixed(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

}  // namespace

double r_squared(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred) {
  check_same_shape(y_true, y_pred);
  if (y_true.size() < 2) throw InputError("R^2 needs at least two values");
  // Row-major accumulation, the order of the one-to-one export.
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y_true.rows(); ++i) {
    for (Eigen::Index j = 0; j < y_true.cols(); ++j) sum += y_true(i, j);
  }
  const double mean = sum / static_cast<double>(y_true.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (Eigen::Index i = 0; i < y_true.rows(); ++i) {
    for (Eigen::Index j = 0; j < y_true.cols(); ++j) {
      const double dt = y_true(i, j) - mean;
      const double dr = y_true(i, j) - y_pred(i, j);
      ss_tot += dt * dt;
      ss_res += dr * dr;
    }
  }
  if (ss_tot == 0.0) throw NumericError("R^2 is undefined for constant true values");
  return 1.0 - ss_res / ss_tot;
}

double rmse(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred) {
  check_same_shape(y_true, y_pred);
  if (y_true.size() == 0) throw InputError("RMSE of an empty set");
  return std::sqrt((y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size()));
}

Eigen::MatrixXd normalize_per_qoi(const Eigen::MatrixXd& values, const Eigen::MatrixXd& truth,
                                  const data::ColumnLayout& layout) {
  check_same_shape(values, truth);
  if (static_cast<std::size_t>(truth.cols()) != layout.width()) {
    throw InputError("layout does not match output width");
  }
  Eigen::MatrixXd out(values.rows(), values.cols());
  const auto l = static_cast<Eigen::Index>(layout.l());
  for (std::size_t q = 0; q < layout.m(); ++q) {
    const auto t = block(truth, layout, q);
    const double lo = t.minCoeff();
    const double range = t.maxCoeff() - lo;
    const double scale = range > 0.0 ? range : 1.0;
    out.middleCols(static_cast<Eigen::Index>(q) * l, l) =
        (block(values, layout, q).array() - lo) / scale;
  }
  return out;
}

EvalReport evaluate(const Eigen::MatrixXd& y_true_raw, const Eigen::MatrixXd& y_pred_raw,
                    const data::ColumnLayout& layout, const std::string& model_id,
                    const std::string& hyperparameters) {
  check_same_shape(y_true_raw, y_pred_raw);
  EvalReport report;
  report.model_id = model_id;
  report.hyperparameters = hyperparameters;
  report.n_points = static_cast<std::size_t>(y_true_raw.rows());

  const Eigen::MatrixXd nt = normalize_per_qoi(y_true_raw, y_true_raw, layout);
  const Eigen::MatrixXd np = normalize_per_qoi(y_pred_raw, y_true_raw, layout);
  report.r2 = r_squared(nt, np);
  report.rmse = rmse(nt, np);
  report.rmse_raw = rmse(y_true_raw, y_pred_raw);

  for (std::size_t q = 0; q < layout.m(); ++q) {
    QoiMetrics qm;
    qm.name = layout.scalar_names[q];
    const auto t = block(y_true_raw, layout, q);
    const auto p = block(y_pred_raw, layout, q);
    if (t.size() >= 2 && t.maxCoeff() > t.minCoeff()) qm.r2 = r_squared(t, p);
    qm.rmse = rmse(t, p);
    qm.rmse_normalized = rmse(block(nt, layout, q), block(np, layout, q));
    report.per_qoi.push_back(std::move(qm));
  }
  return report;
}

EvalReport evaluate(const Predictor& predict_raw, const Eigen::MatrixXd& x_test_raw,
                    const Eigen::MatrixXd& y_test_raw, const data::ColumnLayout& layout,
                    const std::string& model_id, const std::string& hyperparameters) {
  if (x_test_raw.rows() != y_test_raw.rows()) {
    throw InputError("test inputs and outputs have different sample counts");
  }
  return evaluate(y_test_raw, predict_raw(x_test_raw), layout, model_id, hyperparameters);
}

std::string EvalReport::to_text() const {
  std::string out;
  out += "model:           " + model_id + "\n";
  if (!hyperparameters.empty()) out += "hyperparameters: " + hyperparameters + "\n";
  out += "points:          " + std::to_string(n_points) + "\n";
  out += "R2 (normalized): " + fixed(r2, 8) + "\n";
  out += "RMSE (normalized): " + fixed(rmse, 8) + "\n";
  out += "RMSE (raw):      " + data::format_double(rmse_raw) + "\n\n";
  std::size_t width = 4;
  for (const auto& q : per_qoi) width = std::max(width, q.name.size());
  const auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  out += pad("qoi", width) + "  " + pad("R2", 12) + "  " + pad("RMSE", 14) + "  RMSE(norm)\n";
  for (const auto& q : per_qoi) {
    out += pad(q.name, width) + "  " + pad(q.r2 ? fixed(*q.r2, 8) : "undefined", 12) + "  " +
           pad(data::format_double(q.rmse), 14) + "  " + fixed(q.rmse_normalized, 8) + "\n";
  }
  return out;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["model_id"] = model_id;
  j["hyperparameters"] = hyperparameters;
  j["n_points"] = n_points;
  j["r2"] = r2;
  j["rmse"] = rmse;
  j["rmse_raw"] = rmse_raw;
  j["per_qoi"] = nlohmann::json::array();
  for (const auto& q : per_qoi) {
    nlohmann::json e;
    e["name"] = q.name;
    e["r2"] = q.r2 ? nlohmann::json(*q.r2) : nlohmann::json(nullptr);
    e["rmse"] = q.rmse;
    e["rmse_normalized"] = q.rmse_normalized;
    j["per_qoi"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string one_to_one_csv(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred,
                           const data::ColumnLayout& layout) {
  const Eigen::MatrixXd nt = normalize_per_qoi(y_true, y_true, layout);
  const Eigen::MatrixXd np = normalize_per_qoi(y_pred, y_true, layout);
  std::string out = "qoi_name,true,pred,normalized_true,normalized_pred\n";
  for (Eigen::Index i = 0; i < y_true.rows(); ++i) {
    for (Eigen::Index c = 0; c < y_true.cols(); ++c) {
      out += data::csv_escape(layout.scalar_names[static_cast<std::size_t>(c) / layout.l()]);
      out += ',' + data::format_double(y_true(i, c)) + ',' + data::format_double(y_pred(i, c)) +
             ',' + data::format_double(nt(i, c)) + ',' + data::format_double(np(i, c)) + '\n';
    }
  }
  return out;
}

void one_to_one_export(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred,
                       const data::ColumnLayout& layout, const std::filesystem::path& path) {
  data::write_file(path, one_to_one_csv(y_true, y_pred, layout));
}

UqReport uq_report(const FittedSurrogate& s, const Eigen::MatrixXd& x_raw) {
  const auto* g = std::get_if<gpr::GprModel>(&s.model);
  if (g == nullptr) {
    throw UnsupportedModelError("uncertainty reports need a GPR model, got " + to_string(s.kind()));
  }
  const auto pred = gpr::gpr_predict(*g, s.x_scaler.transform(x_raw));
  UqReport r;
  r.sites = x_raw;
  r.mean = s.y_scaler.inverse_transform(pred.mean);
  r.latent_std = pred.variance.cwiseMax(0.0).cwiseSqrt();
  r.std = r.latent_std * s.y_scaler.stds().transpose();
  return r;
}

std::string UqReport::to_csv(const data::ColumnLayout& input_layout,
                             const data::ColumnLayout& output_layout) const {
  std::string out;
  for (std::size_t c = 0; c < input_layout.width(); ++c) out += data::csv_escape(input_layout.column_name(c)) + ",";
  out += "latent_std";
  for (std::size_t c = 0; c < output_layout.width(); ++c) {
    const auto name = output_layout.column_name(c);
    out += "," + data::csv_escape(name + "_mean") + "," + data::csv_escape(name + "_std");
  }
  out += "\n";
  for (Eigen::Index i = 0; i < sites.rows(); ++i) {
    for (Eigen::Index c = 0; c < sites.cols(); ++c) out += data::format_double(sites(i, c)) + ",";
    out += data::format_double(latent_std(i));
    for (Eigen::Index c = 0; c < mean.cols(); ++c) {
      out += "," + data::format_double(mean(i, c)) + "," + data::format_double(std(i, c));
    }
    out += "\n";
  }
  return out;
}

double error_std_correlation(const UqReport& uq, const Eigen::MatrixXd& y_true_raw) {
  check_same_shape(uq.mean, y_true_raw);
  const Eigen::ArrayXd err = (uq.mean - y_true_raw).cwiseAbs().reshaped();
  const Eigen::ArrayXd sd = uq.std.reshaped();
  const Eigen::ArrayXd de = err - err.mean();
  const Eigen::ArrayXd ds = sd - sd.mean();
  const double denom = std::sqrt(de.square().sum() * ds.square().sum());
  return denom > 0.0 ? (de * ds).sum() / denom : 0.0;
}

Throughput throughput_benchmark(const Predictor& predict, const Eigen::MatrixXd& x, int repeats) {
  if (repeats < 1) throw InputError("throughput benchmark needs at least one repeat");
  if (x.rows() == 0) throw InputError("throughput benchmark needs at least one site");
  Throughput t;
  double sink = 0.0;
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      sink += predict(x.row(i))(0, 0);
      ++t.predictions;
    }
  }
  const auto stop = std::chrono::steady_clock::now();
  t.seconds = std::chrono::duration<double>(stop - start).count();
  if (!std::isfinite(sink)) throw NumericError("benchmark predictions are not finite");
  t.predictions_per_second =
      static_cast<double>(t.predictions) / std::max(t.seconds, 1e-12);
  return t;
}

}  // namespace mfsm::metrics
