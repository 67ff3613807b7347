#include "mfsm/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>

#include "mfsm/errors.hpp"
#include "mfsm/metrics.hpp"
#include "mfsm/rng.hpp"
#include "mfsm/tensor_io.hpp"

namespace mfsm::tune {

namespace {

using Clock = std::chrono::steady_clock;

std::string describe_kernel(const gpr::KernelSpec& k) {
  std::string s = k.name() + " l=";
  for (Eigen::Index i = 0; i < k.length_scale.size(); ++i) {
    if (i) s += ":";
    s += data::format_double(k.length_scale(i));
  }
  s += " sf2=" + data::format_double(k.signal_variance) + " noise=" + data::format_double(k.noise);
  return s;
}

struct Score {
  double rmse;
  std::optional<double> r2;
};

Score score_raw(const prep::PreparedData& p, const Eigen::MatrixXd& pred_scaled,
                const data::FlatMatrix& y_scaled) {
  const Eigen::MatrixXd truth = p.y_scaler.inverse_transform(y_scaled.values());
  const Eigen::MatrixXd pred = p.y_scaler.inverse_transform(pred_scaled);
  Score s{metrics::rmse(truth, pred), std::nullopt};
  try {
    s.r2 = metrics::r_squared(truth, pred);
  } catch (const std::exception&) {
  }
  return s;
}

FittedSurrogate wrap(SurrogateModel model, const prep::PreparedData& p) {
  FittedSurrogate f;
  f.model = std::move(model);
  f.x_scaler = p.x_scaler;
  f.y_scaler = p.y_scaler;
  f.input_layout = p.x_train.layout();
  f.output_layout = p.y_train.layout();
  return f;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? data::format_double(*v) : ""; }

}  // namespace

GprGrid GprGrid::defaults() {
  GprGrid g;
  for (auto k : {gpr::KernelSpec::rbf(), gpr::KernelSpec::matern(0.5), gpr::KernelSpec::matern(1.5),
                 gpr::KernelSpec::matern(2.5)}) {
    k.constant_scaled = true;
    k.noise = 1e-5;
    g.kernels.push_back(k);
  }
  return g;
}

std::vector<std::vector<Eigen::Index>> MlpGrid::hidden_layouts() const {
  std::vector<std::vector<Eigen::Index>> out;
  for (int count : layer_counts) {
    for (int width : widths) out.emplace_back(static_cast<std::size_t>(count), width);
  }
  return out;
}

std::size_t select_winner(const std::vector<CandidateResult>& candidates) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.failed || !std::isfinite(c.val_rmse)) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = candidates[*best];
    if (c.val_rmse < b.val_rmse - kTieTolerance) {
      best = i;
    } else if (std::abs(c.val_rmse - b.val_rmse) <= kTieTolerance && c.param_count < b.param_count) {
      best = i;
    }
  }
  if (!best) {
    std::string why;
    for (const auto& c : candidates) why += " [" + c.description + ": " + c.error + "]";
    throw NumericError("every sweep candidate failed:" + why);
  }
  return *best;
}

std::string SweepResult::to_csv() const {
  std::string out = "index,description,hyperparameters,val_rmse,val_r2,param_count,fit_seconds,failed,selected\n";
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    out += std::to_string(i) + "," + data::csv_escape(c.description) + "," +
           data::csv_escape(c.hyperparameters) + "," +
           (c.failed ? std::string() : data::format_double(c.val_rmse)) + "," + fmt_opt(c.val_r2) +
           "," + std::to_string(c.param_count) + "," + data::format_double(c.fit_seconds) + "," +
           (c.failed ? "1" : "0") + "," + (i == selected ? "1" : "0") + "\n";
  }
  return out;
}

TuneOutcome tune_gpr(const prep::PreparedData& p, const GprGrid& grid) {
  if (grid.kernels.empty()) throw InputError("GPR sweep grid is empty");
  const Eigen::MatrixXd& x = p.x_train.values();
  const Eigen::MatrixXd& y = p.y_train.values();

  TuneOutcome out;
  std::vector<std::optional<gpr::GprModel>> models;
  for (const auto& kernel : grid.kernels) {
    CandidateResult c;
    c.description = kernel.name();
    c.param_count = gpr::free_parameter_count(kernel, grid.optimize.bounds.optimize_noise);
    const auto start = Clock::now();
    try {
      const auto opt = gpr::optimize_hyperparameters(x, y, kernel, grid.optimize);
      auto model = gpr::gpr_fit(x, y, opt.best);
      const auto s = score_raw(p, gpr::gpr_predict_mean(model, p.x_val.values()), p.y_val);
      c.val_rmse = s.rmse;
      c.val_r2 = s.r2;
      c.hyperparameters = describe_kernel(opt.best) + " lml=" + data::format_double(model.lml);
      models.emplace_back(std::move(model));
    } catch (const NumericError& e) {
      c.failed = true;
      c.error = e.what();
      models.emplace_back(std::nullopt);
    }
    c.fit_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    out.sweep.candidates.push_back(std::move(c));
  }
  out.sweep.selected = select_winner(out.sweep.candidates);
  out.winner = wrap(std::move(*models[out.sweep.selected]), p);
  return out;
}

TuneOutcome tune_mlp(const prep::PreparedData& p, const MlpGrid& grid) {
  const auto layouts = grid.hidden_layouts();
  if (layouts.empty()) throw InputError("network sweep grid is empty");
  const Eigen::Index d = p.x_train.cols();
  const Eigen::Index q = p.y_train.cols();

  TuneOutcome out;
  std::vector<std::optional<mlp::MlpModel>> models;
  for (const auto& hidden : layouts) {
    const auto arch = mlp::MlpArchitecture::uniform(d, hidden, q, grid.activation);
    CandidateResult c;
    c.description = arch.describe();
    c.param_count = arch.parameter_count();
    const auto start = Clock::now();
    try {
      auto model = mlp::mlp_train(arch, grid.train, p.x_train.values(), p.y_train.values(),
                                  p.x_val.values(), p.y_val.values());
      const auto s = score_raw(p, mlp::mlp_predict(model, p.x_val.values()), p.y_val);
      c.val_rmse = s.rmse;
      c.val_r2 = s.r2;
      c.hyperparameters = arch.describe() + " best_epoch=" + std::to_string(model.best_epoch);
      models.emplace_back(std::move(model));
    } catch (const NumericError& e) {
      c.failed = true;
      c.error = e.what();
      models.emplace_back(std::nullopt);
    }
    c.fit_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    out.sweep.candidates.push_back(std::move(c));
  }
  out.sweep.selected = select_winner(out.sweep.candidates);
  out.winner = wrap(std::move(*models[out.sweep.selected]), p);
  return out;
}

TuneOutcome tune(const prep::PreparedData& p, const ModelSpec& spec) {
  return spec.kind == ModelKind::gpr ? tune_gpr(p, spec.gpr) : tune_mlp(p, spec.mlp);
}

std::string ConvergenceCurve::to_csv() const {
  std::string out = "size,test_rmse,test_r2\n";
  for (const auto& pt : points) {
    out += std::to_string(pt.size) + "," + data::format_double(pt.test_rmse) + "," +
           fmt_opt(pt.test_r2) + "\n";
  }
  return out;
}

ConvergenceCurve convergence_study(const data::FidelityDataset& d, const ModelSpec& spec,
                                   std::vector<std::size_t> sizes, const prep::SplitSpec& split) {
  if (sizes.empty()) throw InputError("convergence study needs at least one size");
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

  const auto x = data::flatten(d.x);
  const auto y = data::flatten(d.y);
  const auto bins = prep::split_data_cv(d.n(), split);
  if (sizes.front() == 0 || sizes.back() > bins.train.size()) {
    throw InputError("convergence sizes must lie in [1, " + std::to_string(bins.train.size()) +
                     "] (training bin size)");
  }
  auto order = bins.train;
  Rng rng(split.seed ^ 0xc2b2ae3d27d4eb4fULL);
  shuffle(order, rng);

  const auto x_test_raw = x.select_rows(bins.test);
  const auto y_test_raw = y.select_rows(bins.test);
  const auto x_val_raw = x.select_rows(bins.val);
  const auto y_val_raw = y.select_rows(bins.val);

  ConvergenceCurve curve;
  for (std::size_t size : sizes) {
    std::vector<std::size_t> subset(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(size));
    const auto x_sub = x.select_rows(subset);
    const auto y_sub = y.select_rows(subset);

    prep::PreparedData p;
    p.seed = split.seed;
    p.split = {subset, bins.test, bins.val};
    p.x_scaler = prep::StandardScaler::fit(x_sub);
    p.y_scaler = prep::StandardScaler::fit(y_sub);
    p.x_train = p.x_scaler.transform(x_sub);
    p.y_train = p.y_scaler.transform(y_sub);
    p.x_val = p.x_scaler.transform(x_val_raw);
    p.y_val = p.y_scaler.transform(y_val_raw);
    p.x_test = p.x_scaler.transform(x_test_raw);
    p.y_test = p.y_scaler.transform(y_test_raw);

    const auto outcome = tune(p, spec);
    const Eigen::MatrixXd pred = outcome.winner.predict(x_test_raw.values());
    ConvergencePoint pt;
    pt.size = size;
    pt.subset = std::move(subset);
    pt.test_rmse = metrics::rmse(y_test_raw.values(), pred);
    try {
      pt.test_r2 = metrics::r_squared(y_test_raw.values(), pred);
    } catch (const std::exception&) {
    }
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

}  // namespace mfsm::tune
