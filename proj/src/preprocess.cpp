#include "mfsm/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfsm/errors.hpp"
#include "mfsm/rng.hpp"

namespace mfsm::prep {

void SplitSpec::validate() const {
  for (double f : {train_frac, test_frac, val_frac}) {
    if (!(f > 0.0 && f < 1.0)) {
      throw InputError("split fractions must lie in (0,1), got " + std::to_string(f));
    }
  }
  if (std::abs(train_frac + test_frac + val_frac - 1.0) > 1e-12) {
    throw InputError("split fractions must sum to 1");
  }
}

SplitIndices split_data_cv(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n < 3) {
    throw InputError("need at least 3 samples for a train/test/validation split, got " +
                     std::to_string(n));
  }
  const auto bin = [n](double frac) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frac * static_cast<double>(n))));
  };
  const std::size_t n_test = bin(spec.test_frac);
  const std::size_t n_val = bin(spec.val_frac);
  if (n_test + n_val >= n) {
    throw InputError("split of " + std::to_string(n) + " samples leaves no training rows");
  }

  const auto perm = seeded_permutation(n, spec.seed);
  SplitIndices out;
  out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test),
                 perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), perm.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

SplitIndices split_data_cv(const data::FidelityDataset& d, const SplitSpec& spec) {
  return split_data_cv(d.n(), spec);
}

StandardScaler::StandardScaler(Eigen::VectorXd means, Eigen::VectorXd stds)
    : means_(std::move(means)), stds_(std::move(stds)) {
  if (means_.size() != stds_.size()) throw InputError("scaler means/stds length mismatch");
  for (Eigen::Index j = 0; j < stds_.size(); ++j) {
    if (!std::isfinite(means_(j)) || !std::isfinite(stds_(j)) || stds_(j) < 0.0) {
      throw InputError("scaler column " + std::to_string(j) + " has invalid parameters");
    }
  }
}

StandardScaler StandardScaler::fit(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) throw InputError("cannot fit a scaler on an empty matrix");
  const double n = static_cast<double>(m.rows());
  Eigen::VectorXd means = m.colwise().sum().transpose() / n;
  // Second pass removes the rounding left by a large offset.
  for (Eigen::Index j = 0; j < m.cols(); ++j) means(j) += (m.col(j).array() - means(j)).sum() / n;
  Eigen::VectorXd stds(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double var = (m.col(j).array() - means(j)).square().sum() / n;
    double sd = std::sqrt(var);
    const double scale = std::max(std::abs(means(j)), std::numeric_limits<double>::min());
    if (sd <= 16.0 * std::numeric_limits<double>::epsilon() * scale) sd = 0.0;
    stds(j) = sd;
  }
  return StandardScaler(std::move(means), std::move(stds));
}

StandardScaler StandardScaler::identity(Eigen::Index cols) {
  return StandardScaler(Eigen::VectorXd::Zero(cols), Eigen::VectorXd::Ones(cols));
}

void StandardScaler::check_cols(const Eigen::MatrixXd& m) const {
  if (m.cols() != fitted_on()) {
    throw InputError("scaler fitted on " + std::to_string(fitted_on()) +
                     " columns applied to " + std::to_string(m.cols()));
  }
}

Eigen::MatrixXd StandardScaler::transform(const Eigen::MatrixXd& m) const {
  check_cols(m);
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (stds_(j) == 0.0) {
      out.col(j).setZero();
    } else {
      out.col(j) = (m.col(j).array() - means_(j)) / stds_(j);
    }
  }
  return out;
}

Eigen::MatrixXd StandardScaler::inverse_transform(const Eigen::MatrixXd& m) const {
  check_cols(m);
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (stds_(j) == 0.0) {
      out.col(j).setConstant(means_(j));
    } else {
      out.col(j) = m.col(j).array() * stds_(j) + means_(j);
    }
  }
  return out;
}

data::FlatMatrix StandardScaler::transform(const data::FlatMatrix& m) const {
  return data::FlatMatrix(transform(m.values()), m.layout());
}

data::FlatMatrix StandardScaler::inverse_transform(const data::FlatMatrix& m) const {
  return data::FlatMatrix(inverse_transform(m.values()), m.layout());
}

double max_relative_difference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError("max_relative_difference: shape mismatch");
  }
  double worst = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double scale = std::max({a.col(j).cwiseAbs().maxCoeff(), b.col(j).cwiseAbs().maxCoeff(),
                                   std::numeric_limits<double>::min()});
    worst = std::max(worst, (a.col(j) - b.col(j)).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

double round_trip_error(const StandardScaler& scaler, const Eigen::MatrixXd& raw) {
  const Eigen::MatrixXd back = scaler.inverse_transform(scaler.transform(raw));
  double worst = 0.0;
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double scale =
        std::max({raw.col(j).cwiseAbs().maxCoeff(), std::abs(scaler.means()(j)) + scaler.stds()(j),
                  std::numeric_limits<double>::min()});
    worst = std::max(worst, (back.col(j) - raw.col(j)).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

PreparedData preprocess_data_pipeline(const data::FlatMatrix& x, const data::FlatMatrix& y,
                                      const SplitSpec& spec) {
  if (x.rows() != y.rows()) {
    throw InputError("input has " + std::to_string(x.rows()) + " rows but output has " +
                     std::to_string(y.rows()));
  }
  PreparedData out;
  out.seed = spec.seed;
  out.split = split_data_cv(static_cast<std::size_t>(x.rows()), spec);

  const auto x_train_raw = x.select_rows(out.split.train);
  const auto y_train_raw = y.select_rows(out.split.train);
  out.x_scaler = StandardScaler::fit(x_train_raw);
  out.y_scaler = StandardScaler::fit(y_train_raw);

  const auto x_test_raw = x.select_rows(out.split.test);
  const auto x_val_raw = x.select_rows(out.split.val);
  const auto y_test_raw = y.select_rows(out.split.test);
  const auto y_val_raw = y.select_rows(out.split.val);

  out.x_train = out.x_scaler.transform(x_train_raw);
  out.x_test = out.x_scaler.transform(x_test_raw);
  out.x_val = out.x_scaler.transform(x_val_raw);
  out.y_train = out.y_scaler.transform(y_train_raw);
  out.y_test = out.y_scaler.transform(y_test_raw);
  out.y_val = out.y_scaler.transform(y_val_raw);

  for (const auto* raw : {&x_train_raw, &x_test_raw, &x_val_raw}) {
    if (round_trip_error(out.x_scaler, raw->values()) > 1e-12) {
      throw NumericError("input scaler inverse transformation does not reproduce raw data");
    }
  }
  for (const auto* raw : {&y_train_raw, &y_test_raw, &y_val_raw}) {
    if (round_trip_error(out.y_scaler, raw->values()) > 1e-12) {
      throw NumericError("output scaler inverse transformation does not reproduce raw data");
    }
  }
  return out;
}

PreparedData preprocess_data_pipeline(const data::FidelityDataset& d, const SplitSpec& spec) {
  return preprocess_data_pipeline(data::flatten(d.x), data::flatten(d.y), spec);
}

}  // namespace mfsm::prep
