#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mfsm/tensor.hpp"

namespace mfsm::prep {

struct SplitSpec {
  double train_frac = 0.70;
  double test_frac = 0.15;
  double val_frac = 0.15;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::size_t> val;
};

/// Shuffle 0..n-1 with the seeded Fisher-Yates permutation, then cut it into
/// test, validation and training blocks. Test and validation get
/// max(1, round(frac*n)) rows; training takes the remainder. Each bin is
/// returned sorted.
SplitIndices split_data_cv(std::size_t n, const SplitSpec& spec);
SplitIndices split_data_cv(const data::FidelityDataset& d, const SplitSpec& spec);

/// Per-column standardization with population (1/n) standard deviation.
/// Columns whose spread is at rounding level are treated as constant: their
/// std is stored as 0, they transform to 0 and invert to the stored mean.
class StandardScaler {
 public:
  StandardScaler() = default;
  StandardScaler(Eigen::VectorXd means, Eigen::VectorXd stds);

  static StandardScaler fit(const Eigen::MatrixXd& m);
  static StandardScaler fit(const data::FlatMatrix& m) { return fit(m.values()); }
  /// Means 0 and stds 1: transform is the identity.
  static StandardScaler identity(Eigen::Index cols);

  Eigen::MatrixXd transform(const Eigen::MatrixXd& m) const;
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& m) const;
  data::FlatMatrix transform(const data::FlatMatrix& m) const;
  data::FlatMatrix inverse_transform(const data::FlatMatrix& m) const;

  const Eigen::VectorXd& means() const { return means_; }
  const Eigen::VectorXd& stds() const { return stds_; }
  Eigen::Index fitted_on() const { return means_.size(); }
  bool fitted() const { return means_.size() > 0; }

 private:
  void check_cols(const Eigen::MatrixXd& m) const;

  Eigen::VectorXd means_;
  Eigen::VectorXd stds_;
};

struct PreparedData {
  data::FlatMatrix x_train, x_test, x_val;
  data::FlatMatrix y_train, y_test, y_val;
  StandardScaler x_scaler;
  StandardScaler y_scaler;
  SplitIndices split;
  std::uint64_t seed = 0;
};

/// Split, fit both scalers on the training rows only, scale every bin, then
/// check that inverse(transform(raw)) reproduces each raw bin to 1e-12
/// (round_trip_error). Throws NumericError if that check fails.
PreparedData preprocess_data_pipeline(const data::FidelityDataset& d, const SplitSpec& spec);
PreparedData preprocess_data_pipeline(const data::FlatMatrix& x, const data::FlatMatrix& y,
                                      const SplitSpec& spec);

/// Column-relative difference: max over columns of max_i |a-b| divided by
/// the column's largest magnitude in a or b.
double max_relative_difference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// max |inverse(transform(raw)) - raw| per column, relative to the larger of
/// the column's magnitude and |mean| + std (the scale the arithmetic runs at).
double round_trip_error(const StandardScaler& scaler, const Eigen::MatrixXd& raw);

}  // namespace mfsm::prep
