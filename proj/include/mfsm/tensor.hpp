#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mfsm::data {

/// Rank-3 import layout: (samples n, scalar values m, coordinates l).
///
/// Values are stored sample-major, then scalar-major, so the buffer for one
/// sample is exactly its flattened training row. Every coordinate-resolved
/// scalar shares the same coordinate list; meshes that vary per sample are
/// not representable.
class DataTensor {
 public:
  using Metadata = std::vector<std::pair<std::string, std::string>>;

  DataTensor() = default;

  /// Validates shape, names and finiteness. Throws InputError.
  DataTensor(std::size_t n, std::vector<std::string> scalar_names,
             std::vector<std::string> coord_labels, std::vector<double> values,
             std::vector<std::string> units = {}, Metadata metadata = {});

  /// Tensor with default names s0..s(m-1) and coordinate labels 0..l-1.
  static DataTensor with_default_names(std::size_t n, std::size_t m, std::size_t l,
                                       std::vector<double> values);

  std::size_t n() const { return n_; }
  std::size_t m() const { return scalar_names_.size(); }
  std::size_t l() const { return coord_labels_.size(); }

  double at(std::size_t sample, std::size_t scalar, std::size_t coord) const {
    return values_[(sample * m() + scalar) * l() + coord];
  }

  const std::vector<double>& values() const { return values_; }
  const std::vector<std::string>& scalar_names() const { return scalar_names_; }
  const std::vector<std::string>& coord_labels() const { return coord_labels_; }
  const std::vector<std::string>& units() const { return units_; }
  const Metadata& metadata() const { return metadata_; }

  bool operator==(const DataTensor&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::string> scalar_names_;
  std::vector<std::string> coord_labels_;
  std::vector<double> values_;
  std::vector<std::string> units_;
  Metadata metadata_;
};

/// Names and coordinate labels that describe the columns of a flat matrix.
struct ColumnLayout {
  std::vector<std::string> scalar_names;
  std::vector<std::string> coord_labels;
  std::vector<std::string> units;

  std::size_t m() const { return scalar_names.size(); }
  std::size_t l() const { return coord_labels.size(); }
  std::size_t width() const { return m() * l(); }

  /// Display name for a flat column: the scalar name, suffixed with
  /// `[label]` when the layout carries more than one coordinate.
  std::string column_name(std::size_t col) const;

  bool operator==(const ColumnLayout&) const = default;
};

/// Layout with default names s0.. and coordinates 0..; used for plain matrices.
ColumnLayout default_layout(std::size_t m, std::size_t l = 1);

/// (n, m*l) training layout. Column c belongs to scalar c / l at coordinate c % l.
class FlatMatrix {
 public:
  FlatMatrix() = default;
  FlatMatrix(Eigen::MatrixXd values, ColumnLayout layout);

  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  const Eigen::MatrixXd& values() const { return values_; }
  const ColumnLayout& layout() const { return layout_; }

  std::pair<std::size_t, std::size_t> column_map(std::size_t col) const {
    return {col / layout_.l(), col % layout_.l()};
  }

  /// Same layout, selected rows in the given order.
  FlatMatrix select_rows(const std::vector<std::size_t>& rows) const;

 private:
  Eigen::MatrixXd values_;
  ColumnLayout layout_;
};

enum class Fidelity { low, high, other };

std::string to_string(Fidelity f);
Fidelity fidelity_from_string(const std::string& s);

/// Inputs and outputs of one fidelity level; sample counts must agree.
struct FidelityDataset {
  FidelityDataset() = default;
  FidelityDataset(Fidelity fidelity, DataTensor x, DataTensor y, std::string provenance = {});

  Fidelity fidelity = Fidelity::other;
  DataTensor x;
  DataTensor y;
  std::string provenance;

  std::size_t n() const { return x.n(); }
};

FlatMatrix flatten(const DataTensor& t);

/// Inverse of flatten for the given scalar count m and coordinate count l.
/// Layout names from the matrix are kept when they match (m, l).
DataTensor unflatten(const FlatMatrix& mat, std::size_t m, std::size_t l);
DataTensor unflatten(const Eigen::MatrixXd& mat, const ColumnLayout& layout);

}  // namespace mfsm::data
