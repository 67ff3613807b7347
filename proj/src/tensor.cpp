#include "mfsm/tensor.hpp"

#include <cmath>
#include <set>

#include "mfsm/errors.hpp"

namespace mfsm::data {

namespace {

bool has_whitespace(const std::string& s) {
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return true;
  }
  return false;
}

}  // namespace

DataTensor::DataTensor(std::size_t n, std::vector<std::string> scalar_names,
                       std::vector<std::string> coord_labels, std::vector<double> values,
                       std::vector<std::string> units, Metadata metadata)
    : n_(n),
      scalar_names_(std::move(scalar_names)),
      coord_labels_(std::move(coord_labels)),
      values_(std::move(values)),
      units_(std::move(units)),
      metadata_(std::move(metadata)) {
  if (n_ == 0 || scalar_names_.empty() || coord_labels_.empty()) {
    throw InputError("tensor shape (" + std::to_string(n_) + "," +
                     std::to_string(scalar_names_.size()) + "," +
                     std::to_string(coord_labels_.size()) + ") has an empty axis");
  }
  if (values_.size() != n_ * m() * l()) {
    throw InputError("tensor payload has " + std::to_string(values_.size()) +
                     " values, shape requires " + std::to_string(n_ * m() * l()));
  }
  if (!units_.empty() && units_.size() != m()) {
    throw InputError("tensor has " + std::to_string(units_.size()) + " units for " +
                     std::to_string(m()) + " scalars");
  }
  std::set<std::string> seen;
  for (const auto& name : scalar_names_) {
    if (name.empty() || has_whitespace(name)) {
      throw InputError("invalid scalar name '" + name + "'");
    }
    if (!seen.insert(name).second) throw InputError("duplicate scalar name '" + name + "'");
  }
  for (const auto& label : coord_labels_) {
    if (label.empty() || has_whitespace(label)) {
      throw InputError("invalid coordinate label '" + label + "'");
    }
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      const std::size_t per_sample = m() * l();
      throw InputError("non-finite value at sample " + std::to_string(i / per_sample) +
                       ", scalar " + std::to_string((i % per_sample) / l()) +
                       ", coordinate " + std::to_string(i % l()));
    }
  }
}

DataTensor DataTensor::with_default_names(std::size_t n, std::size_t m, std::size_t l,
                                          std::vector<double> values) {
  auto layout = default_layout(m, l);
  return DataTensor(n, std::move(layout.scalar_names), std::move(layout.coord_labels),
                    std::move(values));
}

std::string ColumnLayout::column_name(std::size_t col) const {
  const auto& name = scalar_names.at(col / l());
  if (l() == 1) return name;
  return name + "[" + coord_labels.at(col % l()) + "]";
}

ColumnLayout default_layout(std::size_t m, std::size_t l) {
  ColumnLayout layout;
  for (std::size_t j = 0; j < m; ++j) layout.scalar_names.push_back("s" + std::to_string(j));
  for (std::size_t k = 0; k < l; ++k) layout.coord_labels.push_back(std::to_string(k));
  return layout;
}

FlatMatrix::FlatMatrix(Eigen::MatrixXd values, ColumnLayout layout)
    : values_(std::move(values)), layout_(std::move(layout)) {
  if (static_cast<std::size_t>(values_.cols()) != layout_.width()) {
    throw InputError("flat matrix has " + std::to_string(values_.cols()) +
                     " columns, layout describes " + std::to_string(layout_.width()));
  }
}

FlatMatrix FlatMatrix::select_rows(const std::vector<std::size_t>& rows) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
  }
  return FlatMatrix(std::move(out), layout_);
}

std::string to_string(Fidelity f) {
  switch (f) {
    case Fidelity::low: return "LF";
    case Fidelity::high: return "HF";
    case Fidelity::other: return "other";
  }
  return "other";
}

Fidelity fidelity_from_string(const std::string& s) {
  if (s == "LF") return Fidelity::low;
  if (s == "HF") return Fidelity::high;
  return Fidelity::other;
}

FidelityDataset::FidelityDataset(Fidelity fid, DataTensor x_in, DataTensor y_in,
                                 std::string prov)
    : fidelity(fid), x(std::move(x_in)), y(std::move(y_in)), provenance(std::move(prov)) {
  if (x.n() != y.n()) {
    throw InputError("input tensor has " + std::to_string(x.n()) +
                     " samples but output tensor has " + std::to_string(y.n()) +
                     "; the number of samples must match");
  }
}

FlatMatrix flatten(const DataTensor& t) {
  const auto rows = static_cast<Eigen::Index>(t.n());
  const auto cols = static_cast<Eigen::Index>(t.m() * t.l());
  Eigen::MatrixXd out(rows, cols);
  const auto& v = t.values();
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) out(i, c) = v[static_cast<std::size_t>(i * cols + c)];
  }
  return FlatMatrix(std::move(out), ColumnLayout{t.scalar_names(), t.coord_labels(), t.units()});
}

DataTensor unflatten(const FlatMatrix& mat, std::size_t m, std::size_t l) {
  if (m == 0 || l == 0 || static_cast<std::size_t>(mat.cols()) != m * l) {
    throw InputError("cannot unflatten " + std::to_string(mat.cols()) + " columns as " +
                     std::to_string(m) + " scalars x " + std::to_string(l) + " coordinates");
  }
  const auto& layout = mat.layout();
  if (layout.m() == m && layout.l() == l) return unflatten(mat.values(), layout);
  return unflatten(mat.values(), default_layout(m, l));
}

DataTensor unflatten(const Eigen::MatrixXd& mat, const ColumnLayout& layout) {
  if (static_cast<std::size_t>(mat.cols()) != layout.width()) {
    throw InputError("cannot unflatten " + std::to_string(mat.cols()) + " columns as " +
                     std::to_string(layout.m()) + " scalars x " + std::to_string(layout.l()) +
                     " coordinates");
  }
  std::vector<double> values(static_cast<std::size_t>(mat.size()));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) values[k++] = mat(i, c);
  }
  return DataTensor(static_cast<std::size_t>(mat.rows()), layout.scalar_names,
                    layout.coord_labels, std::move(values), layout.units);
}

}  // namespace mfsm::data
