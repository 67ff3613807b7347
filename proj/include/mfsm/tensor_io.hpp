#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mfsm/tensor.hpp"

namespace mfsm::data {

/// On-disk tensor formats.
///
/// tensor-text: line 1 is `n m l`; `# key: value` metadata lines and blank
/// lines may follow anywhere; then n*m data lines of l space-separated
/// decimals, sample-major then scalar-major. The reserved keys `scalars`,
/// `coords` and `units` carry the tensor's names; other keys are kept as
/// metadata.
///
/// csv: header row of scalar names, one row per sample; always l = 1.
enum class TensorFormat { tensor_text, csv };

TensorFormat format_from_string(const std::string& s);
/// Picks csv for a `.csv` extension, tensor-text otherwise.
TensorFormat format_from_path(const std::filesystem::path& path);

DataTensor import_tensor(const std::filesystem::path& path, TensorFormat format);
DataTensor import_tensor(const std::filesystem::path& path);
DataTensor parse_tensor_text(std::string_view text, const std::string& source = "<memory>");
DataTensor parse_tensor_csv(std::string_view text, const std::string& source = "<memory>");

void export_tensor(const DataTensor& t, const std::filesystem::path& path, TensorFormat format);
std::string to_tensor_text(const DataTensor& t);
std::string to_tensor_csv(const DataTensor& t);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
/// Locale-independent strict parse; accepts a leading '+'. Returns false on
/// any trailing garbage.
bool parse_double(std::string_view token, double& out);

/// RFC-4180 reader: quoted fields, doubled quotes, CRLF. Blank lines skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  // 1-based source line of each row
};
CsvTable parse_csv(std::string_view text, const std::string& source = "<memory>");
std::string csv_escape(const std::string& field);

/// Plain matrix <-> tensor-text as an (rows, 1, cols) tensor.
void write_matrix(const Eigen::MatrixXd& mat, const std::filesystem::path& path);
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace mfsm::data
