#include "mfsm/tensor_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mfsm/errors.hpp"

namespace mfsm::data {

namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> split_ws(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& tok : split_ws(s)) out.emplace_back(tok.text);
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ' ';
    out += items[i];
  }
  return out;
}

double checked_value(std::string_view token, const std::string& source, std::size_t line,
                     std::size_t column) {
  double v = 0.0;
  if (!parse_double(token, v)) {
    throw ParseError(source, line, column, "non-numeric token '" + std::string(token) + "'");
  }
  if (!std::isfinite(v)) {
    throw ParseError(source, line, column, "non-finite value '" + std::string(token) + "'");
  }
  return v;
}

std::size_t parse_extent(const Token& tok, const std::string& source, std::size_t line) {
  std::size_t v = 0;
  const auto* first = tok.text.data();
  const auto* last = first + tok.text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || v == 0) {
    throw ParseError(source, line, tok.column,
                     "shape header entry '" + std::string(tok.text) +
                         "' is not a positive integer");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw InputError("failed to format value");
  return std::string(buf, ptr);
}

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const auto* first = token.data();
  const auto* last = first + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out, std::chars_format::general);
  return ec == std::errc() && ptr == last;
}

TensorFormat format_from_string(const std::string& s) {
  if (s == "tensor-text" || s == "txt" || s == "text") return TensorFormat::tensor_text;
  if (s == "csv") return TensorFormat::csv;
  throw InputError("unknown tensor format '" + s + "' (expected tensor-text or csv)");
}

TensorFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? TensorFormat::csv : TensorFormat::tensor_text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write file: " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

DataTensor import_tensor(const std::filesystem::path& path, TensorFormat format) {
  const std::string text = read_file(path);
  return format == TensorFormat::csv ? parse_tensor_csv(text, path.string())
                                     : parse_tensor_text(text, path.string());
}

DataTensor import_tensor(const std::filesystem::path& path) {
  return import_tensor(path, format_from_path(path));
}

DataTensor parse_tensor_text(std::string_view text, const std::string& source) {
  std::size_t n = 0, m = 0, l = 0;
  bool have_header = false;
  std::vector<std::string> scalar_names, coord_labels, units;
  DataTensor::Metadata metadata;
  std::vector<double> values;
  std::size_t data_rows = 0;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    std::string_view body = trim(line);
    if (body.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (body.front() == '#') {
      body.remove_prefix(1);
      const auto colon = body.find(':');
      if (colon != std::string_view::npos) {
        std::string key(trim(body.substr(0, colon)));
        std::string value(trim(body.substr(colon + 1)));
        if (key == "scalars") {
          scalar_names = words(value);
        } else if (key == "coords") {
          coord_labels = words(value);
        } else if (key == "units") {
          units = words(value);
        } else if (!key.empty()) {
          metadata.emplace_back(std::move(key), std::move(value));
        }
      }
      if (end == text.size()) break;
      continue;
    }

    const auto tokens = split_ws(line);
    if (!have_header) {
      if (tokens.size() != 3) {
        throw ParseError(source, line_no, 1, "expected shape header 'n m l'");
      }
      n = parse_extent(tokens[0], source, line_no);
      m = parse_extent(tokens[1], source, line_no);
      l = parse_extent(tokens[2], source, line_no);
      values.reserve(n * m * l);
      have_header = true;
    } else {
      ++data_rows;
      if (data_rows > n * m) {
        throw ParseError(source, line_no, 1,
                         "shape header declares " + std::to_string(n * m) +
                             " data rows but the file has more");
      }
      if (tokens.size() != l) {
        throw ParseError(source, line_no, 1,
                         "row has " + std::to_string(tokens.size()) + " values, expected " +
                             std::to_string(l) + " (coordinates must be uniform)");
      }
      for (const auto& tok : tokens) {
        values.push_back(checked_value(tok.text, source, line_no, tok.column));
      }
    }
    if (end == text.size()) break;
  }

  if (!have_header) throw ParseError(source, line_no, 1, "missing shape header 'n m l'");
  if (data_rows != n * m) {
    throw ParseError(source, line_no, 1,
                     "shape header declares " + std::to_string(n * m) + " data rows, found " +
                         std::to_string(data_rows));
  }
  if (scalar_names.empty()) scalar_names = default_layout(m, 1).scalar_names;
  if (coord_labels.empty()) coord_labels = default_layout(1, l).coord_labels;
  if (scalar_names.size() != m) {
    throw InputError(source + ": 'scalars' lists " + std::to_string(scalar_names.size()) +
                     " names for m=" + std::to_string(m));
  }
  if (coord_labels.size() != l) {
    throw InputError(source + ": 'coords' lists " + std::to_string(coord_labels.size()) +
                     " labels for l=" + std::to_string(l));
  }
  try {
    return DataTensor(n, std::move(scalar_names), std::move(coord_labels), std::move(values),
                      std::move(units), std::move(metadata));
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
}

CsvTable parse_csv(std::string_view text, const std::string& source) {
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool record_has_content = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    if (record_has_content) {
      end_field();
      if (table.header.empty() && table.rows.empty()) {
        table.header = std::move(record);
      } else {
        table.rows.push_back(std::move(record));
        table.row_lines.push_back(record_line);
      }
    }
    record.clear();
    field.clear();
    field_started = false;
    record_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (!record_has_content) record_line = line;
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          throw ParseError(source, line, field.size() + 1, "quote inside unquoted field");
        }
        in_quotes = true;
        field_started = true;
        record_has_content = true;
        break;
      case ',':
        record_has_content = true;
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field += c;
        field_started = true;
        record_has_content = true;
    }
  }
  if (in_quotes) throw ParseError(source, line, 1, "unterminated quoted field");
  end_record();
  return table;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

DataTensor parse_tensor_csv(std::string_view text, const std::string& source) {
  const CsvTable table = parse_csv(text, source);
  if (table.header.empty()) throw ParseError(source, 1, 1, "missing CSV header row");
  if (table.rows.empty()) throw ParseError(source, 2, 1, "CSV has no data rows");
  std::vector<std::string> names;
  for (const auto& h : table.header) names.emplace_back(trim(h));
  const std::size_t m = names.size();

  std::vector<double> values;
  values.reserve(table.rows.size() * m);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.row_lines[r];
    if (row.size() != m) {
      throw ParseError(source, line, 1,
                       "row has " + std::to_string(row.size()) + " fields, header has " +
                           std::to_string(m));
    }
    for (std::size_t j = 0; j < m; ++j) {
      values.push_back(checked_value(trim(row[j]), source, line, j + 1));
    }
  }
  try {
    return DataTensor(table.rows.size(), std::move(names), {"0"}, std::move(values));
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
}

std::string to_tensor_text(const DataTensor& t) {
  std::string out;
  out.reserve(t.values().size() * 20 + 256);
  out += std::to_string(t.n()) + " " + std::to_string(t.m()) + " " + std::to_string(t.l()) + "\n";
  out += "# scalars: " + join(t.scalar_names()) + "\n";
  out += "# coords: " + join(t.coord_labels()) + "\n";
  if (!t.units().empty()) out += "# units: " + join(t.units()) + "\n";
  for (const auto& [key, value] : t.metadata()) out += "# " + key + ": " + value + "\n";
  const auto& v = t.values();
  const std::size_t l = t.l();
  for (std::size_t row = 0; row < t.n() * t.m(); ++row) {
    for (std::size_t k = 0; k < l; ++k) {
      if (k) out += ' ';
      out += format_double(v[row * l + k]);
    }
    out += '\n';
  }
  return out;
}

std::string to_tensor_csv(const DataTensor& t) {
  if (t.l() != 1) {
    throw InputError("CSV export requires l=1, tensor has l=" + std::to_string(t.l()));
  }
  std::string out;
  for (std::size_t j = 0; j < t.m(); ++j) {
    if (j) out += ',';
    out += csv_escape(t.scalar_names()[j]);
  }
  out += '\n';
  for (std::size_t i = 0; i < t.n(); ++i) {
    for (std::size_t j = 0; j < t.m(); ++j) {
      if (j) out += ',';
      out += format_double(t.at(i, j, 0));
    }
    out += '\n';
  }
  return out;
}

void export_tensor(const DataTensor& t, const std::filesystem::path& path, TensorFormat format) {
  write_file(path, format == TensorFormat::csv ? to_tensor_csv(t) : to_tensor_text(t));
}

void write_matrix(const Eigen::MatrixXd& mat, const std::filesystem::path& path) {
  std::string out;
  out.reserve(static_cast<std::size_t>(mat.size()) * 20 + 32);
  out += std::to_string(mat.rows()) + " 1 " + std::to_string(mat.cols()) + "\n";
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    for (Eigen::Index j = 0; j < mat.cols(); ++j) {
      if (j) out += ' ';
      out += format_double(mat(i, j));
    }
    out += '\n';
  }
  write_file(path, out);
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  const DataTensor t = parse_tensor_text(read_file(path), path.string());
  if (t.m() != 1) throw InputError(path.string() + ": matrix payload must have m=1");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(t.n()), static_cast<Eigen::Index>(t.l()));
  for (std::size_t i = 0; i < t.n(); ++i) {
    for (std::size_t j = 0; j < t.l(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.at(i, 0, j);
    }
  }
  return out;
}

}  // namespace mfsm::data
