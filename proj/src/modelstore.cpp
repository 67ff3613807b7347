#include "mfsm/modelstore.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <ctime>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "mfsm/errors.hpp"
#include "mfsm/tensor_io.hpp"

namespace mfsm::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "MFSBIN01";

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json layout_json(const data::ColumnLayout& l) {
  return {{"scalars", l.scalar_names}, {"coords", l.coord_labels}, {"units", l.units}};
}

data::ColumnLayout layout_from(const json& j) {
  data::ColumnLayout l;
  l.scalar_names = j.at("scalars").get<std::vector<std::string>>();
  l.coord_labels = j.at("coords").get<std::vector<std::string>>();
  l.units = j.at("units").get<std::vector<std::string>>();
  if (l.scalar_names.empty() || l.coord_labels.empty()) throw InputError("empty column layout");
  return l;
}

json kernel_json(const gpr::KernelSpec& k) {
  std::vector<double> ls(k.length_scale.data(), k.length_scale.data() + k.length_scale.size());
  return {{"kind", k.kind == gpr::KernelKind::rbf ? "rbf" : "matern"},
          {"name", k.name()},
          {"constant_scaled", k.constant_scaled},
          {"length_scale", ls},
          {"signal_variance", k.signal_variance},
          {"nu", k.nu},
          {"noise", k.noise}};
}

gpr::KernelSpec kernel_from(const json& j) {
  gpr::KernelSpec k;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "rbf") {
    k.kind = gpr::KernelKind::rbf;
  } else if (kind == "matern") {
    k.kind = gpr::KernelKind::matern;
  } else {
    throw InputError("unknown kernel kind '" + kind + "' in bundle");
  }
  k.constant_scaled = j.at("constant_scaled").get<bool>();
  const auto ls = j.at("length_scale").get<std::vector<double>>();
  k.length_scale = Eigen::Map<const Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
  k.signal_variance = j.at("signal_variance").get<double>();
  k.nu = j.at("nu").get<double>();
  k.noise = j.at("noise").get<double>();
  k.validate();
  return k;
}

Eigen::MatrixXd as_column(const Eigen::VectorXd& v) { return v; }

// Collects payload files while a bundle is being written.
class PayloadWriter {
 public:
  PayloadWriter(fs::path dir, bool binary) : dir_(std::move(dir)), binary_(binary) {}

  std::string put(const std::string& stem, const Eigen::MatrixXd& m) {
    const std::string rel = "payload/" + stem + (binary_ ? ".bin" : ".txt");
    if (binary_) {
      data::write_file(dir_ / rel, encode_binary_matrix(m));
    } else {
      data::write_matrix(m, dir_ / rel);
    }
    files_.push_back(rel);
    return rel;
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  bool binary_;
  std::vector<std::string> files_;
};

json save_stage(const FittedSurrogate& s, std::size_t index, PayloadWriter& w) {
  const std::string p = "s" + std::to_string(index) + "_";
  json st;
  st["kind"] = to_string(s.kind());
  st["input_dim"] = input_dim(s.model);
  st["output_dim"] = output_dim(s.model);
  st["input_layout"] = layout_json(s.input_layout);
  st["output_layout"] = layout_json(s.output_layout);
  json payload;
  payload["x_mean"] = w.put(p + "x_mean", as_column(s.x_scaler.means()));
  payload["x_std"] = w.put(p + "x_std", as_column(s.x_scaler.stds()));
  payload["y_mean"] = w.put(p + "y_mean", as_column(s.y_scaler.means()));
  payload["y_std"] = w.put(p + "y_std", as_column(s.y_scaler.stds()));

  if (const auto* g = std::get_if<gpr::GprModel>(&s.model)) {
    st["hyperparameters"] = kernel_json(g->kernel);
    st["lml"] = g->lml;
    st["jitter_used"] = g->jitter_used;
    st["n_train"] = g->x_train.rows();
    payload["x_train"] = w.put(p + "x_train", g->x_train);
    payload["chol"] = w.put(p + "chol", g->chol);
    payload["alpha"] = w.put(p + "alpha", g->alpha);
  } else {
    const auto& m = std::get<mlp::MlpModel>(s.model);
    std::vector<std::string> acts;
    for (auto a : m.arch.activations) acts.push_back(mlp::to_string(a));
    st["hyperparameters"] = {{"architecture", m.arch.describe()},
                             {"input_dim", m.arch.input_dim},
                             {"hidden", m.arch.hidden},
                             {"output_dim", m.arch.output_dim},
                             {"activations", acts},
                             {"parameter_count", m.arch.parameter_count()}};
    st["best_epoch"] = m.best_epoch;
    if (!m.history.empty()) {
      const auto& last = m.history.back();
      st["final_train_loss"] = last.train_loss;
      st["final_val_loss"] = last.val_loss;
      Eigen::MatrixXd h(static_cast<Eigen::Index>(m.history.size()), 3);
      for (std::size_t i = 0; i < m.history.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        h(r, 0) = m.history[i].epoch;
        h(r, 1) = m.history[i].train_loss;
        h(r, 2) = m.history[i].val_loss;
      }
      payload["history"] = w.put(p + "history", h);
    }
    json layers = json::array();
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
      const std::string li = p + "layer" + std::to_string(i) + "_";
      layers.push_back({{"weights", w.put(li + "W", m.layers[i].weights)},
                        {"bias", w.put(li + "b", as_column(m.layers[i].bias))}});
    }
    payload["layers"] = layers;
  }
  st["payload"] = payload;
  return st;
}

class PayloadReader {
 public:
  PayloadReader(fs::path dir, const std::set<std::string>& verified)
      : dir_(std::move(dir)), verified_(verified) {}

  Eigen::MatrixXd get(const json& ref) {
    const auto rel = ref.get<std::string>();
    if (rel.find("..") != std::string::npos) throw InputError("payload path escapes bundle: " + rel);
    if (!verified_.count(rel)) throw ChecksumError("payload " + rel + " has no checksum entry");
    const fs::path path = dir_ / rel;
    if (path.extension() == ".bin") return decode_binary_matrix(data::read_file(path), path.string());
    return data::read_matrix(path);
  }

  Eigen::VectorXd vector(const json& ref, Eigen::Index expected, const std::string& what) {
    const Eigen::MatrixXd m = get(ref);
    if (m.cols() != 1 || m.rows() != expected) {
      throw InputError(what + " has shape " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()) + ", expected " + std::to_string(expected) + "x1");
    }
    return m.col(0);
  }

 private:
  fs::path dir_;
  const std::set<std::string>& verified_;
};

void expect_shape(const Eigen::MatrixXd& m, Eigen::Index r, Eigen::Index c, const std::string& what) {
  if (m.rows() != r || m.cols() != c) {
    throw InputError(what + " has shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                     ", expected " + std::to_string(r) + "x" + std::to_string(c));
  }
}

FittedSurrogate load_stage(const json& st, PayloadReader& r, std::size_t index) {
  const std::string tag = "stage " + std::to_string(index) + " ";
  const auto d = st.at("input_dim").get<Eigen::Index>();
  const auto q = st.at("output_dim").get<Eigen::Index>();
  const json& payload = st.at("payload");
  for (const char* key : {"x_mean", "x_std", "y_mean", "y_std"}) {
    if (!payload.contains(key)) throw InputError(tag + "is missing scaler payload '" + key + "'");
  }

  FittedSurrogate s;
  s.input_layout = layout_from(st.at("input_layout"));
  s.output_layout = layout_from(st.at("output_layout"));
  s.x_scaler = prep::StandardScaler(r.vector(payload["x_mean"], d, tag + "x scaler means"),
                                    r.vector(payload["x_std"], d, tag + "x scaler stds"));
  s.y_scaler = prep::StandardScaler(r.vector(payload["y_mean"], q, tag + "y scaler means"),
                                    r.vector(payload["y_std"], q, tag + "y scaler stds"));

  const auto kind = model_kind_from_string(st.at("kind").get<std::string>());
  if (kind == ModelKind::gpr) {
    gpr::GprModel g;
    g.kernel = kernel_from(st.at("hyperparameters"));
    g.lml = st.at("lml").get<double>();
    g.jitter_used = st.at("jitter_used").get<double>();
    g.x_train = r.get(payload.at("x_train"));
    const Eigen::Index n = g.x_train.rows();
    expect_shape(g.x_train, n, d, tag + "x_train");
    g.chol = r.get(payload.at("chol"));
    expect_shape(g.chol, n, n, tag + "Cholesky factor");
    g.alpha = r.get(payload.at("alpha"));
    expect_shape(g.alpha, n, q, tag + "alpha");
    if (!g.kernel.isotropic() && g.kernel.length_scale.size() != d) {
      throw InputError(tag + "length-scale vector does not match input dimension");
    }
    s.model = std::move(g);
  } else {
    const json& h = st.at("hyperparameters");
    mlp::MlpModel m;
    m.arch.input_dim = h.at("input_dim").get<Eigen::Index>();
    m.arch.hidden = h.at("hidden").get<std::vector<Eigen::Index>>();
    m.arch.output_dim = h.at("output_dim").get<Eigen::Index>();
    for (const auto& a : h.at("activations")) {
      m.arch.activations.push_back(mlp::activation_from_string(a.get<std::string>()));
    }
    m.arch.validate();
    if (m.arch.input_dim != d || m.arch.output_dim != q) {
      throw InputError(tag + "architecture does not match declared dimensions");
    }
    m.best_epoch = st.value("best_epoch", 0);
    const json& layers = payload.at("layers");
    if (layers.size() != m.arch.hidden.size() + 1) {
      throw InputError(tag + "has " + std::to_string(layers.size()) + " layers, architecture needs " +
                       std::to_string(m.arch.hidden.size() + 1));
    }
    Eigen::Index fan_in = m.arch.input_dim;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const Eigen::Index out = i < m.arch.hidden.size() ? m.arch.hidden[i] : m.arch.output_dim;
      mlp::DenseLayer layer;
      layer.weights = r.get(layers[i].at("weights"));
      expect_shape(layer.weights, out, fan_in, tag + "layer " + std::to_string(i) + " weights");
      layer.bias = r.vector(layers[i].at("bias"), out, tag + "layer " + std::to_string(i) + " bias");
      layer.activation =
          i < m.arch.activations.size() ? m.arch.activations[i] : mlp::Activation::identity;
      m.layers.push_back(std::move(layer));
      fan_in = out;
    }
    if (payload.contains("history")) {
      const Eigen::MatrixXd hist = r.get(payload["history"]);
      if (hist.cols() != 3) throw InputError(tag + "training history must have 3 columns");
      for (Eigen::Index i = 0; i < hist.rows(); ++i) {
        m.history.push_back({static_cast<int>(hist(i, 0)), hist(i, 1), hist(i, 2)});
      }
    }
    s.model = std::move(m);
  }
  s.validate();
  return s;
}

std::optional<long> version_number(const fs::path& p) {
  static const std::regex re("v([0-9]+)");
  std::smatch m;
  const std::string name = p.filename().string();
  if (!std::regex_match(name, m, re)) return std::nullopt;
  return std::stol(m[1].str());
}

long latest_version(const fs::path& project_dir) {
  long best = 0;
  if (!fs::is_directory(project_dir)) return best;
  for (const auto& e : fs::directory_iterator(project_dir)) {
    if (!e.is_directory()) continue;
    if (auto v = version_number(e.path())) best = std::max(best, *v);
  }
  return best;
}

std::map<std::string, std::string> read_checksums(const fs::path& dir) {
  const fs::path path = dir / "CHECKSUMS";
  if (!fs::exists(path)) throw ChecksumError("bundle " + dir.string() + " has no CHECKSUMS file");
  std::map<std::string, std::string> out;
  std::istringstream in(data::read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto sep = line.find("  ");
    if (sep != 64) throw ChecksumError(path.string() + ":" + std::to_string(lineno) + ": malformed line");
    out[line.substr(sep + 2)] = line.substr(0, 64);
  }
  return out;
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_u64(std::string_view bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(i)]))
         << (8 * i);
  }
  return v;
}

}  // namespace

ModelBundle ModelBundle::single(FittedSurrogate s, std::string fidelity_level) {
  ModelBundle b;
  b.stages.push_back(std::move(s));
  b.fidelity_level = std::move(fidelity_level);
  return b;
}

ModelBundle ModelBundle::multi_fidelity(mf::MfComposite c) {
  ModelBundle b;
  b.stages = std::move(c.stages);
  b.composite = true;
  b.fidelity_level = "MF";
  return b;
}

std::string ModelBundle::model_type() const {
  if (composite) return "mf-composite";
  return to_string(surrogate().kind());
}

const FittedSurrogate& ModelBundle::surrogate() const {
  if (stages.size() != 1) throw InputError("bundle does not hold a single surrogate");
  return stages.front();
}

mf::MfComposite ModelBundle::as_composite() const {
  if (!composite) throw InputError("bundle does not hold a multi-fidelity composite");
  return mf::MfComposite{stages};
}

const data::ColumnLayout& ModelBundle::input_layout() const {
  if (stages.empty()) throw InputError("bundle has no stages");
  return stages.front().input_layout;
}

const data::ColumnLayout& ModelBundle::output_layout() const {
  if (stages.empty()) throw InputError("bundle has no stages");
  return stages.back().output_layout;
}

Eigen::MatrixXd ModelBundle::predict(const Eigen::MatrixXd& x_raw) const {
  if (composite) return as_composite().predict(x_raw);
  return surrogate().predict(x_raw);
}

void ModelBundle::validate() const {
  if (stages.empty()) throw InputError("bundle has no stages");
  if (composite) {
    if (stages.size() < 2) throw InputError("composite bundle needs at least two stages");
    as_composite().validate();
  } else {
    surrogate().validate();
  }
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string encode_binary_matrix(const Eigen::MatrixXd& m) {
  std::string out(kMagic);
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.reserve(out.size() + 8 * static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_u64(out, std::bit_cast<std::uint64_t>(m(i, j)));
  }
  return out;
}

Eigen::MatrixXd decode_binary_matrix(std::string_view bytes, const std::string& source) {
  if (bytes.size() < 24 || bytes.substr(0, 8) != kMagic) {
    throw InputError(source + ": not a binary matrix payload (bad magic)");
  }
  const std::uint64_t rows = get_u64(bytes, 8);
  const std::uint64_t cols = get_u64(bytes, 16);
  if (rows > (1ull << 32) || cols > (1ull << 32) || bytes.size() != 24 + 8 * rows * cols) {
    throw InputError(source + ": payload size does not match its " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " header");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t off = 24;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j, off += 8) {
      m(i, j) = std::bit_cast<double>(get_u64(bytes, off));
    }
  }
  return m;
}

fs::path save_model(const ModelBundle& bundle, const fs::path& root, const std::string& project_name,
                    const SaveOptions& opts) {
  bundle.validate();
  if (project_name.empty() || project_name.find('/') != std::string::npos) {
    throw InputError("invalid project name '" + project_name + "'");
  }
  const fs::path project_dir = root / project_name;
  fs::create_directories(project_dir);
  fs::path dir;
  for (long v = latest_version(project_dir) + 1;; ++v) {
    dir = project_dir / ("v" + std::to_string(v));
    // create_directory reports false when the directory already exists, so a
    // concurrent writer can never share a version.
    if (fs::create_directory(dir)) break;
  }
  fs::create_directories(dir / "payload");

  PayloadWriter writer(dir, opts.binary);
  json meta;
  meta["format_version"] = kFormatVersion;
  meta["model_type"] = bundle.model_type();
  meta["fidelity_level"] = bundle.fidelity_level;
  meta["tool_version"] = std::string(kToolVersion);
  meta["created_utc"] = utc_now();
  meta["payload_encoding"] = opts.binary ? "binary-le-f64" : "tensor-text";
  json stages = json::array();
  for (std::size_t k = 0; k < bundle.stages.size(); ++k) {
    stages.push_back(save_stage(bundle.stages[k], k, writer));
  }
  meta["stages"] = stages;
  meta["hyperparameters"] = stages.back()["hyperparameters"];
  if (bundle.stages.back().kind() == ModelKind::gpr) {
    meta["jitter_used"] = stages.back()["jitter_used"];
    meta["lml"] = stages.back()["lml"];
  }
  meta["training"] = bundle.training;

  const std::string meta_text = meta.dump(2) + "\n";
  data::write_file(dir / "meta.json", meta_text);

  std::string sums = sha256_hex(meta_text) + "  meta.json\n";
  for (const auto& rel : writer.files()) sums += sha256_hex(data::read_file(dir / rel)) + "  " + rel + "\n";
  data::write_file(dir / "CHECKSUMS", sums);
  return dir;
}

fs::path resolve_bundle_dir(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("model directory " + path.string() + " does not exist");
  if (fs::exists(path / "meta.json")) return path;
  const long v = latest_version(path);
  if (v == 0) throw InputError(path.string() + " holds neither meta.json nor v<N> bundle directories");
  return path / ("v" + std::to_string(v));
}

json read_metadata(const fs::path& path) {
  const fs::path dir = resolve_bundle_dir(path);
  try {
    return json::parse(data::read_file(dir / "meta.json"));
  } catch (const json::exception& e) {
    throw InputError((dir / "meta.json").string() + ": " + e.what());
  }
}

ModelBundle load_model(const fs::path& path) {
  const fs::path dir = resolve_bundle_dir(path);
  const fs::path meta_path = dir / "meta.json";
  if (!fs::exists(meta_path)) throw InputError(meta_path.string() + " is missing");
  const std::string meta_text = data::read_file(meta_path);

  // The version gate runs before checksum verification so a bundle written by
  // a newer tool is reported as such rather than as corrupt.
  json meta;
  bool parsed = true;
  try {
    meta = json::parse(meta_text);
  } catch (const json::exception&) {
    parsed = false;
  }
  if (parsed) {
    if (!meta.is_object() || !meta.contains("format_version") || !meta["format_version"].is_number_integer()) {
      throw VersionError(meta_path.string() + ": missing format_version");
    }
    const int version = meta["format_version"].get<int>();
    if (version != kFormatVersion) {
      throw VersionError(meta_path.string() + ": unsupported format_version " + std::to_string(version) +
                         " (this build reads version " + std::to_string(kFormatVersion) + ")");
    }
  }

  const auto sums = read_checksums(dir);
  if (!sums.count("meta.json")) throw ChecksumError("CHECKSUMS does not cover meta.json");
  std::set<std::string> verified;
  for (const auto& [rel, expected] : sums) {
    const fs::path file = dir / rel;
    if (!fs::exists(file)) throw ChecksumError("checksummed file " + file.string() + " is missing");
    if (sha256_hex(data::read_file(file)) != expected) {
      throw ChecksumError("checksum mismatch for " + file.string());
    }
    verified.insert(rel);
  }
  if (!parsed) throw InputError(meta_path.string() + ": invalid JSON");

  try {
    ModelBundle b;
    const auto type = meta.at("model_type").get<std::string>();
    if (type != "gpr" && type != "mlp" && type != "mf-composite") {
      throw UnsupportedModelError("unknown model_type '" + type + "'");
    }
    b.composite = type == "mf-composite";
    b.fidelity_level = meta.value("fidelity_level", std::string("HF"));
    b.training = meta.value("training", json::object());
    PayloadReader reader(dir, verified);
    const json& stages = meta.at("stages");
    for (std::size_t k = 0; k < stages.size(); ++k) b.stages.push_back(load_stage(stages[k], reader, k));
    if (!b.composite && b.model_type() != type) {
      throw InputError("model_type " + type + " does not match stage kind");
    }
    b.validate();
    return b;
  } catch (const json::exception& e) {
    throw InputError(meta_path.string() + ": " + e.what());
  }
}

}  // namespace mfsm::store
