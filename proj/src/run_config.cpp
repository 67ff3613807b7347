#include "mfsm/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "mfsm/errors.hpp"
#include "mfsm/tensor_io.hpp"

namespace mfsm::cfg {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Entry {
  std::string value;
  std::size_t line;
};

class Reader {
 public:
  Reader(std::string source, fs::path base) : source_(std::move(source)), base_(std::move(base)) {}

  [[noreturn]] void fail(const std::string& key, std::size_t line, const std::string& what) const {
    throw InputError(source_ + ":" + std::to_string(line) + ": " + key + ": " + what);
  }

  double number(const std::string& key, const Entry& e) const {
    double v = 0.0;
    if (!data::parse_double(e.value, v)) fail(key, e.line, "expected a number, got '" + e.value + "'");
    return v;
  }

  std::uint64_t unsigned_int(const std::string& key, const Entry& e) const {
    std::uint64_t v = 0;
    const char* end = e.value.data() + e.value.size();
    const auto [p, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc() || p != end) fail(key, e.line, "expected a non-negative integer, got '" + e.value + "'");
    return v;
  }

  int positive_int(const std::string& key, const Entry& e) const {
    const auto v = unsigned_int(key, e);
    if (v == 0 || v > 1'000'000'000) fail(key, e.line, "expected a positive integer");
    return static_cast<int>(v);
  }

  bool boolean(const std::string& key, const Entry& e) const {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    fail(key, e.line, "expected true or false, got '" + e.value + "'");
  }

  std::vector<int> int_list(const std::string& key, const Entry& e) const {
    std::vector<int> out;
    for (const auto& item : split_list(e.value)) out.push_back(positive_int(key, Entry{item, e.line}));
    if (out.empty()) fail(key, e.line, "list is empty");
    return out;
  }

  fs::path path(const Entry& e) const {
    fs::path p(e.value);
    return p.is_relative() && !base_.empty() ? base_ / p : p;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  fs::path base_;
};

std::string kernel_token(const gpr::KernelSpec& k) {
  std::string s = k.constant_scaled ? "c*" : "";
  if (k.kind == gpr::KernelKind::rbf) return s + "rbf";
  return s + "matern:" + data::format_double(k.nu);
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_same_v<T, std::string>) {
      out += v[i];
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

}  // namespace

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  split.seed = s;
  for (auto* m : {&model, &lf_model}) {
    m->gpr.optimize.seed = s;
    m->mlp.train.seed = s;
  }
}

void RunConfig::validate() const {
  split.validate();
  for (const auto* m : {&model, &lf_model}) {
    if (m->gpr.kernels.empty()) throw InputError("gpr.kernels: list is empty");
    m->gpr.optimize.bounds.validate();
    m->mlp.train.validate();
    if (m->mlp.layer_counts.empty() || m->mlp.widths.empty()) {
      throw InputError("mlp.layers/mlp.widths: lists must not be empty");
    }
  }
  if (convergence_sizes.empty()) throw InputError("convergence.sizes: list is empty");
  for (auto s : convergence_sizes) {
    if (s == 0) throw InputError("convergence.sizes: sizes must be positive");
  }
  if (project.empty() || project.find('/') != std::string::npos) {
    throw InputError("model.project: must be a non-empty name without '/'");
  }
}

std::string RunConfig::to_ini() const {
  std::string text;
  const auto line = [&](const std::string& k, const std::string& v) { text += k + " = " + v + "\n"; };
  const auto opt = [&](const std::string& k, const std::optional<fs::path>& p) {
    if (p) line(k, p->string());
  };
  text += "[data]\n";
  opt("x", data.x);
  opt("y", data.y);
  opt("lf_x", data.lf_x);
  opt("lf_y", data.lf_y);
  opt("hf_x", data.hf_x);
  opt("hf_y", data.hf_y);
  opt("test_x", data.test_x);
  opt("test_y", data.test_y);
  text += "\n[split]\n";
  line("train", data::format_double(split.train_frac));
  line("test", data::format_double(split.test_frac));
  line("val", data::format_double(split.val_frac));
  text += "\n[model]\n";
  line("kind", to_string(model.kind));
  line("lf_kind", to_string(lf_model.kind));
  line("project", project);
  text += "\n[gpr]\n";
  std::vector<std::string> kernels;
  for (const auto& k : model.gpr.kernels) kernels.push_back(kernel_token(k));
  line("kernels", join(kernels));
  line("restarts", std::to_string(model.gpr.optimize.restarts));
  line("max_iterations", std::to_string(model.gpr.optimize.max_iterations));
  line("optimize_noise", model.gpr.optimize.bounds.optimize_noise ? "true" : "false");
  line("initial_noise", data::format_double(model.gpr.kernels.front().noise));
  text += "\n[mlp]\n";
  line("layers", join(model.mlp.layer_counts));
  line("widths", join(model.mlp.widths));
  line("activation", mlp::to_string(model.mlp.activation));
  line("optimizer", model.mlp.train.optimizer == mlp::Optimizer::adam ? "adam" : "sgd");
  line("learning_rate", data::format_double(model.mlp.train.learning_rate));
  line("max_epochs", std::to_string(model.mlp.train.max_epochs));
  line("batch_size", std::to_string(model.mlp.train.batch_size));
  line("patience", std::to_string(model.mlp.train.early_stop_patience));
  text += "\n[convergence]\n";
  line("sizes", join(convergence_sizes));
  text += "\n[run]\n";
  line("seed", std::to_string(seed));
  line("out", out.string());
  line("binary_payloads", binary_payloads ? "true" : "false");
  line("verbose", verbose ? "true" : "false");
  return text;
}

RunConfig parse_run_config(const std::string& text, const std::string& source, const fs::path& base_dir) {
  // Collect section.key -> value first so duplicates and unknown keys are
  // reported before any value is interpreted.
  std::map<std::string, Entry> entries;
  std::vector<std::string> order;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string l = trim(raw);
    if (l.empty() || l[0] == '#' || l[0] == ';') continue;
    if (l.front() == '[') {
      if (l.back() != ']') throw ParseError(source, lineno, 1, "unterminated section header");
      section = trim(l.substr(1, l.size() - 2));
      continue;
    }
    const auto eq = l.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, 1, "expected key = value");
    const std::string key = trim(l.substr(0, eq));
    if (key.empty()) throw ParseError(source, lineno, 1, "empty key");
    if (section.empty()) throw ParseError(source, lineno, 1, "key '" + key + "' outside any section");
    const std::string path = section + "." + key;
    if (entries.count(path)) throw ParseError(source, lineno, 1, "duplicate key " + path);
    entries[path] = Entry{trim(l.substr(eq + 1)), lineno};
    order.push_back(path);
  }

  RunConfig c;
  Reader r(source, base_dir);
  std::uint64_t seed = 0;
  std::optional<double> initial_noise;
  std::optional<std::vector<gpr::KernelSpec>> kernels;

  using Handler = std::function<void(const std::string&, const Entry&)>;
  const auto path_into = [&](std::optional<fs::path>& dst) -> Handler {
    return [&r, &dst](const std::string&, const Entry& e) { dst = r.path(e); };
  };
  const std::map<std::string, Handler> handlers = {
      {"data.x", path_into(c.data.x)},
      {"data.y", path_into(c.data.y)},
      {"data.lf_x", path_into(c.data.lf_x)},
      {"data.lf_y", path_into(c.data.lf_y)},
      {"data.hf_x", path_into(c.data.hf_x)},
      {"data.hf_y", path_into(c.data.hf_y)},
      {"data.test_x", path_into(c.data.test_x)},
      {"data.test_y", path_into(c.data.test_y)},
      {"split.train", [&](auto& k, auto& e) { c.split.train_frac = r.number(k, e); }},
      {"split.test", [&](auto& k, auto& e) { c.split.test_frac = r.number(k, e); }},
      {"split.val", [&](auto& k, auto& e) { c.split.val_frac = r.number(k, e); }},
      {"model.kind",
       [&](auto& k, auto& e) {
         try {
           c.model.kind = model_kind_from_string(e.value);
         } catch (const InputError& err) {
           r.fail(k, e.line, err.what());
         }
       }},
      {"model.lf_kind",
       [&](auto& k, auto& e) {
         try {
           c.lf_model.kind = model_kind_from_string(e.value);
         } catch (const InputError& err) {
           r.fail(k, e.line, err.what());
         }
       }},
      {"model.project", [&](auto&, auto& e) { c.project = e.value; }},
      {"gpr.kernels",
       [&](auto& k, auto& e) {
         std::vector<gpr::KernelSpec> ks;
         for (const auto& item : split_list(e.value)) {
           try {
             ks.push_back(gpr::parse_kernel(item));
           } catch (const InputError& err) {
             r.fail(k, e.line, err.what());
           }
         }
         if (ks.empty()) r.fail(k, e.line, "list is empty");
         kernels = std::move(ks);
       }},
      {"gpr.restarts", [&](auto& k, auto& e) { c.model.gpr.optimize.restarts = r.positive_int(k, e); }},
      {"gpr.max_iterations",
       [&](auto& k, auto& e) { c.model.gpr.optimize.max_iterations = r.positive_int(k, e); }},
      {"gpr.optimize_noise",
       [&](auto& k, auto& e) { c.model.gpr.optimize.bounds.optimize_noise = r.boolean(k, e); }},
      {"gpr.initial_noise",
       [&](auto& k, auto& e) {
         initial_noise = r.number(k, e);
         if (*initial_noise < 0.0) r.fail(k, e.line, "must be >= 0");
       }},
      {"mlp.layers", [&](auto& k, auto& e) { c.model.mlp.layer_counts = r.int_list(k, e); }},
      {"mlp.widths", [&](auto& k, auto& e) { c.model.mlp.widths = r.int_list(k, e); }},
      {"mlp.activation",
       [&](auto& k, auto& e) {
         try {
           c.model.mlp.activation = mlp::activation_from_string(e.value);
         } catch (const InputError& err) {
           r.fail(k, e.line, err.what());
         }
       }},
      {"mlp.optimizer",
       [&](auto& k, auto& e) {
         if (e.value == "adam") {
           c.model.mlp.train.optimizer = mlp::Optimizer::adam;
         } else if (e.value == "sgd") {
           c.model.mlp.train.optimizer = mlp::Optimizer::sgd;
         } else {
           r.fail(k, e.line, "expected adam or sgd");
         }
       }},
      {"mlp.learning_rate", [&](auto& k, auto& e) { c.model.mlp.train.learning_rate = r.number(k, e); }},
      {"mlp.max_epochs", [&](auto& k, auto& e) { c.model.mlp.train.max_epochs = r.positive_int(k, e); }},
      {"mlp.batch_size", [&](auto& k, auto& e) { c.model.mlp.train.batch_size = r.positive_int(k, e); }},
      {"mlp.patience",
       [&](auto& k, auto& e) { c.model.mlp.train.early_stop_patience = static_cast<int>(r.unsigned_int(k, e)); }},
      {"convergence.sizes",
       [&](auto& k, auto& e) {
         c.convergence_sizes.clear();
         for (int v : r.int_list(k, e)) c.convergence_sizes.push_back(static_cast<std::size_t>(v));
       }},
      {"run.seed", [&](auto& k, auto& e) { seed = r.unsigned_int(k, e); }},
      {"run.out", [&](auto&, auto& e) { c.out = fs::path(e.value); }},
      {"run.binary_payloads", [&](auto& k, auto& e) { c.binary_payloads = r.boolean(k, e); }},
      {"run.verbose", [&](auto& k, auto& e) { c.verbose = r.boolean(k, e); }},
  };

  for (const auto& key : order) {
    const auto it = handlers.find(key);
    const Entry& e = entries.at(key);
    if (it == handlers.end()) r.fail(key, e.line, "unknown key");
    it->second(key, e);
  }

  if (kernels) c.model.gpr.kernels = std::move(*kernels);
  if (initial_noise) {
    for (auto& k : c.model.gpr.kernels) k.noise = *initial_noise;
  }
  // Both stages share the grids; only the model family differs.
  const ModelKind lf_kind = entries.count("model.lf_kind") ? c.lf_model.kind : c.model.kind;
  c.lf_model = c.model;
  c.lf_model.kind = lf_kind;
  c.apply_seed(seed);
  try {
    c.validate();
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("config file " + path.string() + " does not exist");
  return parse_run_config(data::read_file(path), path.string(), path.parent_path());
}

}  // namespace mfsm::cfg
