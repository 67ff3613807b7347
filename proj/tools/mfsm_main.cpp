// mfsm: command-line front end for the surrogate modeling pipeline.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfsm/errors.hpp"
#include "mfsm/metrics.hpp"
#include "mfsm/modelstore.hpp"
#include "mfsm/multifid.hpp"
#include "mfsm/run_config.hpp"
#include "mfsm/synthbench.hpp"
#include "mfsm/tensor_io.hpp"
#include "mfsm/tuner.hpp"

namespace fs = std::filesystem;
using namespace mfsm;

namespace {

struct Globals {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  std::optional<double> train_frac, test_frac, val_frac;
  bool verbose = false;
};

// Appends to <run>/run.log and mirrors to stderr with --verbose.
class RunLog {
 public:
  void open(const fs::path& path, bool verbose) {
    file_.open(path, std::ios::app);
    verbose_ = verbose;
  }
  void operator()(const std::string& stage, const std::string& msg) {
    const std::string line = "[" + stage + "] " + msg + "\n";
    if (file_) file_ << line << std::flush;
    if (verbose_) std::cerr << line;
  }

 private:
  std::ofstream file_;
  bool verbose_ = false;
};

// Which pipeline stage is running; prefixed to error messages.
std::string g_stage = "startup";
RunLog g_log;

void stage(const std::string& name, const std::string& msg = {}) {
  g_stage = name;
  if (!msg.empty()) g_log(name, msg);
}

struct Run {
  cfg::RunConfig config;
  fs::path dir;
};

Run open_run(const Globals& g, const std::string& command) {
  stage("config");
  Run r;
  if (g.config) r.config = cfg::load_run_config(*g.config);
  if (g.seed) r.config.apply_seed(*g.seed);
  if (g.train_frac) r.config.split.train_frac = *g.train_frac;
  if (g.test_frac) r.config.split.test_frac = *g.test_frac;
  if (g.val_frac) r.config.split.val_frac = *g.val_frac;
  r.config.validate();
  if (g.verbose) r.config.verbose = true;
  r.dir = g.out ? *g.out : r.config.out / command;
  fs::create_directories(r.dir);
  g_log.open(r.dir / "run.log", r.config.verbose);
  data::write_file(r.dir / "config.ini", r.config.to_ini());
  if (g.config) fs::copy_file(*g.config, r.dir / "config.source.ini", fs::copy_options::overwrite_existing);
  g_log("config", command + " seed=" + std::to_string(r.config.seed) + " out=" + r.dir.string());
  return r;
}

fs::path require(const std::optional<fs::path>& p, const std::string& key) {
  if (!p) throw InputError("missing data path: set " + key + " in the config or pass the flag");
  return *p;
}

data::FidelityDataset load_dataset(const fs::path& x, const fs::path& y, data::Fidelity f) {
  g_log(g_stage, "reading " + x.string() + " and " + y.string());
  auto tx = data::import_tensor(x);
  auto ty = data::import_tensor(y);
  return data::FidelityDataset(f, std::move(tx), std::move(ty), x.string() + " | " + y.string());
}

std::string describe_dataset(const data::FidelityDataset& d) {
  return std::to_string(d.n()) + " samples, inputs (" + std::to_string(d.x.m()) + "," +
         std::to_string(d.x.l()) + "), outputs (" + std::to_string(d.y.m()) + "," +
         std::to_string(d.y.l()) + ")";
}

nlohmann::json shapes_json(const data::FidelityDataset& d) {
  return {{"n", d.n()}, {"x", {d.x.m(), d.x.l()}}, {"y", {d.y.m(), d.y.l()}}};
}

struct TestSet {
  Eigen::MatrixXd x, y;
  std::string label;
};

// External test files win over the held-out test bin.
TestSet test_set(const cfg::RunConfig& c, const prep::PreparedData& p) {
  if (c.data.test_x || c.data.test_y) {
    const auto t = load_dataset(require(c.data.test_x, "data.test_x"), require(c.data.test_y, "data.test_y"),
                                data::Fidelity::other);
    return {data::flatten(t.x).values(), data::flatten(t.y).values(), "external test set"};
  }
  return {p.x_scaler.inverse_transform(p.x_test.values()), p.y_scaler.inverse_transform(p.y_test.values()),
          "held-out test bin"};
}

void write_reports(const fs::path& dir, const metrics::EvalReport& rep, const Eigen::MatrixXd& y_true,
                   const Eigen::MatrixXd& y_pred, const data::ColumnLayout& layout) {
  data::write_file(dir / "report.txt", rep.to_text());
  data::write_file(dir / "report.json", rep.to_json() + "\n");
  metrics::one_to_one_export(y_true, y_pred, layout, dir / "one_to_one.csv");
}

void write_uq(const fs::path& dir, const FittedSurrogate& s, const Eigen::MatrixXd& x) {
  if (s.kind() != ModelKind::gpr) return;
  const auto uq = metrics::uq_report(s, x);
  data::write_file(dir / "uq.csv", uq.to_csv(s.input_layout, s.output_layout));
}

std::string selected_hyper(const tune::SweepResult& s) {
  return s.candidates.at(s.selected).hyperparameters;
}

// ---------------------------------------------------------------- commands

struct IngestArgs {
  std::optional<fs::path> x, y;
  std::string fidelity = "HF";
};

int cmd_ingest(const Globals& g, const IngestArgs& a) {
  auto run = open_run(g, "ingest");
  stage("ingest", "loading data");
  const auto x = a.x ? a.x : run.config.data.x;
  const auto y = a.y ? a.y : run.config.data.y;
  const auto d = load_dataset(require(x, "data.x (--x)"), require(y, "data.y (--y)"),
                              data::fidelity_from_string(a.fidelity));
  stage("ingest", describe_dataset(d));
  data::export_tensor(d.x, run.dir / "x.txt", data::TensorFormat::tensor_text);
  data::export_tensor(d.y, run.dir / "y.txt", data::TensorFormat::tensor_text);
  const auto split = prep::split_data_cv(d, run.config.split);
  std::string summary = "fidelity: " + a.fidelity + "\n" + describe_dataset(d) + "\n";
  summary += "split (train/test/val): " + std::to_string(split.train.size()) + "/" +
             std::to_string(split.test.size()) + "/" + std::to_string(split.val.size()) + "\n";
  summary += "inputs:";
  for (const auto& n : d.x.scalar_names()) summary += " " + n;
  summary += "\noutputs:";
  for (const auto& n : d.y.scalar_names()) summary += " " + n;
  summary += "\n";
  data::write_file(run.dir / "summary.txt", summary);
  std::cout << summary;
  return 0;
}

struct TrainArgs {
  std::optional<fs::path> x, y;
  std::optional<std::string> model;
};

int cmd_train(const Globals& g, const TrainArgs& a, bool save) {
  auto run = open_run(g, save ? "train" : "tune");
  auto& c = run.config;
  if (a.x) c.data.x = a.x;
  if (a.y) c.data.y = a.y;
  if (a.model) c.model.kind = model_kind_from_string(*a.model);

  stage("ingest");
  const auto d = load_dataset(require(c.data.x, "data.x (--x)"), require(c.data.y, "data.y (--y)"),
                              data::Fidelity::high);
  g_log("ingest", describe_dataset(d));

  stage("preprocess", "split and scale");
  const auto prepared = prep::preprocess_data_pipeline(d, c.split);

  stage("tune", "sweeping " + to_string(c.model.kind) + " grid");
  const auto outcome = tune::tune(prepared, c.model);
  data::write_file(run.dir / "sweep.csv", outcome.sweep.to_csv());
  const std::string hyper = selected_hyper(outcome.sweep);
  g_log("tune", "selected " + outcome.sweep.candidates[outcome.sweep.selected].description + ": " + hyper);
  if (!save) {
    std::cout << "selected: " << hyper << "\n";
    return 0;
  }

  stage("evaluate");
  const auto test = test_set(c, prepared);
  const Eigen::MatrixXd pred = outcome.winner.predict(test.x);
  const auto rep = metrics::evaluate(test.y, pred, outcome.winner.output_layout, to_string(c.model.kind), hyper);
  write_reports(run.dir, rep, test.y, pred, outcome.winner.output_layout);
  write_uq(run.dir, outcome.winner, test.x);
  g_log("evaluate", test.label + ": R2=" + data::format_double(rep.r2) + " RMSE=" + data::format_double(rep.rmse));

  stage("save");
  auto bundle = store::ModelBundle::single(outcome.winner, "HF");
  bundle.training = {{"seed", c.seed}, {"data", shapes_json(d)},
                     {"split", {prepared.split.train.size(), prepared.split.test.size(), prepared.split.val.size()}},
                     {"selected", hyper}};
  const auto path = store::save_model(bundle, run.dir / "models", c.project, {c.binary_payloads});
  g_log("save", "bundle " + path.string());
  std::cout << rep.to_text() << "model: " << path.string() << "\n";
  return 0;
}

struct MfArgs {
  std::optional<fs::path> lf_x, lf_y, hf_x, hf_y;
};

int cmd_mf_train(const Globals& g, const MfArgs& a) {
  auto run = open_run(g, "mf-train");
  auto& c = run.config;
  if (a.lf_x) c.data.lf_x = a.lf_x;
  if (a.lf_y) c.data.lf_y = a.lf_y;
  if (a.hf_x) c.data.hf_x = a.hf_x;
  if (a.hf_y) c.data.hf_y = a.hf_y;

  stage("ingest");
  const auto lf = load_dataset(require(c.data.lf_x, "data.lf_x"), require(c.data.lf_y, "data.lf_y"),
                               data::Fidelity::low);
  const auto hf = load_dataset(require(c.data.hf_x, "data.hf_x"), require(c.data.hf_y, "data.hf_y"),
                               data::Fidelity::high);
  g_log("ingest", "LF " + describe_dataset(lf) + "; HF " + describe_dataset(hf));

  stage("train", "LF stage then MF stage");
  mf::MfTrainOptions opts{c.split, c.lf_model, c.model};
  const auto result = mf::train_mf(lf, hf, opts);
  data::write_file(run.dir / "sweep.csv", result.stages.back().sweep.to_csv());
  data::write_file(run.dir / "sweep_lf.csv", result.stages.front().sweep.to_csv());
  const std::string hyper = "LF: " + selected_hyper(result.stages.front().sweep) +
                            "; MF: " + selected_hyper(result.stages.back().sweep);
  g_log("train", hyper);

  stage("evaluate");
  TestSet test;
  if (c.data.test_x || c.data.test_y) {
    test = test_set(c, result.stages.back().prepared);
  } else {
    // Raw HF inputs of the held-out bin (the MF stage's own inputs are augmented).
    const auto x_hf = data::flatten(hf.x).select_rows(result.stages.back().prepared.split.test);
    const auto y_hf = data::flatten(hf.y).select_rows(result.stages.back().prepared.split.test);
    test = {x_hf.values(), y_hf.values(), "held-out HF test bin"};
  }
  const Eigen::MatrixXd pred = result.composite.predict(test.x);
  const auto& layout = result.composite.output_layout();
  const auto rep = metrics::evaluate(test.y, pred, layout, "mf-composite", hyper);
  write_reports(run.dir, rep, test.y, pred, layout);
  g_log("evaluate", test.label + ": R2=" + data::format_double(rep.r2) + " RMSE=" + data::format_double(rep.rmse));

  stage("save");
  auto bundle = store::ModelBundle::multi_fidelity(result.composite);
  bundle.training = {{"seed", c.seed}, {"lf_data", shapes_json(lf)}, {"hf_data", shapes_json(hf)},
                     {"selected", hyper}};
  const auto path = store::save_model(bundle, run.dir / "models", c.project, {c.binary_payloads});
  g_log("save", "bundle " + path.string());
  std::cout << rep.to_text() << "model: " << path.string() << "\n";
  return 0;
}

struct PredictArgs {
  fs::path model_dir;
  fs::path sites;
};

int cmd_predict(Globals g, const PredictArgs& a) {
  // `--out preds.csv` names the prediction file; its directory is the run directory.
  std::optional<fs::path> csv_out;
  if (g.out && g.out->extension() == ".csv") {
    csv_out = g.out;
    g.out = g.out->has_parent_path() ? g.out->parent_path() : fs::path(".");
  }
  auto run = open_run(g, "predict");
  stage("load", "model " + a.model_dir.string());
  const auto bundle = store::load_model(a.model_dir);
  stage("predict", "sites " + a.sites.string());
  const auto sites = data::import_tensor(a.sites);
  const auto flat = data::flatten(sites);
  if (flat.cols() != static_cast<Eigen::Index>(bundle.input_layout().width())) {
    throw InputError("sites have " + std::to_string(flat.cols()) + " input columns, model expects " +
                     std::to_string(bundle.input_layout().width()));
  }
  const Eigen::MatrixXd y = bundle.predict(flat.values());
  const fs::path csv = csv_out ? *csv_out : run.dir / "predictions.csv";
  data::write_file(csv, mf::design_sites_csv(flat.values(), bundle.input_layout(), y, bundle.output_layout()));
  data::export_tensor(data::unflatten(y, bundle.output_layout()), run.dir / "predictions.txt",
                      data::TensorFormat::tensor_text);
  if (!bundle.composite) write_uq(run.dir, bundle.surrogate(), flat.values());
  g_log("predict", std::to_string(y.rows()) + " sites");
  std::cout << "wrote " << csv.string() << " (" << y.rows() << " rows)\n";
  return 0;
}

struct EvaluateArgs {
  fs::path model_dir;
  std::optional<fs::path> x, y;
};

int cmd_evaluate(const Globals& g, const EvaluateArgs& a) {
  auto run = open_run(g, "evaluate");
  stage("load", "model " + a.model_dir.string());
  const auto bundle = store::load_model(a.model_dir);
  stage("evaluate");
  const auto x = a.x ? a.x : run.config.data.test_x;
  const auto y = a.y ? a.y : run.config.data.test_y;
  const auto d = load_dataset(require(x, "data.test_x (--x)"), require(y, "data.test_y (--y)"),
                              data::Fidelity::other);
  const Eigen::MatrixXd xt = data::flatten(d.x).values();
  const Eigen::MatrixXd yt = data::flatten(d.y).values();
  const Eigen::MatrixXd pred = bundle.predict(xt);
  const auto meta = store::read_metadata(a.model_dir);
  const std::string hyper = meta.contains("training") && meta["training"].contains("selected")
                                ? meta["training"]["selected"].get<std::string>()
                                : std::string();
  const auto rep = metrics::evaluate(yt, pred, bundle.output_layout(), bundle.model_type(), hyper);
  write_reports(run.dir, rep, yt, pred, bundle.output_layout());
  if (!bundle.composite) write_uq(run.dir, bundle.surrogate(), xt);
  std::cout << rep.to_text();
  return 0;
}

struct ConvergenceArgs {
  std::optional<fs::path> x, y;
  std::vector<std::size_t> sizes;
};

int cmd_convergence(const Globals& g, const ConvergenceArgs& a) {
  auto run = open_run(g, "convergence");
  auto& c = run.config;
  if (a.x) c.data.x = a.x;
  if (a.y) c.data.y = a.y;
  if (!a.sizes.empty()) c.convergence_sizes = a.sizes;
  stage("ingest");
  const auto d = load_dataset(require(c.data.x, "data.x (--x)"), require(c.data.y, "data.y (--y)"),
                              data::Fidelity::high);
  stage("convergence", "sizes " + std::to_string(c.convergence_sizes.size()));
  const auto curve = tune::convergence_study(d, c.model, c.convergence_sizes, c.split);
  data::write_file(run.dir / "convergence.csv", curve.to_csv());
  std::cout << curve.to_csv();
  return 0;
}

struct SynthArgs {
  std::string pair = "forrester";
  std::size_t n_lf = 50;
  std::size_t n_hf = 8;
  std::size_t n_test = 200;
  std::string sampler = "lhs";
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  auto run = open_run(g, "synth");
  stage("synth", a.pair + " n_lf=" + std::to_string(a.n_lf) + " n_hf=" + std::to_string(a.n_hf));
  const auto pair = synth::pair_by_name(a.pair);
  const synth::Sampler sampler{synth::sampler_from_string(a.sampler), run.config.seed};
  const auto [lf, hf] = synth::generate_pair_dataset(pair, a.n_lf, a.n_hf, sampler);

  // Uniform grid test set when n_test is a perfect power of d, else uniform random.
  Eigen::MatrixXd xt;
  try {
    xt = synth::sample({synth::SamplerKind::uniform_grid, 0}, pair.bounds, a.n_test);
  } catch (const InputError&) {
    xt = synth::sample({synth::SamplerKind::uniform_random, run.config.seed + 2}, pair.bounds, a.n_test);
  }
  const auto test = synth::make_dataset(pair, xt, synth::truth_evaluate(pair, xt), data::Fidelity::high);

  const auto put = [&](const data::DataTensor& t, const std::string& name) {
    data::export_tensor(t, run.dir / name, data::TensorFormat::tensor_text);
  };
  put(lf.x, "lf_x.txt");
  put(lf.y, "lf_y.txt");
  put(hf.x, "hf_x.txt");
  put(hf.y, "hf_y.txt");
  put(test.x, "test_x.txt");
  put(test.y, "test_y.txt");
  // Ready-made configs: single-fidelity HF and multi-fidelity training.
  const std::string common = "[split]\ntrain = 0.7\ntest = 0.15\nval = 0.15\n\n[run]\nseed = " +
                             std::to_string(run.config.seed) + "\n";
  data::write_file(run.dir / "hf.ini", "[data]\nx = hf_x.txt\ny = hf_y.txt\ntest_x = test_x.txt\n"
                                       "test_y = test_y.txt\n\n" + common);
  data::write_file(run.dir / "mf.ini", "[data]\nlf_x = lf_x.txt\nlf_y = lf_y.txt\nhf_x = hf_x.txt\n"
                                       "hf_y = hf_y.txt\ntest_x = test_x.txt\ntest_y = test_y.txt\n\n" + common);
  std::cout << "wrote " << a.pair << " data to " << run.dir.string() << "\n";
  return 0;
}

struct BenchArgs {
  fs::path model_dir;
  std::optional<fs::path> sites;
  std::size_t n = 200;
  int repeats = 5;
};

int cmd_bench(const Globals& g, const BenchArgs& a) {
  auto run = open_run(g, "bench");
  stage("load", "model " + a.model_dir.string());
  const auto bundle = store::load_model(a.model_dir);
  stage("bench");
  Eigen::MatrixXd x;
  if (a.sites) {
    x = data::flatten(data::import_tensor(*a.sites)).values();
  } else {
    // Sites spread over +-2 std of the first stage's input scaler.
    const auto& sc = bundle.stages.front().x_scaler;
    std::vector<synth::Interval> box;
    for (Eigen::Index j = 0; j < sc.means().size(); ++j) {
      const double w = sc.stds()(j) > 0.0 ? 2.0 * sc.stds()(j) : 1.0;
      box.emplace_back(sc.means()(j) - w, sc.means()(j) + w);
    }
    x = synth::sample({synth::SamplerKind::uniform_random, run.config.seed}, box, a.n);
  }
  const auto t = metrics::throughput_benchmark([&](const Eigen::MatrixXd& s) { return bundle.predict(s); }, x,
                                               a.repeats);
  const std::string text = "model_type: " + bundle.model_type() + "\nsites: " + std::to_string(x.rows()) +
                           "\npredictions: " + std::to_string(t.predictions) +
                           "\nseconds: " + data::format_double(t.seconds) +
                           "\npredictions_per_second: " + data::format_double(t.predictions_per_second) + "\n";
  data::write_file(run.dir / "bench.txt", text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mfsm: single- and multi-fidelity surrogate modeling (GPR and MLP)"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run config file (INI)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for splitting, optimizer restarts and training; overrides run.seed");
  app.add_option("--out", g.out, "Run directory (default: <run.out>/<command>)");
  app.add_option("--train-frac", g.train_frac, "Training fraction (overrides split.train)");
  app.add_option("--test-frac", g.test_frac, "Test fraction (overrides split.test)");
  app.add_option("--val-frac", g.val_frac, "Validation fraction (overrides split.val)");
  app.add_flag("--verbose,-v", g.verbose, "Echo the run log to stderr");

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest", "Validate a dataset and write canonical tensor-text copies");
  s_ingest->add_option("--x", ingest.x, "Input tensor file (tensor-text or .csv)");
  s_ingest->add_option("--y", ingest.y, "Output tensor file");
  s_ingest->add_option("--fidelity", ingest.fidelity, "Fidelity label (LF, HF or other)");

  TrainArgs train;
  auto* s_train = app.add_subcommand("train", "Preprocess, tune, train, evaluate and save a single-fidelity model");
  s_train->add_option("--x", train.x, "Input tensor file");
  s_train->add_option("--y", train.y, "Output tensor file");
  s_train->add_option("--model", train.model, "gpr or mlp (overrides model.kind)");

  TrainArgs tune_args;
  auto* s_tune = app.add_subcommand("tune", "Run the hyperparameter sweep and write sweep.csv");
  s_tune->add_option("--x", tune_args.x, "Input tensor file");
  s_tune->add_option("--y", tune_args.y, "Output tensor file");
  s_tune->add_option("--model", tune_args.model, "gpr or mlp (overrides model.kind)");

  MfArgs mfa;
  auto* s_mf = app.add_subcommand("mf-train", "Train an LF model and an MF model on [LF(x) | x]");
  s_mf->add_option("--lf-x,--lf-input", mfa.lf_x, "LF input tensor");
  s_mf->add_option("--lf-y,--lf-output", mfa.lf_y, "LF output tensor");
  s_mf->add_option("--hf-x,--hf-input", mfa.hf_x, "HF input tensor");
  s_mf->add_option("--hf-y,--hf-output", mfa.hf_y, "HF output tensor");

  PredictArgs pred;
  auto* s_pred = app.add_subcommand("predict", "Evaluate a saved model at new design sites");
  s_pred->add_option("--model-dir", pred.model_dir, "Bundle or project directory")->required();
  s_pred->add_option("--sites", pred.sites, "Design-site input tensor (tensor-text or .csv)")->required();

  EvaluateArgs eval;
  auto* s_eval = app.add_subcommand("evaluate", "Score a saved model on a labeled dataset");
  s_eval->add_option("--model-dir", eval.model_dir, "Bundle or project directory")->required();
  s_eval->add_option("--x", eval.x, "Input tensor (default data.test_x)");
  s_eval->add_option("--y", eval.y, "Output tensor (default data.test_y)");

  ConvergenceArgs conv;
  auto* s_conv = app.add_subcommand("convergence", "Test error against training-set size");
  s_conv->add_option("--x", conv.x, "Input tensor file");
  s_conv->add_option("--y", conv.y, "Output tensor file");
  s_conv->add_option("--sizes", conv.sizes, "Training sizes (overrides convergence.sizes)")->delimiter(',');

  SynthArgs syn;
  auto* s_syn = app.add_subcommand("synth", "Generate an analytic LF/HF benchmark dataset");
  s_syn->add_option("--pair", syn.pair, "forrester, trig4 or linear");
  s_syn->add_option("--n-lf", syn.n_lf, "LF sample count");
  s_syn->add_option("--n-hf", syn.n_hf, "HF sample count");
  s_syn->add_option("--n-test", syn.n_test, "Test-grid size");
  s_syn->add_option("--sampler", syn.sampler, "lhs, grid or random");

  BenchArgs bench;
  auto* s_bench = app.add_subcommand("bench", "Measure single-site prediction throughput of a saved model");
  s_bench->add_option("--model-dir", bench.model_dir, "Bundle or project directory")->required();
  s_bench->add_option("--sites", bench.sites, "Sites tensor (default: random sites around the training data)");
  s_bench->add_option("--n", bench.n, "Number of random sites");
  s_bench->add_option("--repeats", bench.repeats, "Passes over the sites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (s_ingest->parsed()) return cmd_ingest(g, ingest);
    if (s_train->parsed()) return cmd_train(g, train, true);
    if (s_tune->parsed()) return cmd_train(g, tune_args, false);
    if (s_mf->parsed()) return cmd_mf_train(g, mfa);
    if (s_pred->parsed()) return cmd_predict(g, pred);
    if (s_eval->parsed()) return cmd_evaluate(g, eval);
    if (s_conv->parsed()) return cmd_convergence(g, conv);
    if (s_syn->parsed()) return cmd_synth(g, syn);
    if (s_bench->parsed()) return cmd_bench(g, bench);
  } catch (const InputError& e) {
    g_log(g_stage, std::string("error: ") + e.what());
    std::cerr << "error [" << g_stage << "]: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    g_log(g_stage, std::string("numeric failure: ") + e.what());
    std::cerr << "numeric failure [" << g_stage << "]: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error [" << g_stage << "]: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
