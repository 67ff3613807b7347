// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// here and never adjusted at run time. Exit status is the number of failures.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "mfsm/errors.hpp"
#include "mfsm/gpr.hpp"
#include "mfsm/metrics.hpp"
#include "mfsm/mlp.hpp"
#include "mfsm/modelstore.hpp"
#include "mfsm/multifid.hpp"
#include "mfsm/preprocess.hpp"
#include "mfsm/synthbench.hpp"
#include "mfsm/tensor_io.hpp"
#include "mfsm/tuner.hpp"
#include "support.hpp"

using namespace mfsm;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// 1. Cholesky path vs explicit inverse and determinant.
Outcome gpr_oracle() {
  constexpr double kTol = 1e-8;
  constexpr double kMaxSeconds = 10.0;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = testing::random_int(rng, 1, 30);
    const auto d = testing::random_int(rng, 1, 4);
    const auto q = testing::random_int(rng, 1, 3);
    const double ell = testing::random_real(rng, 0.3, 3.0);
    const double sf2 = testing::random_real(rng, 0.5, 2.0);
    const double noise = std::pow(10.0, testing::random_real(rng, -4.0, -1.0));
    const double nus[] = {0.0, 0.5, 1.5, 2.5};
    const double nu = nus[testing::random_int(rng, 0, 3)];
    const auto spec = nu == 0.0 ? gpr::KernelSpec::rbf(ell, sf2, noise) : gpr::KernelSpec::matern(nu, ell, sf2, noise);
    const Eigen::MatrixXd x = testing::random_matrix(rng, n, d, -2.0, 2.0);
    const Eigen::MatrixXd y = testing::random_matrix(rng, n, q, -3.0, 3.0);
    const Eigen::MatrixXd xs = testing::random_matrix(rng, 10, d, -3.0, 3.0);
    const auto m = gpr::gpr_fit(x, y, spec);
    const auto p = gpr::gpr_predict(m, xs);
    const auto ref = testing::ref_gp(x, y, xs, ell, sf2, nu, noise);
    worst = std::max({worst, testing::max_rel_err(p.mean, ref.mean), testing::max_rel_err(p.variance, ref.variance),
                      testing::rel_err(m.lml, ref.lml)});
  }
  const double secs = seconds_since(t0);
  return {worst < kTol && secs < kMaxSeconds, "max rel err " + fmt(worst) + ", " + fmt(secs) + " s"};
}

// 2. Noise-free interpolation.
// K alpha in double carries roughly eps * cond(K) absolute error, so designs are
// kept to cond(K) <= 1e8 by halving the length scale. The count is reported.
Outcome gpr_interpolation() {
  constexpr double kMeanTol = 1e-6;
  constexpr double kVarTol = 1e-8;
  constexpr double kMaxCond = 1e8;
  std::mt19937_64 rng(5);
  double mean_err = 0.0, var_max = 0.0, cond_max = 0.0;
  int shortened = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = testing::random_int(rng, 1, 3);
    const auto x = synth::sample({synth::SamplerKind::latin_hypercube, rng()},
                                 std::vector<synth::Interval>(static_cast<std::size_t>(d), {0.0, 1.0}), 12);
    const Eigen::MatrixXd y = testing::random_matrix(rng, 12, 2);
    double ell = 0.3;
    double cond = 0.0;
    for (;;) {
      const Eigen::MatrixXd k = testing::ref_cov(x, x, ell, 1.0, 0.0);
      const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues();
      cond = ev.maxCoeff() / ev.minCoeff();
      if (ev.minCoeff() > 0.0 && cond <= kMaxCond) break;
      ell *= 0.5;
    }
    if (ell != 0.3) ++shortened;
    cond_max = std::max(cond_max, cond);
    const auto m = gpr::gpr_fit(x, y, gpr::KernelSpec::rbf(ell, 1.0, 0.0));
    const auto p = gpr::gpr_predict(m, x);
    mean_err = std::max(mean_err, (p.mean - y).cwiseAbs().maxCoeff());
    var_max = std::max(var_max, p.variance.maxCoeff());
  }
  return {mean_err <= kMeanTol && var_max <= kVarTol,
          "max |mean - y| " + fmt(mean_err) + ", max variance " + fmt(var_max) + ", max cond " + fmt(cond_max) +
              ", " + std::to_string(shortened) + "/20 designs with shortened length scale"};
}

// 3. Backprop vs central differences.
Outcome mlp_gradients() {
  constexpr double kEps = 1e-5;
  constexpr double kTol = 1e-5;
  constexpr double kFloor = 1e-6;  // denominator floor for near-zero components
  constexpr double kMaxSeconds = 30.0;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (auto act : {mlp::Activation::tanh, mlp::Activation::relu, mlp::Activation::identity}) {
    for (int depth = 1; depth <= 3; ++depth) {
      std::vector<Eigen::Index> hidden(static_cast<std::size_t>(depth), 6);
      auto m = mlp::mlp_init(mlp::MlpArchitecture::uniform(3, hidden, 2, act), static_cast<std::uint64_t>(depth));
      for (auto& l : m.layers) l.bias = testing::random_matrix(rng, l.bias.size(), 1, 0.1, 0.5);
      const Eigen::MatrixXd x = testing::random_matrix(rng, 8, 3);
      const Eigen::MatrixXd y = testing::random_matrix(rng, 8, 2);
      const auto g = mlp::mse_loss_gradient(m, x, y);
      const Eigen::VectorXd p = mlp::flatten_parameters(m);
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        mlp::MlpModel up = m, dn = m;
        Eigen::VectorXd pu = p, pd = p;
        pu(i) += kEps;
        pd(i) -= kEps;
        mlp::set_parameters(up, pu);
        mlp::set_parameters(dn, pd);
        const double fd = (mlp::mse_loss(up, x, y) - mlp::mse_loss(dn, x, y)) / (2.0 * kEps);
        const double rel = std::abs(fd - g.gradient(i)) / std::max({std::abs(fd), std::abs(g.gradient(i)), kFloor});
        worst = std::max(worst, rel);
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < kTol && secs < kMaxSeconds, "max rel err " + fmt(worst) + ", " + fmt(secs) + " s"};
}

// 4. Scaler and splitter contracts.
Outcome scaler_splitter() {
  constexpr double kRoundTrip = 1e-12;
  constexpr double kMoment = 1e-10;
  std::mt19937_64 rng(4);
  double rt = 0.0, mean_dev = 0.0, std_dev = 0.0;
  bool partition_ok = true, deterministic = true;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(testing::random_int(rng, 10, 300));
    const auto c = testing::random_int(rng, 1, 6);
    // Spread stays >= 1e-2 against offsets up to 100 so the stored double mean
    // can represent the column centre to well under 1e-10 standard deviations.
    const double scale = std::pow(10.0, testing::random_int(rng, -2, 4));
    const Eigen::MatrixXd x = (testing::random_matrix(rng, static_cast<Eigen::Index>(n), c).array() * scale +
                               testing::random_real(rng, -100.0, 100.0))
                                  .matrix();
    const Eigen::MatrixXd y = testing::random_matrix(rng, static_cast<Eigen::Index>(n), 2);
    prep::SplitSpec spec;
    spec.seed = rng();
    const data::FlatMatrix fx(x, data::default_layout(static_cast<std::size_t>(c)));
    const data::FlatMatrix fy(y, data::default_layout(2));
    const auto p = prep::preprocess_data_pipeline(fx, fy, spec);
    const auto p2 = prep::preprocess_data_pipeline(fx, fy, spec);
    deterministic = deterministic && p.split.train == p2.split.train && p.split.test == p2.split.test &&
                    p.split.val == p2.split.val;
    std::vector<std::size_t> all = p.split.train;
    all.insert(all.end(), p.split.test.begin(), p.split.test.end());
    all.insert(all.end(), p.split.val.begin(), p.split.val.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) partition_ok = partition_ok && all[i] == i;
    partition_ok = partition_ok && all.size() == n;
    rt = std::max(rt, prep::round_trip_error(p.x_scaler, x));
    const Eigen::MatrixXd& t = p.x_train.values();
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      const double mean = t.col(j).mean();
      mean_dev = std::max(mean_dev, std::abs(mean));
      std_dev = std::max(std_dev, std::abs(std::sqrt((t.col(j).array() - mean).square().mean()) - 1.0));
    }
  }
  const bool pass = rt <= kRoundTrip && mean_dev <= kMoment && std_dev <= kMoment && partition_ok && deterministic;
  return {pass, "round trip " + fmt(rt) + ", |mean| " + fmt(mean_dev) + ", |std-1| " + fmt(std_dev) +
                    (partition_ok ? ", partition ok" : ", partition BROKEN") +
                    (deterministic ? ", deterministic" : ", NOT deterministic")};
}

// 5. Forrester multi-fidelity benchmark.
Outcome forrester_benchmark() {
  constexpr std::uint64_t kSeed = 7;
  constexpr double kMinR2 = 0.99;
  constexpr double kMaxSeconds = 60.0;
  const auto t0 = Clock::now();
  const auto pair = synth::forrester();
  const auto [lf, hf] = synth::generate_pair_dataset(pair, 50, 8, {synth::SamplerKind::latin_hypercube, kSeed});
  mf::MfTrainOptions o;
  o.split.seed = kSeed;
  o.lf.gpr.optimize.seed = kSeed;
  o.mf.gpr.optimize.seed = kSeed;
  const auto mf_result = mf::train_mf(lf, hf, o);

  const auto hf_only = tune::tune(prep::preprocess_data_pipeline(hf, o.split), o.mf);

  const Eigen::MatrixXd xt = synth::sample({synth::SamplerKind::uniform_grid, 0}, pair.bounds, 200);
  const Eigen::MatrixXd yt = synth::truth_evaluate(pair, xt);
  const Eigen::MatrixXd y_mf = mf_result.composite.predict(xt);
  const Eigen::MatrixXd y_hf = hf_only.winner.predict(xt);
  const double r2 = testing::ref_r2(yt, y_mf);
  const double rmse_mf = std::sqrt((y_mf - yt).array().square().mean());
  const double rmse_hf = std::sqrt((y_hf - yt).array().square().mean());
  const double secs = seconds_since(t0);
  return {r2 > kMinR2 && rmse_mf < rmse_hf && secs < kMaxSeconds,
          "seed 7: MF R2 " + fmt(r2) + ", MF RMSE " + fmt(rmse_mf) + " vs HF-only RMSE " + fmt(rmse_hf) + ", " +
              fmt(secs) + " s"};
}

// 6. Single-site inference rate.
Outcome inference_rate() {
  constexpr double kMinRate = 1000.0;
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd x = testing::random_matrix(rng, 400, 4);
  Eigen::MatrixXd y(400, 128);
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    y.col(j) = (x.col(0) * (1.0 + 0.01 * static_cast<double>(j))).array().sin() + x.col(1).array().square();
  }
  FittedSurrogate s;
  s.x_scaler = prep::StandardScaler::fit(x);
  s.y_scaler = prep::StandardScaler::fit(y);
  s.model = gpr::gpr_fit(s.x_scaler.transform(x), s.y_scaler.transform(y), gpr::KernelSpec::matern(2.5, 1.0, 1.0, 1e-6));
  s.input_layout = data::default_layout(4);
  s.output_layout = data::default_layout(128);
  const Eigen::MatrixXd sites = testing::random_matrix(rng, 200, 4);
  const auto t = metrics::throughput_benchmark([&s](const Eigen::MatrixXd& xs) { return s.predict(xs); }, sites, 5);
  return {t.predictions_per_second >= kMinRate,
          "N=400, q=128: " + fmt(t.predictions_per_second) + " predictions/s"};
}

// 7. Save/load round trips.
Outcome persistence() {
  constexpr double kTol = 1e-12;
  testing::TempDir dir("acceptance");
  std::mt19937_64 rng(7);
  const auto pair = synth::trig4();
  const Eigen::MatrixXd x = synth::sample({synth::SamplerKind::latin_hypercube, 1}, pair.bounds, 60);
  const auto d = synth::make_dataset(pair, x, synth::truth_evaluate(pair, x), data::Fidelity::high);
  const auto p = prep::preprocess_data_pipeline(d, prep::SplitSpec{});
  tune::GprGrid gg = tune::GprGrid::defaults();
  gg.kernels.resize(1);
  tune::MlpGrid mg;
  mg.layer_counts = {2};
  mg.widths = {16};
  mg.train.max_epochs = 100;
  const auto g = tune::tune_gpr(p, gg).winner;
  const auto m = tune::tune_mlp(p, mg).winner;
  const auto [lf, hf] = synth::generate_pair_dataset(pair, 60, 30, {synth::SamplerKind::latin_hypercube, 2});
  mf::MfTrainOptions o;
  o.lf.gpr.kernels.resize(1);
  o.mf.gpr.kernels.resize(1);
  const auto c = mf::train_mf(lf, hf, o).composite;

  const Eigen::MatrixXd sites = testing::random_matrix(rng, 100, 4, 0.0, 1.0);
  double worst = 0.0;
  const std::vector<store::ModelBundle> bundles{store::ModelBundle::single(g), store::ModelBundle::single(m),
                                               store::ModelBundle::multi_fidelity(c)};
  for (const auto& b : bundles) {
    for (bool binary : {false, true}) {
      const auto loaded = store::load_model(store::save_model(b, dir.path(), b.model_type(), {binary}));
      worst = std::max(worst, testing::max_rel_err(b.predict(sites), loaded.predict(sites)));
    }
  }
  return {worst <= kTol, "gpr, mlp, mf-composite (text and binary): max rel diff " + fmt(worst)};
}

// 8. Tuner contracts on the synthetic suite.
Outcome tuner_contracts() {
  std::vector<std::string> broken;
  for (const std::string name : {"forrester", "trig4", "linear"}) {
    const auto pair = synth::pair_by_name(name);
    const Eigen::MatrixXd x = synth::sample({synth::SamplerKind::latin_hypercube, 8}, pair.bounds, 120);
    const auto d = synth::make_dataset(pair, x, synth::truth_evaluate(pair, x), data::Fidelity::high);
    prep::SplitSpec split;
    split.seed = 8;
    const auto p = prep::preprocess_data_pipeline(d, split);

    const auto grid = tune::GprGrid::defaults();
    const auto out = tune::tune_gpr(p, grid);
    if (out.sweep.candidates.size() != grid.kernels.size()) broken.push_back(name + ": sweep not exhaustive");
    std::size_t argmin = 0;
    for (std::size_t i = 0; i < out.sweep.candidates.size(); ++i) {
      const auto& a = out.sweep.candidates[i];
      const auto& b = out.sweep.candidates[argmin];
      if (a.val_rmse < b.val_rmse - tune::kTieTolerance ||
          (std::abs(a.val_rmse - b.val_rmse) <= tune::kTieTolerance && a.param_count < b.param_count)) {
        argmin = i;
      }
    }
    if (out.sweep.selected != argmin) broken.push_back(name + ": selection is not the argmin");

    // Parsimony: a later candidate tied with the winner but smaller must win;
    // a tied but larger one must not.
    auto cands = out.sweep.candidates;
    auto smaller = cands[out.sweep.selected];
    smaller.param_count -= 1;
    auto larger = cands[out.sweep.selected];
    larger.param_count += 1;
    cands.push_back(larger);
    if (tune::select_winner(cands) != out.sweep.selected) broken.push_back(name + ": larger tie won");
    cands.push_back(smaller);
    if (tune::select_winner(cands) != cands.size() - 1) broken.push_back(name + ": parsimony tie-break");

    // Identical kernels: the earlier index wins.
    tune::GprGrid dup = grid;
    dup.kernels = {grid.kernels[out.sweep.selected], grid.kernels[out.sweep.selected]};
    if (tune::tune_gpr(p, dup).sweep.selected != 0) broken.push_back(name + ": earlier index tie-break");

    tune::ModelSpec spec;
    const auto curve = tune::convergence_study(d, spec, {8, 16, 32, 64}, split);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      const auto& a = curve.points[i - 1].subset;
      const auto& b = curve.points[i].subset;
      if (!std::equal(a.begin(), a.end(), b.begin())) broken.push_back(name + ": subsets not nested");
    }
    if (curve.points.back().test_rmse > curve.points.front().test_rmse) {
      broken.push_back(name + ": RMSE(64)=" + fmt(curve.points.back().test_rmse) + " > RMSE(8)=" +
                       fmt(curve.points.front().test_rmse));
    }
  }
  std::string detail = "forrester, trig4, linear";
  for (const auto& b : broken) detail += "; " + b;
  return {broken.empty(), detail};
}

// 9. Data-standard round trips.
Outcome data_standard() {
  std::mt19937_64 rng(9);
  testing::TempDir dir("acceptance");
  std::size_t shapes = 0;
  bool ok = true;
  for (std::size_t n = 1; n <= 16 && ok; ++n) {
    for (std::size_t m = 1; m <= 16 && ok; ++m) {
      for (std::size_t l = 1; l <= 16 && ok; ++l) {
        std::vector<double> v(n * m * l);
        for (auto& e : v) e = testing::random_real(rng, -1e6, 1e6);
        const auto t = data::DataTensor::with_default_names(n, m, l, v);
        ok = data::unflatten(data::flatten(t), m, l) == t;
        ++shapes;
      }
    }
  }
  // Bitwise text stability including awkward doubles.
  std::uniform_int_distribution<std::uint64_t> bits;
  std::vector<double> v;
  while (v.size() < 2000) {
    const double d = std::bit_cast<double>(bits(rng));
    if (std::isfinite(d)) v.push_back(d);
  }
  const auto t = data::DataTensor::with_default_names(100, 4, 5, v);
  data::export_tensor(t, dir.path() / "t.txt", data::TensorFormat::tensor_text);
  const auto back = data::import_tensor(dir.path() / "t.txt");
  bool bitwise = back.values().size() == v.size();
  for (std::size_t i = 0; bitwise && i < v.size(); ++i) {
    bitwise = std::bit_cast<std::uint64_t>(back.values()[i]) == std::bit_cast<std::uint64_t>(v[i]);
  }
  data::export_tensor(back, dir.path() / "t2.txt", data::TensorFormat::tensor_text);
  bitwise = bitwise && data::read_file(dir.path() / "t.txt") == data::read_file(dir.path() / "t2.txt");
  return {ok && bitwise, std::to_string(shapes) + " shapes" + (ok ? " invert" : " FAILED") +
                             (bitwise ? ", text export bitwise stable" : ", text export NOT stable")};
}

// 10. R2 worked cases.
Outcome r2_cases() {
  constexpr double kTol = 1e-12;
  Eigen::MatrixXd t(3, 1), mean(3, 1), off(3, 1);
  t << 1, 2, 3;
  mean << 2, 2, 2;
  off << 1, 2, 4;
  const double a = metrics::r_squared(t, t);
  const double b = metrics::r_squared(t, mean);
  const double c = metrics::r_squared(t, off);
  return {std::abs(a - 1.0) <= kTol && std::abs(b) <= kTol && std::abs(c - 0.5) <= kTol,
          "perfect " + fmt(a) + ", mean " + fmt(b) + ", [1,2,4] " + fmt(c)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 gpr-oracle-equivalence", gpr_oracle},
      {"2 gpr-interpolation", gpr_interpolation},
      {"3 mlp-gradient-check", mlp_gradients},
      {"4 scaler-splitter", scaler_splitter},
      {"5 forrester-multifidelity", forrester_benchmark},
      {"6 inference-rate", inference_rate},
      {"7 model-persistence", persistence},
      {"8 tuner-contracts", tuner_contracts},
      {"9 data-standard-round-trips", data_standard},
      {"10 r2-unit-cases", r2_cases},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed\n";
  return failures;
}
