#include <doctest.h>

#include <algorithm>
#include <set>

#include "mfsm/errors.hpp"
#include "mfsm/synthbench.hpp"
#include "mfsm/tuner.hpp"
#include "support.hpp"

using namespace mfsm;
using namespace mfsm::tune;

namespace {

prep::PreparedData prepared(const synth::AnalyticPair& p, std::size_t n, std::uint64_t seed) {
  const auto x = synth::sample({synth::SamplerKind::latin_hypercube, seed}, p.bounds, n);
  const auto d = synth::make_dataset(p, x, synth::truth_evaluate(p, x), data::Fidelity::high);
  prep::SplitSpec s;
  s.seed = seed;
  return prep::preprocess_data_pipeline(d, s);
}

CandidateResult cand(double rmse, std::size_t params, bool failed = false) {
  CandidateResult c;
  c.val_rmse = rmse;
  c.param_count = params;
  c.failed = failed;
  return c;
}

double raw_val_rmse(const prep::PreparedData& p, const FittedSurrogate& s) {
  const Eigen::MatrixXd xv = p.x_scaler.inverse_transform(p.x_val.values());
  const Eigen::MatrixXd yv = p.y_scaler.inverse_transform(p.y_val.values());
  const Eigen::MatrixXd pred = s.predict(xv);
  return std::sqrt((pred - yv).array().square().mean());
}

}  // namespace

TEST_SUITE("tuner") {

TEST_CASE("selection: argmin, parsimony, then index") {
  CHECK(select_winner({cand(0.3, 5), cand(0.1, 50), cand(0.2, 1)}) == 1);
  CHECK(select_winner({cand(0.1, 50), cand(0.1, 5), cand(0.1, 5)}) == 1);
  CHECK(select_winner({cand(0.1, 5), cand(0.1 + 1e-13, 4)}) == 1);
  CHECK(select_winner({cand(0.1, 5), cand(0.1 + 1e-9, 4)}) == 0);
  CHECK(select_winner({cand(0.0, 1, true), cand(0.5, 3)}) == 1);
  CHECK_THROWS_AS(select_winner({cand(0.0, 1, true)}), NumericError);
}

TEST_CASE("property: selection matches a brute-force oracle") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<CandidateResult> cs;
    const int n = testing::random_int(rng, 1, 8);
    for (int i = 0; i < n; ++i) {
      cs.push_back(cand(0.1 * testing::random_int(rng, 1, 3), static_cast<std::size_t>(testing::random_int(rng, 1, 4)),
                        testing::random_int(rng, 0, 5) == 0));
    }
    if (std::all_of(cs.begin(), cs.end(), [](const auto& c) { return c.failed; })) continue;
    double best_rmse = 1e300;
    for (const auto& c : cs) if (!c.failed) best_rmse = std::min(best_rmse, c.val_rmse);
    std::size_t best_params = ~std::size_t{0};
    for (const auto& c : cs) if (!c.failed && c.val_rmse == best_rmse) best_params = std::min(best_params, c.param_count);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (!cs[i].failed && cs[i].val_rmse == best_rmse && cs[i].param_count == best_params) {
        expected = i;
        break;
      }
    }
    REQUIRE(select_winner(cs) == expected);
  }
}

TEST_CASE("singleton GPR grid selects its only kernel") {
  const auto p = prepared(synth::forrester(), 30, 1);
  GprGrid g = GprGrid::defaults();
  g.kernels.resize(1);
  const auto out = tune_gpr(p, g);
  CHECK(out.sweep.candidates.size() == 1);
  CHECK(out.sweep.selected == 0);
}

TEST_CASE("identical candidates resolve to the earlier index") {
  const auto p = prepared(synth::forrester(), 30, 2);
  GprGrid g = GprGrid::defaults();
  g.kernels = {g.kernels[1], g.kernels[1]};
  const auto out = tune_gpr(p, g);
  CHECK(out.sweep.candidates[0].val_rmse == out.sweep.candidates[1].val_rmse);
  CHECK(out.sweep.selected == 0);
}

TEST_CASE("default GPR sweep is exhaustive and scores in raw units") {
  const auto p = prepared(synth::trig4(), 250, 3);
  const auto out = tune_gpr(p, GprGrid::defaults());
  REQUIRE(out.sweep.candidates.size() == 4);
  std::set<std::string> names;
  for (const auto& c : out.sweep.candidates) names.insert(c.description);
  CHECK(names.size() == 4);
  CHECK(names.count("Constant*RBF") == 1);
  CHECK(names.count("Constant*Matern(nu=0.5)") == 1);
  const auto& w = out.sweep.candidates[out.sweep.selected];
  CHECK(testing::rel_err(w.val_rmse, raw_val_rmse(p, out.winner)) < 1e-10);
  for (const auto& c : out.sweep.candidates) CHECK(c.val_rmse >= w.val_rmse - kTieTolerance);
  REQUIRE(w.val_r2.has_value());
  CHECK(*w.val_r2 > 0.99);
  const std::string csv = out.sweep.to_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("MLP grid {1}x{16} trains a single network") {
  const auto p = prepared(synth::linear(), 60, 4);
  MlpGrid g;
  g.layer_counts = {1};
  g.widths = {16};
  g.train.max_epochs = 500;
  g.train.learning_rate = 1e-2;
  const auto out = tune_mlp(p, g);
  REQUIRE(out.sweep.candidates.size() == 1);
  CHECK(out.sweep.candidates[0].description == "1-16-1 tanh");
  CHECK(*out.sweep.candidates[0].val_r2 > 0.99);
}

TEST_CASE("MLP sweep covers every layout in order") {
  const auto p = prepared(synth::linear(), 40, 5);
  MlpGrid g;
  g.layer_counts = {1, 2};
  g.widths = {4, 8};
  g.train.max_epochs = 50;
  const auto layouts = g.hidden_layouts();
  REQUIRE(layouts.size() == 4);
  CHECK(layouts[1] == std::vector<Eigen::Index>{8});
  CHECK(layouts[2] == std::vector<Eigen::Index>{4, 4});
  const auto out = tune_mlp(p, g);
  CHECK(out.sweep.candidates.size() == 4);
  CHECK(out.sweep.candidates[3].description == "1-8-8-1 tanh");
  CHECK(testing::rel_err(out.sweep.candidates[out.sweep.selected].val_rmse, raw_val_rmse(p, out.winner)) < 1e-10);
}

TEST_CASE("convergence subsets are nested and error falls with size") {
  const auto pair = synth::trig4();
  const auto x = synth::sample({synth::SamplerKind::latin_hypercube, 6}, pair.bounds, 160);
  const auto d = synth::make_dataset(pair, x, synth::truth_evaluate(pair, x), data::Fidelity::high);
  ModelSpec spec;
  spec.gpr.kernels.resize(1);
  prep::SplitSpec split;
  split.seed = 6;
  const auto curve = convergence_study(d, spec, {64, 8, 16, 32}, split);
  REQUIRE(curve.points.size() == 4);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& small = curve.points[i - 1].subset;
    const auto& big = curve.points[i].subset;
    REQUIRE(small.size() < big.size());
    CHECK(std::equal(small.begin(), small.end(), big.begin()));
  }
  CHECK(curve.points.front().size == 8);
  CHECK(curve.points.back().test_rmse <= curve.points.front().test_rmse);
  const std::string csv = curve.to_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("convergence sizes beyond the training bin are rejected") {
  const auto pair = synth::linear();
  const auto x = synth::sample({synth::SamplerKind::uniform_random, 1}, pair.bounds, 20);
  const auto d = synth::make_dataset(pair, x, synth::truth_evaluate(pair, x), data::Fidelity::high);
  CHECK_THROWS_AS(convergence_study(d, ModelSpec{}, {100}, prep::SplitSpec{}), InputError);
  CHECK_THROWS_AS(convergence_study(d, ModelSpec{}, {}, prep::SplitSpec{}), InputError);
}

}  // TEST_SUITE
