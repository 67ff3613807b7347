#include <doctest.h>

#include <cmath>
#include <set>

#include "mfsm/errors.hpp"
#include "mfsm/preprocess.hpp"
#include "mfsm/synthbench.hpp"
#include "support.hpp"

using namespace mfsm;
using namespace mfsm::synth;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

}  // namespace

TEST_SUITE("synthbench") {

TEST_CASE("Forrester reference values") {
  CHECK(forrester_hf(0.0) == doctest::Approx(3.0272).epsilon(1e-4));
  CHECK(forrester_hf(1.0) == doctest::Approx(15.8297).epsilon(1e-4));
  CHECK(forrester_lf(0.0) == doctest::Approx(-8.4864).epsilon(1e-4));
  CHECK(forrester_hf(0.5) == doctest::Approx(0.9093).epsilon(1e-4));
  // LF = 0.5 HF + 10 (x - 0.5) - 5
  for (double x : {0.1, 0.37, 0.8}) {
    CHECK(forrester_lf(x) == doctest::Approx(0.5 * forrester_hf(x) + 10.0 * (x - 0.5) - 5.0));
  }
}

TEST_CASE("linear pair") {
  const auto p = linear();
  CHECK(p.hf(vec({0.3}))(0) == doctest::Approx(0.3));
  CHECK(p.lf(vec({0.3}))(0) == doctest::Approx(0.25));
}

TEST_CASE("trig4 formulas") {
  const auto p = trig4();
  CHECK(p.dim() == 4);
  CHECK(p.outputs() == 3);
  const double x0 = 0.2, x1 = 0.4, x2 = 0.7, x3 = 0.9;
  const auto y = p.hf(vec({x0, x1, x2, x3}));
  const double y0 = std::sin(M_PI * x0) + 0.5 * x1 * x1 + 0.3 * x3 * std::cos(2 * M_PI * x2);
  const double y1 = x0 * x1 + std::sin(2 * M_PI * x2) + 0.2 * x3 * x3 * x3;
  const double y2 = std::cos(M_PI * x0 * x3) + x2 * x2 - 0.5 * x1;
  CHECK(y(0) == doctest::Approx(y0));
  CHECK(y(1) == doctest::Approx(y1));
  CHECK(y(2) == doctest::Approx(y2));
  const auto l = p.lf(vec({x0, x1, x2, x3}));
  const double s = x0 + x1 + x2 + x3;
  CHECK(l(0) == doctest::Approx(0.8 * y0 + 0.3 * s - 0.5));
  CHECK(l(1) == doctest::Approx(1.2 * y1 - 0.2 * s + 0.25));
  CHECK(l(2) == doctest::Approx(0.6 * y2 + 0.5 * s + 1.0));
}

TEST_CASE("pairs by name and aero box") {
  CHECK(pair_by_name("forrester").dim() == 1);
  CHECK(pair_by_name("trig4").outputs() == 3);
  CHECK_THROWS_AS(pair_by_name("branin"), InputError);
  const auto b = aero_table_bounds();
  REQUIRE(b.size() == 4);
  CHECK(b[0] == Interval{-20.0, 20.0});
  CHECK(b[3] == Interval{1.2, 20.0});
}

TEST_CASE("property: Latin hypercube fills every stratum once") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(testing::random_int(rng, 1, 64));
    const auto d = testing::random_int(rng, 1, 8);
    std::vector<Interval> bounds;
    for (int k = 0; k < d; ++k) {
      const double lo = testing::random_real(rng, -10.0, 10.0);
      bounds.push_back({lo, lo + testing::random_real(rng, 0.1, 20.0)});
    }
    const auto x = sample({SamplerKind::latin_hypercube, rng()}, bounds, n);
    REQUIRE(x.rows() == static_cast<Eigen::Index>(n));
    REQUIRE(x.cols() == d);
    for (int k = 0; k < d; ++k) {
      std::set<long> strata;
      const double width = bounds[k].second - bounds[k].first;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        REQUIRE(x(i, k) >= bounds[k].first);
        REQUIRE(x(i, k) <= bounds[k].second);
        const double u = (x(i, k) - bounds[k].first) / width * static_cast<double>(n);
        strata.insert(std::min(static_cast<long>(n) - 1, static_cast<long>(std::floor(u))));
      }
      REQUIRE(strata.size() == n);
    }
  }
}

TEST_CASE("samplers are deterministic per seed") {
  const auto b = trig4().bounds;
  CHECK(sample({SamplerKind::latin_hypercube, 3}, b, 20) == sample({SamplerKind::latin_hypercube, 3}, b, 20));
  CHECK(sample({SamplerKind::uniform_random, 3}, b, 20) != sample({SamplerKind::uniform_random, 4}, b, 20));
}

TEST_CASE("uniform grid includes endpoints and needs k^d points") {
  const std::vector<Interval> b{{0.0, 1.0}, {-1.0, 1.0}};
  const auto g = sample({SamplerKind::uniform_grid, 0}, b, 9);
  REQUIRE(g.rows() == 9);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(0, 1) == -1.0);
  CHECK(g(1, 1) == 0.0);  // last dimension varies fastest
  CHECK(g(8, 0) == 1.0);
  CHECK(g(8, 1) == 1.0);
  CHECK_THROWS_AS(sample({SamplerKind::uniform_grid, 0}, b, 10), InputError);
  CHECK(sample({SamplerKind::uniform_grid, 0}, {{0.0, 1.0}}, 200).rows() == 200);
}

TEST_CASE("degenerate requests are rejected") {
  CHECK_THROWS_AS(sample({}, {{1.0, 1.0}}, 5), InputError);
  CHECK_THROWS_AS(sample({}, {{0.0, 1.0}}, 0), InputError);
  CHECK_THROWS_AS(sample({}, {}, 5), InputError);
  CHECK_THROWS_AS(sampler_from_string("sobol"), InputError);
  CHECK(sampler_from_string("lhs") == SamplerKind::latin_hypercube);
  CHECK(sampler_from_string("grid") == SamplerKind::uniform_grid);
}

TEST_CASE("vectorized evaluation matches pointwise calls") {
  const auto p = trig4();
  const auto x = sample({SamplerKind::uniform_random, 2}, p.bounds, 15);
  const auto y = truth_evaluate(p, x);
  const auto l = lf_evaluate(p, x);
  REQUIRE(y.rows() == 15);
  REQUIRE(y.cols() == 3);
  for (Eigen::Index i = 0; i < 15; ++i) {
    CHECK((y.row(i).transpose() - p.hf(x.row(i).transpose())).norm() == 0.0);
    CHECK((l.row(i).transpose() - p.lf(x.row(i).transpose())).norm() == 0.0);
  }
}

TEST_CASE("generated pair datasets feed the pipeline") {
  const auto [lf, hf] = generate_pair_dataset(trig4(), 60, 20, {SamplerKind::latin_hypercube, 9});
  CHECK(lf.n() == 60);
  CHECK(hf.n() == 20);
  CHECK(lf.x.m() == 4);
  CHECK(lf.y.m() == 3);
  CHECK(lf.y.l() == 1);
  CHECK(lf.fidelity == data::Fidelity::low);
  CHECK(hf.fidelity == data::Fidelity::high);
  CHECK(hf.x.scalar_names() == trig4().input_names);
  // HF design is the seed+1 Latin hypercube.
  const auto expect = sample({SamplerKind::latin_hypercube, 10}, trig4().bounds, 20);
  CHECK(data::flatten(hf.x).values() == expect);
  const auto p = prep::preprocess_data_pipeline(hf, prep::SplitSpec{});
  CHECK(p.x_train.cols() == 4);
  CHECK(p.y_train.cols() == 3);
}

}  // TEST_SUITE
