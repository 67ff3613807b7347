#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "mfsm/errors.hpp"
#include "mfsm/preprocess.hpp"
#include "mfsm/rng.hpp"
#include "support.hpp"

using namespace mfsm;
using namespace mfsm::prep;

namespace {

void check_partition(const SplitIndices& s, std::size_t n) {
  std::vector<std::size_t> all;
  all.insert(all.end(), s.train.begin(), s.train.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  all.insert(all.end(), s.val.begin(), s.val.end());
  REQUIRE(all.size() == n);
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < n; ++i) REQUIRE(all[i] == i);
}

data::FlatMatrix flat(const Eigen::MatrixXd& m) {
  return data::FlatMatrix(m, data::default_layout(static_cast<std::size_t>(m.cols())));
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("n=100 default fractions give 70/15/15") {
  const auto s = split_data_cv(100, SplitSpec{});
  CHECK(s.train.size() == 70);
  CHECK(s.test.size() == 15);
  CHECK(s.val.size() == 15);
  check_partition(s, 100);
}

TEST_CASE("n=400 gives 280/60/60") {
  const auto s = split_data_cv(400, SplitSpec{});
  CHECK(s.train.size() == 280);
  CHECK(s.test.size() == 60);
  CHECK(s.val.size() == 60);
}

TEST_CASE("small n keeps at least one row in test and val") {
  const auto s = split_data_cv(4, SplitSpec{});
  CHECK(s.test.size() == 1);
  CHECK(s.val.size() == 1);
  CHECK(s.train.size() == 2);
  CHECK_THROWS_AS(split_data_cv(2, SplitSpec{}), InputError);
}

TEST_CASE("split matches a test-side Fisher-Yates") {
  // Highest index first, j drawn by rejection in [0, i).
  const std::size_t n = 37;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(99);
  for (std::size_t i = n; i > 1; --i) {
    const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % i;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    std::swap(perm[i - 1], perm[x % i]);
  }
  SplitSpec spec;
  spec.seed = 99;
  const auto s = split_data_cv(n, spec);
  // round(0.15 * 37) = 6 rows each for test and val.
  std::vector<std::size_t> test(perm.begin(), perm.begin() + 6);
  std::vector<std::size_t> val(perm.begin() + 6, perm.begin() + 12);
  std::sort(test.begin(), test.end());
  std::sort(val.begin(), val.end());
  CHECK(s.test == test);
  CHECK(s.val == val);
}

TEST_CASE("property: splits are disjoint, exhaustive and deterministic") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(testing::random_int(rng, 3, 500));
    SplitSpec spec;
    spec.test_frac = testing::random_real(rng, 0.05, 0.3);
    spec.val_frac = testing::random_real(rng, 0.05, 0.3);
    spec.train_frac = 1.0 - spec.test_frac - spec.val_frac;
    spec.seed = rng();
    SplitIndices a;
    try {
      a = split_data_cv(n, spec);
    } catch (const InputError&) {
      continue;  // too few rows for a non-empty training bin
    }
    check_partition(a, n);
    const auto b = split_data_cv(n, spec);
    REQUIRE(a.train == b.train);
    REQUIRE(a.test == b.test);
    REQUIRE(a.val == b.val);
  }
}

TEST_CASE("different seeds give different splits") {
  SplitSpec a, b;
  a.seed = 1;
  b.seed = 2;
  CHECK(split_data_cv(100, a).test != split_data_cv(100, b).test);
}

TEST_CASE("fractions must sum to one") {
  SplitSpec s;
  s.train_frac = 0.8;
  CHECK_THROWS_AS(s.validate(), InputError);
  s.train_frac = 0.7;
  CHECK_NOTHROW(s.validate());
  s.test_frac = -0.1;
  s.train_frac = 0.95;
  CHECK_THROWS_AS(s.validate(), InputError);
}

TEST_CASE("scaler on [1,2,3]") {
  Eigen::MatrixXd m(3, 1);
  m << 1, 2, 3;
  const auto s = StandardScaler::fit(m);
  CHECK(s.means()(0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(s.stds()(0) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK(s.stds()(0) == doctest::Approx(0.81650).epsilon(1e-5));
  const auto t = s.transform(m);
  CHECK(t(0, 0) == doctest::Approx(-1.22474).epsilon(1e-5));
  CHECK(t(1, 0) == doctest::Approx(0.0));
  CHECK(t(2, 0) == doctest::Approx(1.22474).epsilon(1e-5));
}

TEST_CASE("constant column maps to zero and inverts to its value") {
  Eigen::MatrixXd m(4, 2);
  m << 5, 1, 5, 2, 5, 3, 5, 4;
  const auto s = StandardScaler::fit(m);
  CHECK(s.stds()(0) == 0.0);
  const auto t = s.transform(m);
  CHECK(t.col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.inverse_transform(t).col(0).isApprox(m.col(0)));
}

TEST_CASE("column count mismatch is rejected") {
  const auto s = StandardScaler::fit(Eigen::MatrixXd::Random(5, 3));
  CHECK_THROWS_AS(s.transform(Eigen::MatrixXd::Random(5, 2)), InputError);
  CHECK_THROWS_AS(StandardScaler().transform(Eigen::MatrixXd::Random(5, 2)), InputError);
}

TEST_CASE("property: inverse(transform(x)) = x within 1e-12") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = testing::random_int(rng, 2, 40);
    const auto c = testing::random_int(rng, 1, 8);
    const double scale = std::pow(10.0, testing::random_int(rng, -6, 6));
    const double shift = testing::random_real(rng, -1e3, 1e3);
    Eigen::MatrixXd m = (testing::random_matrix(rng, r, c).array() * scale + shift).matrix();
    const auto s = StandardScaler::fit(m);
    REQUIRE(round_trip_error(s, m) <= 1e-12);
  }
}

TEST_CASE("property: scaled training columns have mean 0 and std 1") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = testing::random_int(rng, 3, 60);
    const auto c = testing::random_int(rng, 1, 6);
    const Eigen::MatrixXd m = testing::random_matrix(rng, r, c, -50.0, 200.0);
    const Eigen::MatrixXd t = StandardScaler::fit(m).transform(m);
    for (Eigen::Index j = 0; j < c; ++j) {
      const double mean = t.col(j).mean();
      const double var = (t.col(j).array() - mean).square().mean();
      REQUIRE(std::abs(mean) <= 1e-10);
      REQUIRE(std::abs(std::sqrt(var) - 1.0) <= 1e-10);
    }
  }
}

TEST_CASE("pipeline shapes for (400,4,1) inputs and (400,7,1828) outputs") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd x = testing::random_matrix(rng, 400, 4);
  const Eigen::MatrixXd y = testing::random_matrix(rng, 400, 7 * 1828);
  const auto p = preprocess_data_pipeline(flat(x), flat(y), SplitSpec{});
  CHECK(p.x_train.rows() == 280);
  CHECK(p.x_train.cols() == 4);
  CHECK(p.y_train.rows() == 280);
  CHECK(p.y_train.cols() == 12796);
  CHECK(p.x_test.rows() == 60);
  CHECK(p.y_val.rows() == 60);
}

TEST_CASE("scalers are fit on training rows only") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd x = testing::random_matrix(rng, 50, 3);
  const Eigen::MatrixXd y = testing::random_matrix(rng, 50, 2);
  const auto p = preprocess_data_pipeline(flat(x), flat(y), SplitSpec{});
  Eigen::MatrixXd xt(p.split.train.size(), 3);
  for (std::size_t i = 0; i < p.split.train.size(); ++i) xt.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(p.split.train[i]));
  const Eigen::VectorXd mean = xt.colwise().mean();
  CHECK(testing::max_rel_err(p.x_scaler.means(), mean) < 1e-14);
  // Test rows reproduce after inverse scaling.
  Eigen::MatrixXd xs(p.split.test.size(), 3);
  for (std::size_t i = 0; i < p.split.test.size(); ++i) xs.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(p.split.test[i]));
  CHECK(testing::max_rel_err(p.x_scaler.inverse_transform(p.x_test.values()), xs) < 1e-12);
}

TEST_CASE("property: pipeline is invariant to affine rescaling of inputs") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = testing::random_int(rng, 1, 5);
    const Eigen::MatrixXd x = testing::random_matrix(rng, 40, c);
    const Eigen::MatrixXd y = testing::random_matrix(rng, 40, 2);
    const double a = testing::random_real(rng, 0.5, 100.0);
    const double b = testing::random_real(rng, -100.0, 100.0);
    const Eigen::MatrixXd x2 = (x.array() * a + b).matrix();
    SplitSpec spec;
    spec.seed = static_cast<std::uint64_t>(trial);
    const auto p1 = preprocess_data_pipeline(flat(x), flat(y), spec);
    const auto p2 = preprocess_data_pipeline(flat(x2), flat(y), spec);
    REQUIRE((p1.x_train.values() - p2.x_train.values()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("pipeline is deterministic under a fixed seed") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd x = testing::random_matrix(rng, 30, 2);
  const Eigen::MatrixXd y = testing::random_matrix(rng, 30, 1);
  SplitSpec spec;
  spec.seed = 42;
  const auto a = preprocess_data_pipeline(flat(x), flat(y), spec);
  const auto b = preprocess_data_pipeline(flat(x), flat(y), spec);
  CHECK(a.x_train.values() == b.x_train.values());
  CHECK(a.y_val.values() == b.y_val.values());
}

TEST_CASE("row count mismatch is rejected") {
  CHECK_THROWS_AS(preprocess_data_pipeline(flat(Eigen::MatrixXd::Zero(10, 1)), flat(Eigen::MatrixXd::Zero(9, 1)),
                                           SplitSpec{}),
                  InputError);
}

TEST_CASE("library permutation equals the documented shuffle") {
  const auto p = seeded_permutation(10, 3);
  std::set<std::size_t> s(p.begin(), p.end());
  CHECK(s.size() == 10);
  CHECK(p == seeded_permutation(10, 3));
}

}  // TEST_SUITE
