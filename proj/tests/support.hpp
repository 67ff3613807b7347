#pragma once

// Test-side helpers: seeded generators and reference computations written
// independently of the library code paths they check.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace testing {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  }
  return m;
}

inline int random_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double random_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Closed-form isotropic stationary kernel, evaluated entry by entry.
/// nu = 0 selects the squared exponential.
inline double ref_kernel(double r, double sf2, double nu) {
  if (nu == 0.0) return sf2 * std::exp(-0.5 * r * r);
  if (nu == 0.5) return sf2 * std::exp(-r);
  if (nu == 1.5) {
    const double s = std::sqrt(3.0) * r;
    return sf2 * (1.0 + s) * std::exp(-s);
  }
  const double s = std::sqrt(5.0) * r;
  return sf2 * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

inline Eigen::MatrixXd ref_cov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double ell, double sf2,
                               double nu) {
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        const double d = (a(i, c) - b(j, c)) / ell;
        s += d * d;
      }
      k(i, j) = ref_kernel(std::sqrt(s), sf2, nu);
    }
  }
  return k;
}

/// GP posterior by explicit inverse and determinant.
struct RefGp {
  Eigen::MatrixXd mean;
  Eigen::VectorXd variance;
  double lml = 0.0;
};

inline RefGp ref_gp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& xs, double ell,
                    double sf2, double nu, double noise) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k = ref_cov(x, x, ell, sf2, nu);
  k.diagonal().array() += noise;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  const Eigen::MatrixXd kinv = lu.inverse();
  const Eigen::MatrixXd ks = ref_cov(x, xs, ell, sf2, nu);  // n x n*
  RefGp out;
  out.mean = ks.transpose() * kinv * y;
  out.variance.resize(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    out.variance(i) = sf2 - (ks.col(i).transpose() * kinv * ks.col(i))(0, 0);
  }
  const double q = static_cast<double>(y.cols());
  out.lml = -0.5 * (y.transpose() * kinv * y).trace() - 0.5 * q * std::log(lu.determinant()) -
            0.5 * q * static_cast<double>(n) * std::log(2.0 * M_PI);
  return out;
}

/// Pooled coefficient of determination, straight from the definition.
inline double ref_r2(const Eigen::MatrixXd& t, const Eigen::MatrixXd& p) {
  const double mean = t.mean();
  double ss_res = 0.0, ss_tot = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      ss_res += (t(i, j) - p(i, j)) * (t(i, j) - p(i, j));
      ss_tot += (t(i, j) - mean) * (t(i, j) - mean);
    }
  }
  return 1.0 - ss_res / ss_tot;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

inline double max_rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mfsm_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
