#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mfsm/kernel.hpp"

namespace mfsm::gpr {

/// Exact GP regression state with zero prior mean.
///
/// All q output columns share one kernel and one Cholesky factor; `alpha`
/// holds one weight column per output.
struct GprModel {
  KernelSpec kernel;
  Eigen::MatrixXd x_train;  // N x d
  Eigen::MatrixXd chol;     // lower factor of K + noise*I (+ jitter*I)
  Eigen::MatrixXd alpha;    // N x q
  double lml = 0.0;
  double jitter_used = 0.0;

  Eigen::Index input_dim() const { return x_train.cols(); }
  Eigen::Index output_dim() const { return alpha.cols(); }
};

struct Prediction {
  Eigen::MatrixXd mean;      // N* x q
  Eigen::VectorXd variance;  // N*, latent variance shared by all outputs
};

/// Cholesky of K + noise*I. On failure, jitter of 1e-10 * mean(diag K) is
/// added and raised tenfold up to 1e-6 * mean(diag K); beyond that the kernel
/// is reported as ill-conditioned via NumericError.
GprModel gpr_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const KernelSpec& spec);

/// Mean K*^T alpha and variance diag(K**) - sum(v^2), v = L \ K*. Variance
/// is clamped at zero.
Prediction gpr_predict(const GprModel& model, const Eigen::MatrixXd& x_star);
Eigen::MatrixXd gpr_predict_mean(const GprModel& model, const Eigen::MatrixXd& x_star);

/// Log-space search box for the optimizer. Length scale bounds apply to every
/// length-scale entry.
struct HyperBounds {
  std::pair<double, double> length_scale{1e-2, 1e2};
  std::pair<double, double> signal_variance{1e-3, 1e3};
  std::pair<double, double> noise{1e-10, 1.0};
  bool optimize_noise = true;

  void validate() const;
};

struct OptimizeOptions {
  int restarts = 3;
  std::uint64_t seed = 0;
  HyperBounds bounds;
  int max_iterations = 200;
};

struct RestartRecord {
  KernelSpec start;
  double start_lml = 0.0;  // -inf when the start point could not be fit
  KernelSpec result;
  double result_lml = 0.0;
  bool failed = false;
};

struct OptimizeResult {
  KernelSpec best;
  double best_lml = 0.0;
  std::size_t best_restart = 0;
  std::vector<RestartRecord> restarts;
};

/// Maximize the summed log marginal likelihood over log-parameters with
/// L-BFGS. Restart 0 starts from `spec` (clipped into the bounds); later
/// restarts start log-uniformly within the bounds. The best restart wins, the
/// lowest index on ties, and a restart never returns a point worse than its
/// start. Matern nu and the kernel family are never changed.
OptimizeResult optimize_hyperparameters(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                        const KernelSpec& spec, const OptimizeOptions& opts);

/// Log marginal likelihood and its gradient with respect to the log of each
/// free parameter (length scales, then signal variance if constant-scaled,
/// then noise if optimized). Returns nullopt if K cannot be factored.
struct LmlGradient {
  double lml = 0.0;
  Eigen::VectorXd gradient;
};
std::optional<LmlGradient> lml_with_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                             const KernelSpec& spec, bool optimize_noise);

/// Number of free hyperparameters the optimizer tunes for this kernel.
std::size_t free_parameter_count(const KernelSpec& spec, bool optimize_noise);

}  // namespace mfsm::gpr
