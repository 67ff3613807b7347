#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mfsm::gpr {

enum class KernelKind { rbf, matern };

/// Stationary covariance function plus the observation noise added on the
/// training diagonal.
///
/// `length_scale` has one entry for an isotropic kernel or one per input
/// dimension. The plain kinds keep `signal_variance` fixed during
/// hyperparameter optimization; the constant-scaled kinds (`Constant*RBF`,
/// `Constant*Matern`) optimize it. Matern smoothness `nu` is never optimized.
struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  bool constant_scaled = false;
  Eigen::VectorXd length_scale = Eigen::VectorXd::Ones(1);
  double signal_variance = 1.0;
  double nu = 2.5;
  double noise = 0.0;

  static KernelSpec rbf(double length_scale = 1.0, double signal_variance = 1.0,
                        double noise = 0.0);
  static KernelSpec matern(double nu, double length_scale = 1.0, double signal_variance = 1.0,
                           double noise = 0.0);

  bool isotropic() const { return length_scale.size() == 1; }
  /// Throws InputError when a parameter is out of its domain.
  void validate() const;
  /// e.g. "RBF", "Constant*Matern(nu=1.5)".
  std::string name() const;
};

/// Parses "rbf", "matern:1.5", "c*rbf", "c*matern:0.5" (case-insensitive).
KernelSpec parse_kernel(const std::string& text);

/// Covariance k(a_i, b_j) excluding noise. Throws InputError on column mismatch
/// or when the length-scale vector does not fit the input dimension.
Eigen::MatrixXd kernel_eval(const KernelSpec& spec, const Eigen::MatrixXd& a,
                            const Eigen::MatrixXd& b);

/// Derivatives of k(X, X) with respect to the log of each length scale
/// (one matrix if isotropic, one per dimension otherwise).
std::vector<Eigen::MatrixXd> length_scale_gradients(const KernelSpec& spec,
                                                    const Eigen::MatrixXd& x);

}  // namespace mfsm::gpr
