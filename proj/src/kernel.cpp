#include "mfsm/kernel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "mfsm/errors.hpp"
#include "mfsm/tensor_io.hpp"

namespace mfsm::gpr {

namespace {

const double kSqrt3 = std::sqrt(3.0);
const double kSqrt5 = std::sqrt(5.0);

Eigen::VectorXd inverse_scales(const KernelSpec& spec, Eigen::Index dims) {
  if (spec.isotropic()) return Eigen::VectorXd::Constant(dims, 1.0 / spec.length_scale(0));
  if (spec.length_scale.size() != dims) {
    throw InputError("kernel has " + std::to_string(spec.length_scale.size()) +
                     " length scales for " + std::to_string(dims) + "-dimensional inputs");
  }
  return spec.length_scale.cwiseInverse();
}

// Covariance as a function of the scaled distance r.
double profile(const KernelSpec& spec, double r2) {
  const double sf = spec.signal_variance;
  if (spec.kind == KernelKind::rbf) return sf * std::exp(-0.5 * r2);
  const double r = std::sqrt(r2);
  if (spec.nu == 0.5) return sf * std::exp(-r);
  if (spec.nu == 1.5) return sf * (1.0 + kSqrt3 * r) * std::exp(-kSqrt3 * r);
  return sf * (1.0 + kSqrt5 * r + 5.0 * r2 / 3.0) * std::exp(-kSqrt5 * r);
}

// d k / d log(l_d) = factor(r) * (diff_d / l_d)^2.
double gradient_factor(const KernelSpec& spec, double r2) {
  const double sf = spec.signal_variance;
  if (spec.kind == KernelKind::rbf) return sf * std::exp(-0.5 * r2);
  const double r = std::sqrt(r2);
  if (spec.nu == 0.5) return r > 0.0 ? sf * std::exp(-r) / r : 0.0;
  if (spec.nu == 1.5) return 3.0 * sf * std::exp(-kSqrt3 * r);
  return (5.0 / 3.0) * sf * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
}

// Pairwise squared distances. Narrow inputs use exact differences; wide ones
// (the augmented multi-fidelity inputs can have thousands of columns) use the
// GEMM expansion |a|^2 + |b|^2 - 2ab, clamped at zero.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& as, const Eigen::MatrixXd& bs) {
  Eigen::MatrixXd r2(as.rows(), bs.rows());
  if (as.cols() <= 32) {
    const Eigen::MatrixXd at = as.transpose();
    const Eigen::MatrixXd bt = bs.transpose();
    for (Eigen::Index j = 0; j < bs.rows(); ++j) {
      for (Eigen::Index i = 0; i < as.rows(); ++i) r2(i, j) = (at.col(i) - bt.col(j)).squaredNorm();
    }
    return r2;
  }
  const Eigen::VectorXd na = as.rowwise().squaredNorm();
  const Eigen::VectorXd nb = bs.rowwise().squaredNorm();
  r2.noalias() = -2.0 * as * bs.transpose();
  r2.colwise() += na;
  r2.rowwise() += nb.transpose();
  return r2.cwiseMax(0.0);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

KernelSpec KernelSpec::rbf(double length_scale, double signal_variance, double noise) {
  KernelSpec k;
  k.kind = KernelKind::rbf;
  k.length_scale = Eigen::VectorXd::Constant(1, length_scale);
  k.signal_variance = signal_variance;
  k.noise = noise;
  return k;
}

KernelSpec KernelSpec::matern(double nu, double length_scale, double signal_variance,
                              double noise) {
  KernelSpec k = rbf(length_scale, signal_variance, noise);
  k.kind = KernelKind::matern;
  k.nu = nu;
  return k;
}

void KernelSpec::validate() const {
  if (length_scale.size() == 0) throw InputError("kernel needs at least one length scale");
  for (Eigen::Index i = 0; i < length_scale.size(); ++i) {
    if (!(length_scale(i) > 0.0) || !std::isfinite(length_scale(i))) {
      throw InputError("kernel length scale must be positive, got " +
                       data::format_double(length_scale(i)));
    }
  }
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw InputError("kernel signal variance must be positive");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw InputError("kernel noise must be nonnegative");
  }
  if (kind == KernelKind::matern && nu != 0.5 && nu != 1.5 && nu != 2.5) {
    throw InputError("Matern nu must be 0.5, 1.5 or 2.5, got " + data::format_double(nu));
  }
}

std::string KernelSpec::name() const {
  std::string base = kind == KernelKind::rbf ? "RBF" : "Matern(nu=" + data::format_double(nu) + ")";
  return constant_scaled ? "Constant*" + base : base;
}

KernelSpec parse_kernel(const std::string& text) {
  std::string s = lower(text);
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
          s.end());
  KernelSpec spec;
  for (const std::string prefix : {"c*", "constant*"}) {
    if (s.rfind(prefix, 0) == 0) {
      spec.constant_scaled = true;
      s = s.substr(prefix.size());
      break;
    }
  }
  if (s == "rbf") {
    spec.kind = KernelKind::rbf;
  } else if (s.rfind("matern", 0) == 0) {
    spec.kind = KernelKind::matern;
    const auto rest = s.substr(6);
    if (!rest.empty()) {
      double nu = 0.0;
      if (rest.front() != ':' || !data::parse_double(rest.substr(1), nu)) {
        throw InputError("cannot parse kernel '" + text + "' (expected matern:<nu>)");
      }
      spec.nu = nu;
    }
  } else {
    throw InputError("unknown kernel '" + text + "' (expected rbf or matern:<nu>)");
  }
  spec.validate();
  return spec;
}

Eigen::MatrixXd kernel_eval(const KernelSpec& spec, const Eigen::MatrixXd& a,
                            const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) {
    throw InputError("kernel inputs have " + std::to_string(a.cols()) + " and " +
                     std::to_string(b.cols()) + " columns");
  }
  spec.validate();
  const Eigen::VectorXd inv = inverse_scales(spec, a.cols());
  const Eigen::MatrixXd as = a * inv.asDiagonal();
  const Eigen::MatrixXd bs = b * inv.asDiagonal();
  Eigen::MatrixXd k = squared_distances(as, bs);
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) k(i, j) = profile(spec, k(i, j));
  }
  return k;
}

std::vector<Eigen::MatrixXd> length_scale_gradients(const KernelSpec& spec,
                                                    const Eigen::MatrixXd& x) {
  const Eigen::VectorXd inv = inverse_scales(spec, x.cols());
  const Eigen::MatrixXd xs = x * inv.asDiagonal();
  const Eigen::Index n = x.rows();
  const Eigen::Index dims = x.cols();
  const std::size_t count = spec.isotropic() ? 1 : static_cast<std::size_t>(dims);
  std::vector<Eigen::MatrixXd> grads(count, Eigen::MatrixXd::Zero(n, n));
  if (spec.isotropic()) {
    const Eigen::MatrixXd r2 = squared_distances(xs, xs);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        grads[0](i, j) = i == j ? 0.0 : gradient_factor(spec, r2(i, j)) * r2(i, j);
      }
    }
    return grads;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const Eigen::RowVectorXd diff2 = (xs.row(i) - xs.row(j)).array().square();
      const double r2 = diff2.sum();
      const double factor = gradient_factor(spec, r2);
      for (Eigen::Index d = 0; d < dims; ++d) {
        grads[static_cast<std::size_t>(d)](i, j) = grads[static_cast<std::size_t>(d)](j, i) =
            factor * diff2(d);
      }
    }
  }
  return grads;
}

}  // namespace mfsm::gpr
