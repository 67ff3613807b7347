#include "mfsm/gpr.hpp"

#include <cmath>
#include <limits>

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include "mfsm/errors.hpp"
#include "mfsm/rng.hpp"
#include "mfsm/tensor_io.hpp"

namespace mfsm::gpr {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

// Jitter ladder: 0, then 1e-10..1e-6 times the mean diagonal.
std::optional<Factorization> factor(Eigen::MatrixXd k_noisy) {
  Factorization f;
  f.llt.compute(k_noisy);
  if (f.llt.info() == Eigen::Success) return f;
  const double base = k_noisy.diagonal().mean();
  double applied = 0.0;
  for (double rel = 1e-10; rel <= 1e-6 * (1.0 + 1e-9); rel *= 10.0) {
    const double target = rel * base;
    k_noisy.diagonal().array() += target - applied;
    applied = target;
    f.llt.compute(k_noisy);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = applied;
      return f;
    }
  }
  return std::nullopt;
}

double log_marginal_likelihood(const Eigen::MatrixXd& y, const Eigen::MatrixXd& alpha,
                               const Eigen::MatrixXd& chol) {
  const double q = static_cast<double>(y.cols());
  const double n = static_cast<double>(y.rows());
  const double data_fit = -0.5 * y.cwiseProduct(alpha).sum();
  const double log_det_half = chol.diagonal().array().log().sum();
  return data_fit - q * log_det_half - q * 0.5 * n * kLog2Pi;
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw InputError(std::string("GPR ") + what + " contains non-finite values");
}

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

// Free parameters in log space, with the box mapped through a sigmoid so the
// unconstrained optimizer never leaves the bounds.
class ParameterMap {
 public:
  ParameterMap(const KernelSpec& base, const HyperBounds& bounds, Eigen::Index dims)
      : base_(base), optimize_noise_(bounds.optimize_noise) {
    const auto add = [this](std::pair<double, double> b) {
      lo_.push_back(std::log(b.first));
      hi_.push_back(std::log(b.second));
    };
    n_scales_ = base.isotropic() ? 1 : dims;
    for (Eigen::Index i = 0; i < n_scales_; ++i) add(bounds.length_scale);
    if (base.constant_scaled) add(bounds.signal_variance);
    if (optimize_noise_) add(bounds.noise);
  }

  std::size_t size() const { return lo_.size(); }

  KernelSpec to_spec(const double* u) const {
    KernelSpec s = base_;
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < n_scales_; ++i, ++k) s.length_scale(i) = std::exp(log_value(u[k], k));
    if (base_.constant_scaled) {
      s.signal_variance = std::exp(log_value(u[k], k));
      ++k;
    }
    if (optimize_noise_) s.noise = std::exp(log_value(u[k], k));
    return s;
  }

  // d log(theta_k) / d u_k.
  double chain(double u, std::size_t k) const {
    const double s = sigmoid(u);
    return (hi_[k] - lo_[k]) * s * (1.0 - s);
  }

  std::vector<double> from_log(const std::vector<double>& log_theta) const {
    std::vector<double> u(size());
    for (std::size_t k = 0; k < size(); ++k) {
      double p = (log_theta[k] - lo_[k]) / (hi_[k] - lo_[k]);
      p = std::clamp(p, 1e-3, 1.0 - 1e-3);
      u[k] = std::log(p / (1.0 - p));
    }
    return u;
  }

  std::vector<double> log_params(const KernelSpec& s) const {
    std::vector<double> out;
    for (Eigen::Index i = 0; i < n_scales_; ++i) {
      out.push_back(std::log(s.isotropic() ? s.length_scale(0) : s.length_scale(i)));
    }
    if (base_.constant_scaled) out.push_back(std::log(s.signal_variance));
    if (optimize_noise_) {
      out.push_back(s.noise > 0.0 ? std::log(s.noise) : -std::numeric_limits<double>::infinity());
    }
    return out;
  }

  std::vector<double> random_log_params(Rng& rng) const {
    std::vector<double> out(size());
    for (std::size_t k = 0; k < size(); ++k) out[k] = lo_[k] + (hi_[k] - lo_[k]) * uniform01(rng);
    return out;
  }

 private:
  double log_value(double u, std::size_t k) const { return lo_[k] + (hi_[k] - lo_[k]) * sigmoid(u); }

  KernelSpec base_;
  bool optimize_noise_;
  Eigen::Index n_scales_ = 1;
  std::vector<double> lo_, hi_;
};

class NegativeLml : public ceres::FirstOrderFunction {
 public:
  NegativeLml(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const ParameterMap& map,
              bool optimize_noise)
      : x_(x), y_(y), map_(map), optimize_noise_(optimize_noise) {}

  bool Evaluate(const double* u, double* cost, double* gradient) const override {
    const KernelSpec spec = map_.to_spec(u);
    const auto r = lml_with_gradient(x_, y_, spec, optimize_noise_);
    if (!r || !std::isfinite(r->lml)) return false;
    *cost = -r->lml;
    if (gradient != nullptr) {
      for (std::size_t k = 0; k < map_.size(); ++k) {
        gradient[k] = -r->gradient(static_cast<Eigen::Index>(k)) * map_.chain(u[k], k);
      }
    }
    return true;
  }

  int NumParameters() const override { return static_cast<int>(map_.size()); }

 private:
  const Eigen::MatrixXd& x_;
  const Eigen::MatrixXd& y_;
  const ParameterMap& map_;
  bool optimize_noise_;
};

double lml_or_neg_inf(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const KernelSpec& s) {
  try {
    return gpr_fit(x, y, s).lml;
  } catch (const NumericError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace

GprModel gpr_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const KernelSpec& spec) {
  if (x.rows() == 0) throw InputError("GPR needs at least one training point");
  if (x.rows() != y.rows()) {
    throw InputError("GPR inputs have " + std::to_string(x.rows()) + " rows, targets have " +
                     std::to_string(y.rows()));
  }
  check_finite(x, "inputs");
  check_finite(y, "targets");
  spec.validate();

  GprModel model;
  model.kernel = spec;
  model.x_train = x;
  Eigen::MatrixXd k = kernel_eval(spec, x, x);
  k.diagonal().array() += spec.noise;
  auto f = factor(std::move(k));
  if (!f) {
    throw NumericError("Cholesky factorization failed after maximum jitter for kernel " +
                       spec.name() + "; the kernel matrix is ill-conditioned (duplicate inputs?)");
  }
  model.chol = f->llt.matrixL();
  model.alpha = f->llt.solve(y);
  model.jitter_used = f->jitter;
  model.lml = log_marginal_likelihood(y, model.alpha, model.chol);
  return model;
}

Prediction gpr_predict(const GprModel& model, const Eigen::MatrixXd& x_star) {
  if (x_star.cols() != model.input_dim()) {
    throw InputError("GPR trained on " + std::to_string(model.input_dim()) +
                     " inputs, query has " + std::to_string(x_star.cols()));
  }
  const Eigen::MatrixXd k_star = kernel_eval(model.kernel, x_star, model.x_train);  // N* x N
  Prediction p;
  p.mean = k_star * model.alpha;
  const Eigen::MatrixXd v =
      model.chol.triangularView<Eigen::Lower>().solve(k_star.transpose());
  // Stationary kernels: k(x, x) is the signal variance.
  p.variance = (Eigen::VectorXd::Constant(x_star.rows(), model.kernel.signal_variance) -
                v.colwise().squaredNorm().transpose())
                   .cwiseMax(0.0);
  return p;
}

Eigen::MatrixXd gpr_predict_mean(const GprModel& model, const Eigen::MatrixXd& x_star) {
  if (x_star.cols() != model.input_dim()) {
    throw InputError("GPR trained on " + std::to_string(model.input_dim()) +
                     " inputs, query has " + std::to_string(x_star.cols()));
  }
  return kernel_eval(model.kernel, x_star, model.x_train) * model.alpha;
}

void HyperBounds::validate() const {
  for (const auto& [name, b] : {std::pair{"length_scale", length_scale},
                                std::pair{"signal_variance", signal_variance},
                                std::pair{"noise", noise}}) {
    if (!(b.first > 0.0) || !(b.second > b.first) || !std::isfinite(b.second)) {
      throw InputError(std::string("invalid ") + name + " bounds [" +
                       data::format_double(b.first) + ", " + data::format_double(b.second) + "]");
    }
  }
}

std::size_t free_parameter_count(const KernelSpec& spec, bool optimize_noise) {
  return static_cast<std::size_t>(spec.length_scale.size()) + (spec.constant_scaled ? 1 : 0) +
         (optimize_noise ? 1 : 0);
}

std::optional<LmlGradient> lml_with_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                             const KernelSpec& spec, bool optimize_noise) {
  const Eigen::MatrixXd k_signal = kernel_eval(spec, x, x);
  Eigen::MatrixXd k = k_signal;
  k.diagonal().array() += spec.noise;
  auto f = factor(std::move(k));
  if (!f) return std::nullopt;

  const Eigen::MatrixXd alpha = f->llt.solve(y);
  const Eigen::MatrixXd chol = f->llt.matrixL();
  LmlGradient out;
  out.lml = log_marginal_likelihood(y, alpha, chol);

  const double q = static_cast<double>(y.cols());
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd w = alpha * alpha.transpose();
  w.noalias() -= q * f->llt.solve(Eigen::MatrixXd::Identity(n, n));

  std::vector<double> grad;
  for (const auto& dk : length_scale_gradients(spec, x)) grad.push_back(0.5 * w.cwiseProduct(dk).sum());
  if (spec.constant_scaled) grad.push_back(0.5 * w.cwiseProduct(k_signal).sum());
  if (optimize_noise) grad.push_back(0.5 * spec.noise * w.trace());
  out.gradient = Eigen::Map<Eigen::VectorXd>(grad.data(), static_cast<Eigen::Index>(grad.size()));
  return out;
}

OptimizeResult optimize_hyperparameters(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                        const KernelSpec& spec, const OptimizeOptions& opts) {
  if (opts.restarts < 1) throw InputError("optimizer needs at least one restart");
  opts.bounds.validate();
  spec.validate();
  if (!spec.isotropic() && spec.length_scale.size() != x.cols()) {
    throw InputError("kernel has " + std::to_string(spec.length_scale.size()) +
                     " length scales for " + std::to_string(x.cols()) + "-dimensional inputs");
  }
  const ParameterMap map(spec, opts.bounds, x.cols());
  Rng rng(opts.seed);

  OptimizeResult result;
  result.best_lml = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    // Draw every restart's start from the stream so the sequence does not
    // depend on which restarts succeed.
    const auto drawn = map.random_log_params(rng);
    std::vector<double> u = map.from_log(r == 0 ? map.log_params(spec) : drawn);

    RestartRecord rec;
    rec.start = map.to_spec(u.data());
    rec.start_lml = lml_or_neg_inf(x, y, rec.start);

    ceres::GradientProblemSolver::Options options;
    options.line_search_direction_type = ceres::LBFGS;
    options.logging_type = ceres::SILENT;
    options.minimizer_progress_to_stdout = false;
    options.max_num_iterations = opts.max_iterations;
    options.function_tolerance = 1e-10;
    options.gradient_tolerance = 1e-8;
    options.parameter_tolerance = 1e-10;
    ceres::GradientProblemSolver::Summary summary;
    if (std::isfinite(rec.start_lml)) {
      ceres::GradientProblem problem(new NegativeLml(x, y, map, opts.bounds.optimize_noise));
      ceres::Solve(options, problem, u.data(), &summary);
      rec.result = map.to_spec(u.data());
      rec.result_lml = lml_or_neg_inf(x, y, rec.result);
      if (!(rec.result_lml >= rec.start_lml)) {
        rec.result = rec.start;
        rec.result_lml = rec.start_lml;
      }
    } else {
      rec.failed = true;
      rec.result = rec.start;
      rec.result_lml = rec.start_lml;
    }
    if (rec.result_lml > result.best_lml) {
      result.best_lml = rec.result_lml;
      result.best = rec.result;
      result.best_restart = static_cast<std::size_t>(r);
    }
    result.restarts.push_back(std::move(rec));
  }
  if (!std::isfinite(result.best_lml)) {
    std::string diag;
    for (std::size_t r = 0; r < result.restarts.size(); ++r) {
      diag += " restart " + std::to_string(r) + " start " + result.restarts[r].start.name() +
              " l=" + data::format_double(result.restarts[r].start.length_scale(0)) +
              " noise=" + data::format_double(result.restarts[r].start.noise) + ";";
    }
    throw NumericError("all hyperparameter restarts failed to factor the kernel matrix:" + diag);
  }
  return result;
}

}  // namespace mfsm::gpr
