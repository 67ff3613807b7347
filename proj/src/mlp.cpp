#include "mfsm/mlp.hpp"

#include <cmath>
#include <limits>

#include "mfsm/errors.hpp"
#include "mfsm/rng.hpp"
#include "mfsm/tensor_io.hpp"

namespace mfsm::mlp {

namespace {

Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::tanh: return z.array().tanh();
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::identity: return z;
  }
  return z;
}

// f'(z) expressed through z and a = f(z).
Eigen::MatrixXd derivative(Activation act, const Eigen::MatrixXd& z, const Eigen::MatrixXd& a) {
  switch (act) {
    case Activation::tanh: return 1.0 - a.array().square();
    case Activation::relu: return (z.array() > 0.0).cast<double>();
    case Activation::identity: return Eigen::MatrixXd::Ones(z.rows(), z.cols());
  }
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

void check_input(const MlpModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.arch.input_dim) {
    throw InputError("network expects " + std::to_string(model.arch.input_dim) +
                     " inputs, got " + std::to_string(x.cols()));
  }
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx,
                        std::size_t begin, std::size_t end) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(end - begin), m.cols());
  for (std::size_t i = begin; i < end; ++i) {
    out.row(static_cast<Eigen::Index>(i - begin)) = m.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  if (s == "identity" || s == "linear") return Activation::identity;
  throw InputError("unknown activation '" + s + "' (expected tanh, relu or identity)");
}

MlpArchitecture MlpArchitecture::uniform(Eigen::Index input_dim, std::vector<Eigen::Index> hidden,
                                         Eigen::Index output_dim, Activation activation) {
  MlpArchitecture a;
  a.input_dim = input_dim;
  a.output_dim = output_dim;
  a.activations.assign(hidden.size(), activation);
  a.hidden = std::move(hidden);
  return a;
}

void MlpArchitecture::validate() const {
  if (input_dim < 1 || output_dim < 1) throw InputError("network input/output widths must be >= 1");
  if (hidden.empty()) throw InputError("network needs at least one hidden layer");
  for (auto w : hidden) {
    if (w < 1) throw InputError("hidden layer widths must be >= 1");
  }
  if (activations.size() != hidden.size()) {
    throw InputError("network needs one activation per hidden layer");
  }
}

std::size_t MlpArchitecture::parameter_count() const {
  std::size_t count = 0;
  Eigen::Index fan_in = input_dim;
  for (auto w : hidden) {
    count += static_cast<std::size_t>((fan_in + 1) * w);
    fan_in = w;
  }
  return count + static_cast<std::size_t>((fan_in + 1) * output_dim);
}

std::string MlpArchitecture::describe() const {
  std::string s = std::to_string(input_dim);
  for (auto w : hidden) s += "-" + std::to_string(w);
  s += "-" + std::to_string(output_dim);
  if (!activations.empty()) s += " " + to_string(activations.front());
  return s;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("learning_rate must be positive");
  if (max_epochs < 1) throw InputError("max_epochs must be positive");
  if (batch_size < 1) throw InputError("batch_size must be positive");
  if (early_stop_patience < 0 || early_stop_patience > max_epochs) {
    throw InputError("early_stop_patience must lie in [0, max_epochs]");
  }
}

MlpModel mlp_init(const MlpArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  MlpModel model;
  model.arch = arch;
  Rng rng(seed);
  Eigen::Index fan_in = arch.input_dim;
  for (std::size_t k = 0; k <= arch.hidden.size(); ++k) {
    const bool output = k == arch.hidden.size();
    DenseLayer layer;
    layer.activation = output ? Activation::identity : arch.activations[k];
    const Eigen::Index width = output ? arch.output_dim : arch.hidden[k];
    const double gain = layer.activation == Activation::relu ? 6.0 : 3.0;
    const double limit = std::sqrt(gain / static_cast<double>(fan_in));
    layer.weights.resize(width, fan_in);
    for (Eigen::Index j = 0; j < fan_in; ++j) {
      for (Eigen::Index i = 0; i < width; ++i) {
        layer.weights(i, j) = limit * (2.0 * uniform01(rng) - 1.0);
      }
    }
    layer.bias = Eigen::VectorXd::Zero(width);
    model.layers.push_back(std::move(layer));
    fan_in = width;
  }
  return model;
}

Eigen::MatrixXd mlp_forward(const MlpModel& model, const Eigen::MatrixXd& x) {
  check_input(model, x);
  Eigen::MatrixXd a = x;
  for (const auto& layer : model.layers) {
    Eigen::MatrixXd z = a * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    a = activate(layer.activation, z);
  }
  return a;
}

Eigen::VectorXd flatten_parameters(const MlpModel& model) {
  Eigen::Index total = 0;
  for (const auto& l : model.layers) total += l.weights.size() + l.bias.size();
  Eigen::VectorXd p(total);
  Eigen::Index k = 0;
  for (const auto& l : model.layers) {
    p.segment(k, l.weights.size()) = Eigen::Map<const Eigen::VectorXd>(l.weights.data(), l.weights.size());
    k += l.weights.size();
    p.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return p;
}

void set_parameters(MlpModel& model, const Eigen::VectorXd& params) {
  Eigen::Index k = 0;
  for (auto& l : model.layers) {
    const Eigen::Index need = l.weights.size() + l.bias.size();
    if (k + need > params.size()) throw InputError("parameter vector too short for network");
    Eigen::Map<Eigen::VectorXd>(l.weights.data(), l.weights.size()) = params.segment(k, l.weights.size());
    k += l.weights.size();
    l.bias = params.segment(k, l.bias.size());
    k += l.bias.size();
  }
  if (k != params.size()) throw InputError("parameter vector too long for network");
}

LossGradient mse_loss_gradient(const MlpModel& model, const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& y) {
  check_input(model, x);
  if (y.rows() != x.rows() || y.cols() != model.arch.output_dim) {
    throw InputError("network targets have the wrong shape");
  }
  const std::size_t depth = model.layers.size();
  std::vector<Eigen::MatrixXd> acts{x};
  std::vector<Eigen::MatrixXd> pre;
  for (const auto& layer : model.layers) {
    Eigen::MatrixXd z = acts.back() * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    acts.push_back(activate(layer.activation, z));
    pre.push_back(std::move(z));
  }
  const double count = static_cast<double>(y.size());
  const Eigen::MatrixXd resid = acts.back() - y;

  LossGradient out;
  out.loss = resid.squaredNorm() / count;

  std::vector<Eigen::MatrixXd> grad_w(depth);
  std::vector<Eigen::VectorXd> grad_b(depth);
  Eigen::MatrixXd delta = (2.0 / count) * resid;
  for (std::size_t k = depth; k-- > 0;) {
    const auto& layer = model.layers[k];
    const Eigen::MatrixXd dz = delta.cwiseProduct(derivative(layer.activation, pre[k], acts[k + 1]));
    grad_w[k] = dz.transpose() * acts[k];
    grad_b[k] = dz.colwise().sum().transpose();
    if (k > 0) delta = dz * layer.weights;
  }

  Eigen::Index total = 0;
  for (std::size_t k = 0; k < depth; ++k) total += grad_w[k].size() + grad_b[k].size();
  out.gradient.resize(total);
  Eigen::Index pos = 0;
  for (std::size_t k = 0; k < depth; ++k) {
    out.gradient.segment(pos, grad_w[k].size()) =
        Eigen::Map<const Eigen::VectorXd>(grad_w[k].data(), grad_w[k].size());
    pos += grad_w[k].size();
    out.gradient.segment(pos, grad_b[k].size()) = grad_b[k];
    pos += grad_b[k].size();
  }
  return out;
}

double mse_loss(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  return (mlp_forward(model, x) - y).squaredNorm() / static_cast<double>(y.size());
}

MlpModel mlp_train(const MlpArchitecture& arch, const TrainConfig& cfg,
                   const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train,
                   const Eigen::MatrixXd& x_val, const Eigen::MatrixXd& y_val) {
  cfg.validate();
  arch.validate();
  if (x_train.rows() == 0) throw InputError("cannot train a network on an empty training set");
  if (x_train.rows() != y_train.rows() || x_train.cols() != arch.input_dim ||
      y_train.cols() != arch.output_dim) {
    throw InputError("training data shape does not match network " + arch.describe());
  }
  const bool have_val = x_val.rows() > 0;
  if (have_val && (x_val.rows() != y_val.rows() || x_val.cols() != arch.input_dim ||
                   y_val.cols() != arch.output_dim)) {
    throw InputError("validation data shape does not match network " + arch.describe());
  }

  MlpModel model = mlp_init(arch, cfg.seed);
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Eigen::VectorXd params = flatten_parameters(model);
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd best_params = params;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  long step = 0;

  const auto n = static_cast<std::size_t>(x_train.rows());
  const auto batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (batch < n) shuffle(order, rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      const bool full = start == 0 && end == n;
      const auto grad = full ? mse_loss_gradient(model, x_train, y_train)
                             : mse_loss_gradient(model, rows_of(x_train, order, start, end),
                                                 rows_of(y_train, order, start, end));
      ++step;
      if (cfg.optimizer == Optimizer::adam) {
        m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * grad.gradient;
        m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * grad.gradient.cwiseAbs2();
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
        params.array() -= cfg.learning_rate * (m1.array() / c1) /
                          ((m2.array() / c2).sqrt() + cfg.epsilon);
      } else {
        params -= cfg.learning_rate * grad.gradient;
      }
      set_parameters(model, params);
    }

    EpochLoss record;
    record.epoch = epoch;
    record.train_loss = mse_loss(model, x_train, y_train);
    record.val_loss = have_val ? mse_loss(model, x_val, y_val) : record.train_loss;
    model.history.push_back(record);
    if (!std::isfinite(record.train_loss) || !std::isfinite(record.val_loss)) {
      throw NumericError("network training diverged at epoch " + std::to_string(epoch) +
                         " with learning rate " + data::format_double(cfg.learning_rate));
    }
    if (record.val_loss < best_loss) {
      best_loss = record.val_loss;
      best_params = params;
      model.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best > cfg.early_stop_patience) {
      break;
    }
  }
  set_parameters(model, best_params);
  return model;
}

std::string history_csv(const MlpModel& model) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (const auto& h : model.history) {
    out += std::to_string(h.epoch) + "," + data::format_double(h.train_loss) + "," +
           data::format_double(h.val_loss) + "\n";
  }
  return out;
}

}  // namespace mfsm::mlp
