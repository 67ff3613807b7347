#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mfsm::mlp {

enum class Activation { tanh, relu, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct MlpArchitecture {
  Eigen::Index input_dim = 1;
  std::vector<Eigen::Index> hidden;
  Eigen::Index output_dim = 1;
  std::vector<Activation> activations;  // one per hidden layer; output is identity

  static MlpArchitecture uniform(Eigen::Index input_dim, std::vector<Eigen::Index> hidden,
                                 Eigen::Index output_dim, Activation activation);
  void validate() const;
  std::size_t parameter_count() const;
  std::string describe() const;  // e.g. "4-32-32-7 tanh"
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
  Activation activation = Activation::identity;
};

struct EpochLoss {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

enum class Optimizer { adam, sgd };

struct TrainConfig {
  double learning_rate = 1e-3;
  int max_epochs = 2000;
  int batch_size = 32;
  int early_stop_patience = 50;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct MlpModel {
  MlpArchitecture arch;
  std::vector<DenseLayer> layers;
  std::vector<EpochLoss> history;
  int best_epoch = 0;
};

/// Seeded fan-in uniform weights (limit sqrt(3/fan_in), sqrt(6/fan_in) ahead
/// of ReLU), zero biases.
MlpModel mlp_init(const MlpArchitecture& arch, std::uint64_t seed);

/// Layer-wise z = W a + b, a = f(z); the last layer is linear.
Eigen::MatrixXd mlp_forward(const MlpModel& model, const Eigen::MatrixXd& x);
inline Eigen::MatrixXd mlp_predict(const MlpModel& model, const Eigen::MatrixXd& x) {
  return mlp_forward(model, x);
}

/// Parameters in a fixed order: for each layer, weights (column-major) then bias.
Eigen::VectorXd flatten_parameters(const MlpModel& model);
void set_parameters(MlpModel& model, const Eigen::VectorXd& params);

struct LossGradient {
  double loss = 0.0;  // mean over all N*q entries of squared error
  Eigen::VectorXd gradient;
};
LossGradient mse_loss_gradient(const MlpModel& model, const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& y);
double mse_loss(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// Minibatch training with early stopping on validation MSE; the returned
/// model carries the parameters of the best validation epoch. With an empty
/// validation set the training loss drives early stopping. Throws
/// NumericError if the loss becomes non-finite.
MlpModel mlp_train(const MlpArchitecture& arch, const TrainConfig& cfg,
                   const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train,
                   const Eigen::MatrixXd& x_val, const Eigen::MatrixXd& y_val);

/// epoch,train_loss,val_loss
std::string history_csv(const MlpModel& model);

}  // namespace mfsm::mlp
