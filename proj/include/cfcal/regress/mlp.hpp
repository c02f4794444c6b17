#pragma once

#include "cfcal/phase1.hpp"
#include "cfcal/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace cfcal::regress {

enum class Activation { Relu, Sigmoid, Tanh };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

struct MlpArch {
  int hidden_layers{3};
  int width{300};
  Activation activation{Activation::Relu};

  // "u300_h3_relu": units, hidden layers, activation.
  std::string tag() const;
  friend bool operator==(const MlpArch&, const MlpArch&) = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

// Fully connected network on standardized inputs. The final layer is linear and
// its output is mapped back to millimetres with the stored target statistics,
// so every loss and gradient below is in mm^2.
struct MlpModel {
  Activation activation{Activation::Relu};
  std::vector<DenseLayer> layers;  // hidden layers then the output layer
  Eigen::VectorXd input_mean, input_std;
  Eigen::VectorXd output_mean, output_std;
  std::vector<double> epoch_loss;  // training log, mean squared L2 per epoch

  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().weight.rows()); }
  std::vector<int> sizes() const;
  std::size_t parameter_count() const;
  void validate() const;

  // Columns are samples; raw units in and out.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& X) const;
  BasePosition predict(const CameraPosition& c, const Orientation& phi) const;
};

MlpModel init_mlp(const MlpArch& arch, int input_dim, int output_dim, std::uint64_t seed);

// Per-feature mean and standard deviation over the columns of X. Zero spread
// is replaced by one.
void set_standardization(MlpModel& m, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

using MlpGradient = std::vector<DenseLayer>;

// Mean over columns of |prediction - target|^2.
double mlp_loss(const MlpModel& m, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

// Gradient of mlp_loss with respect to every weight and bias.
MlpGradient mlp_gradient(const MlpModel& m, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                         double* loss = nullptr);

struct TrainOptions {
  int epochs{1000};
  int batch_size{64};  // 0 trains full-batch
  double learning_rate{1e-3};
  double beta1{0.9};
  double beta2{0.999};
  double epsilon{1e-8};
  std::uint64_t seed{0};
};

MlpModel train_mlp(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const MlpArch& arch,
                   const TrainOptions& opts);
MlpModel train_mlp(const phase1::CoarseDataset& ds, const MlpArch& arch, const TrainOptions& opts);

// 6 x n inputs (c_x, c_y, c_z, yaw, pitch, roll) and 3 x n targets.
Eigen::MatrixXd dataset_inputs(const phase1::CoarseDataset& ds);
Eigen::MatrixXd dataset_targets(const phase1::CoarseDataset& ds);

}  // namespace cfcal::regress
