#include "cfcal/regress/mlp.hpp"

#include "cfcal/errors.hpp"
#include "cfcal/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cfcal::regress {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "tanh") return Activation::Tanh;
  throw InvalidArgument("unknown activation '" + s + "'");
}

std::string MlpArch::tag() const {
  return "u" + std::to_string(width) + "_h" + std::to_string(hidden_layers) + "_" + to_string(activation);
}

namespace {

void activate(Activation a, MatrixXd& Z) {
  switch (a) {
    case Activation::Relu: Z = Z.cwiseMax(0.0); break;
    case Activation::Sigmoid: Z = (1.0 + (-Z.array()).exp()).inverse().matrix(); break;
    case Activation::Tanh: Z = Z.array().tanh().matrix(); break;
  }
}

// dA <- dA * f'(z), expressed through the activation output A = f(z).
void backprop_activation(Activation a, const MatrixXd& A, MatrixXd& dA) {
  switch (a) {
    case Activation::Relu: dA.array() *= (A.array() > 0.0).cast<double>(); break;
    case Activation::Sigmoid: dA.array() *= A.array() * (1.0 - A.array()); break;
    case Activation::Tanh: dA.array() *= 1.0 - A.array().square(); break;
  }
}

struct Scratch {
  std::vector<MatrixXd> act;  // act[0] input, act[l + 1] output of layer l
  MatrixXd delta;
  MatrixXd back;
};

MatrixXd standardize(const MlpModel& m, const MatrixXd& X) {
  return ((X.colwise() - m.input_mean).array().colwise() / m.input_std.array()).matrix();
}

// Forward pass on standardized inputs; returns the mean squared L2 loss in mm^2
// and, when grad is non-null, fills it with the loss gradient.
double forward_backward(const MlpModel& m, const MatrixXd& Xs, const MatrixXd& Y, Scratch& s,
                        MlpGradient* grad) {
  const std::size_t L = m.layers.size();
  const double B = static_cast<double>(Xs.cols());
  s.act.resize(L + 1);
  s.act[0] = Xs;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& layer = m.layers[l];
    s.act[l + 1].noalias() = layer.weight * s.act[l];
    s.act[l + 1].colwise() += layer.bias;
    if (l + 1 < L) activate(m.activation, s.act[l + 1]);
  }
  // Residual in millimetres.
  s.delta = ((s.act[L].array().colwise() * m.output_std.array()).colwise() + m.output_mean.array()).matrix() - Y;
  const double loss = s.delta.squaredNorm() / B;
  if (!grad) return loss;

  s.delta = ((s.delta.array().colwise() * m.output_std.array()) * (2.0 / B)).matrix();
  grad->resize(L);
  for (std::size_t l = L; l-- > 0;) {
    auto& g = (*grad)[l];
    g.weight.noalias() = s.delta * s.act[l].transpose();
    g.bias = s.delta.rowwise().sum();
    if (l == 0) break;
    s.back.noalias() = m.layers[l].weight.transpose() * s.delta;
    backprop_activation(m.activation, s.act[l], s.back);
    s.delta.swap(s.back);
  }
  return loss;
}

}  // namespace

std::vector<int> MlpModel::sizes() const {
  std::vector<int> out;
  if (layers.empty()) return out;
  out.push_back(input_dim());
  for (const auto& l : layers) out.push_back(static_cast<int>(l.weight.rows()));
  return out;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

void MlpModel::validate() const {
  if (layers.size() < 2) throw InvalidArgument("mlp needs at least one hidden layer");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].bias.size() != layers[l].weight.rows())
      throw InvalidArgument("mlp layer " + std::to_string(l) + ": bias size mismatch");
    if (l > 0 && layers[l].weight.cols() != layers[l - 1].weight.rows())
      throw InvalidArgument("mlp layer " + std::to_string(l) + ": shapes do not chain");
  }
  if (input_mean.size() != input_dim() || input_std.size() != input_dim() ||
      output_mean.size() != output_dim() || output_std.size() != output_dim())
    throw InvalidArgument("mlp standardization size mismatch");
  if ((input_std.array() <= 0.0).any() || (output_std.array() <= 0.0).any())
    throw InvalidArgument("mlp standardization spreads must be positive");
}

MatrixXd MlpModel::forward(const MatrixXd& X) const {
  const std::size_t L = layers.size();
  MatrixXd a = standardize(*this, X);
  for (std::size_t l = 0; l < L; ++l) {
    MatrixXd z = layers[l].weight * a;
    z.colwise() += layers[l].bias;
    if (l + 1 < L) activate(activation, z);
    a.swap(z);
  }
  return ((a.array().colwise() * output_std.array()).colwise() + output_mean.array()).matrix();
}

BasePosition MlpModel::predict(const CameraPosition& c, const Orientation& phi) const {
  Eigen::Matrix<double, 6, 1> x;
  x << c.x(), c.y(), c.z(), phi.yaw, phi.pitch, phi.roll;
  return BasePosition(forward(x).col(0).head<3>());
}

MlpModel init_mlp(const MlpArch& arch, int input_dim, int output_dim, std::uint64_t seed) {
  if (arch.hidden_layers < 1 || arch.width < 1) throw InvalidArgument("mlp needs a hidden layer of positive width");
  Rng rng = make_rng(seed);
  MlpModel m;
  m.activation = arch.activation;
  int fan_in = input_dim;
  for (int l = 0; l <= arch.hidden_layers; ++l) {
    const int fan_out = l < arch.hidden_layers ? arch.width : output_dim;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    DenseLayer layer;
    layer.weight.resize(fan_out, fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    // Column-major fill order is part of the determinism contract.
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = dist(rng);
    layer.bias = VectorXd::Zero(fan_out);
    m.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  m.input_mean = VectorXd::Zero(input_dim);
  m.input_std = VectorXd::Ones(input_dim);
  m.output_mean = VectorXd::Zero(output_dim);
  m.output_std = VectorXd::Ones(output_dim);
  return m;
}

void set_standardization(MlpModel& m, const MatrixXd& X, const MatrixXd& Y) {
  auto stats = [](const MatrixXd& M, VectorXd& mean, VectorXd& sd) {
    mean = M.rowwise().mean();
    sd = ((M.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(M.cols())).sqrt();
    for (Eigen::Index i = 0; i < sd.size(); ++i)
      if (!(sd[i] > 1e-12)) sd[i] = 1.0;
  };
  stats(X, m.input_mean, m.input_std);
  stats(Y, m.output_mean, m.output_std);
}

double mlp_loss(const MlpModel& m, const MatrixXd& X, const MatrixXd& Y) {
  return (m.forward(X) - Y).squaredNorm() / static_cast<double>(X.cols());
}

MlpGradient mlp_gradient(const MlpModel& m, const MatrixXd& X, const MatrixXd& Y, double* loss) {
  if (X.cols() == 0) throw InvalidArgument("mlp_gradient: empty batch");
  Scratch s;
  MlpGradient g;
  const double l = forward_backward(m, standardize(m, X), Y, s, &g);
  if (loss) *loss = l;
  return g;
}

MlpModel train_mlp(const MatrixXd& X, const MatrixXd& Y, const MlpArch& arch, const TrainOptions& opts) {
  if (X.cols() == 0 || X.cols() != Y.cols()) throw InvalidArgument("train_mlp: empty or mismatched data");
  if (opts.epochs < 1) throw InvalidArgument("train_mlp: epochs must be >= 1");
  MlpModel m = init_mlp(arch, static_cast<int>(X.rows()), static_cast<int>(Y.rows()), opts.seed);
  set_standardization(m, X, Y);
  const MatrixXd Xs = standardize(m, X);
  const Eigen::Index n = X.cols();
  const Eigen::Index B = opts.batch_size <= 0 ? n : std::min<Eigen::Index>(opts.batch_size, n);

  MlpGradient mom1(m.layers.size()), mom2(m.layers.size()), grad;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    mom1[l].weight = MatrixXd::Zero(m.layers[l].weight.rows(), m.layers[l].weight.cols());
    mom1[l].bias = VectorXd::Zero(m.layers[l].bias.size());
    mom2[l] = mom1[l];
  }
  Rng rng = make_rng(derive_seed(opts.seed, Stream::Mlp));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Scratch scratch;
  MatrixXd xb, yb;
  long step = 0;
  double b1t = 1.0, b2t = 1.0;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    if (B < n) std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0.0;
    for (Eigen::Index start = 0; start < n; start += B) {
      const Eigen::Index len = std::min(B, n - start);
      if (B == n) {
        xb = Xs;
        yb = Y;
      } else {
        xb.resize(Xs.rows(), len);
        yb.resize(Y.rows(), len);
        for (Eigen::Index j = 0; j < len; ++j) {
          xb.col(j) = Xs.col(order[static_cast<std::size_t>(start + j)]);
          yb.col(j) = Y.col(order[static_cast<std::size_t>(start + j)]);
        }
      }
      const double loss = forward_backward(m, xb, yb, scratch, &grad);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "train_mlp(" << arch.tag() << "): non-finite loss at epoch " << epoch << ", batch starting at row "
            << start << " after " << step << " updates";
        throw NumericFailure(msg.str());
      }
      epoch_sum += loss * static_cast<double>(len);

      ++step;
      b1t *= opts.beta1;
      b2t *= opts.beta2;
      const double lr_t = opts.learning_rate * std::sqrt(1.0 - b2t) / (1.0 - b1t);
      // Adam with the bias corrections folded into the step; eps scaled to match
      // the uncorrected form m_hat / (sqrt(v_hat) + eps).
      const double eps_t = opts.epsilon * std::sqrt(1.0 - b2t);
      for (std::size_t l = 0; l < m.layers.size(); ++l) {
        auto update = [&](auto& param, auto& g, auto& m1, auto& m2) {
          m1.array() = opts.beta1 * m1.array() + (1.0 - opts.beta1) * g.array();
          m2.array() = opts.beta2 * m2.array() + (1.0 - opts.beta2) * g.array().square();
          param.array() -= lr_t * m1.array() / (m2.array().sqrt() + eps_t);
        };
        update(m.layers[l].weight, grad[l].weight, mom1[l].weight, mom2[l].weight);
        update(m.layers[l].bias, grad[l].bias, mom1[l].bias, mom2[l].bias);
      }
    }
    m.epoch_loss.push_back(epoch_sum / static_cast<double>(n));
  }
  return m;
}

MatrixXd dataset_inputs(const phase1::CoarseDataset& ds) {
  MatrixXd X(6, static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto in = ds.samples[i].input();
    for (int k = 0; k < 6; ++k) X(k, static_cast<Eigen::Index>(i)) = in[static_cast<std::size_t>(k)];
  }
  return X;
}

MatrixXd dataset_targets(const phase1::CoarseDataset& ds) {
  MatrixXd Y(3, static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) Y.col(static_cast<Eigen::Index>(i)) = ds.samples[i].target.v;
  return Y;
}

MlpModel train_mlp(const phase1::CoarseDataset& ds, const MlpArch& arch, const TrainOptions& opts) {
  if (ds.empty()) throw EmptyDataset("train_mlp: empty dataset");
  return train_mlp(dataset_inputs(ds), dataset_targets(ds), arch, opts);
}

}  // namespace cfcal::regress
