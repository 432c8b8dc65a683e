#include "cloud3d/network.hpp"

#include <cmath>
#include <string>

#include "cloud3d/error.hpp"

namespace cloud3d {
namespace {

template <typename M>
void elu_inplace(M& m) {
  m = m.unaryExpr([](auto v) { return v > 0 ? v : std::expm1(v); });
}

void require_batch(const Network& net, const Matrix& x) {
  if (net.layers().empty()) {
    throw InvalidInput("network has no layers");
  }
  if (x.cols() != net.input_len()) {
    throw InvalidInput("batch width " + std::to_string(x.cols()) + " != network input " +
                       std::to_string(net.input_len()));
  }
}

}  // namespace

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) { validate(); }

Network Network::he_uniform(Eigen::Index inputs, const std::vector<Eigen::Index>& hidden,
                            Eigen::Index outputs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  Eigen::Index fan_in = inputs;
  const auto make = [&](Eigen::Index out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    Layer l{Matrix(out, fan_in), Vector::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) {
        l.weights(r, c) = limit * (2.0 * uniform01(rng) - 1.0);
      }
    }
    layers.push_back(std::move(l));
    fan_in = out;
  };
  for (Eigen::Index h : hidden) make(h);
  make(outputs);
  return Network(std::move(layers));
}

std::vector<Eigen::Index> Network::hidden_widths() const {
  std::vector<Eigen::Index> w;
  for (std::size_t k = 0; k + 1 < layers_.size(); ++k) w.push_back(layers_[k].out());
  return w;
}

std::size_t Network::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

void Network::validate() const {
  if (layers_.empty()) throw InvalidInput("network has no layers");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    if (l.weights.rows() == 0 || l.weights.cols() == 0) {
      throw InvalidInput("layer " + std::to_string(k) + ": empty weight matrix");
    }
    if (l.bias.size() != l.weights.rows()) {
      throw InvalidInput("layer " + std::to_string(k) + ": bias length " +
                         std::to_string(l.bias.size()) + " != rows " +
                         std::to_string(l.weights.rows()));
    }
    if (k > 0 && l.in() != layers_[k - 1].out()) {
      throw InvalidInput("layer " + std::to_string(k) + ": input width " +
                         std::to_string(l.in()) + " != previous output " +
                         std::to_string(layers_[k - 1].out()));
    }
    if (!l.weights.allFinite() || !l.bias.allFinite()) {
      throw InvalidInput("layer " + std::to_string(k) + ": non-finite parameter");
    }
  }
}

Matrix forward(const Network& net, const Matrix& batch) {
  require_batch(net, batch);
  if (!batch.allFinite()) {
    for (Eigen::Index r = 0; r < batch.rows(); ++r) {
      if (!batch.row(r).allFinite()) {
        throw InvalidInput("forward: non-finite input in row " + std::to_string(r));
      }
    }
  }
  const auto& layers = net.layers();
  Matrix a = batch;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Matrix z = a * layers[k].weights.transpose();
    z.rowwise() += layers[k].bias.transpose();
    if (k + 1 < layers.size()) elu_inplace(z);
    a = std::move(z);
  }
  return a;
}

NetworkF32 NetworkF32::from(const Network& net) {
  NetworkF32 f;
  for (const auto& l : net.layers()) {
    f.weights.push_back(l.weights.cast<float>());
    f.biases.push_back(l.bias.cast<float>());
  }
  return f;
}

MatrixF forward(const NetworkF32& net, const MatrixF& batch) {
  if (net.weights.empty() || batch.cols() != net.weights.front().cols()) {
    throw InvalidInput("forward(f32): batch width mismatch");
  }
  MatrixF a = batch;
  for (std::size_t k = 0; k < net.weights.size(); ++k) {
    MatrixF z = a * net.weights[k].transpose();
    z.rowwise() += net.biases[k].transpose();
    if (k + 1 < net.weights.size()) elu_inplace(z);
    a = std::move(z);
  }
  return a;
}

LossAndGradients loss_and_gradients(const Network& net, const Matrix& x, const Matrix& y,
                                    double l1, double l2) {
  require_batch(net, x);
  if (x.rows() == 0) throw InvalidInput("loss: empty batch");
  if (y.rows() != x.rows() || y.cols() != net.output_len()) {
    throw InvalidInput("loss: target shape " + std::to_string(y.rows()) + "x" +
                       std::to_string(y.cols()) + " does not match batch/network");
  }
  const auto& layers = net.layers();
  const std::size_t n_layers = layers.size();

  // pre[k] is the pre-activation of layer k, act[k] its input.
  std::vector<Matrix> act(n_layers);
  std::vector<Matrix> pre(n_layers);
  act[0] = x;
  for (std::size_t k = 0; k < n_layers; ++k) {
    pre[k] = act[k] * layers[k].weights.transpose();
    pre[k].rowwise() += layers[k].bias.transpose();
    if (k + 1 < n_layers) {
      act[k + 1] = pre[k];
      elu_inplace(act[k + 1]);
    }
  }

  const Matrix residual = pre.back() - y;
  const double count = static_cast<double>(residual.size());

  LossAndGradients out;
  out.data_loss = residual.squaredNorm() / count;
  double reg = 0.0;
  for (const auto& l : layers) {
    reg += l1 * l.weights.cwiseAbs().sum() + l2 * l.weights.squaredNorm();
  }
  out.loss = out.data_loss + reg;

  out.grads.weights.resize(n_layers);
  out.grads.bias.resize(n_layers);
  Matrix delta = (2.0 / count) * residual;
  for (std::size_t k = n_layers; k-- > 0;) {
    const Matrix& w = layers[k].weights;
    out.grads.weights[k] = delta.transpose() * act[k];
    out.grads.weights[k] += l1 * w.unaryExpr([](double v) {
      return static_cast<double>((v > 0.0) - (v < 0.0));
    });
    out.grads.weights[k] += 2.0 * l2 * w;
    out.grads.bias[k] = delta.colwise().sum().transpose();
    if (k > 0) {
      Matrix back = delta * w;
      back.array() *= pre[k - 1].unaryExpr([](double v) { return elu_derivative(v); }).array();
      delta = std::move(back);
    }
  }
  return out;
}

double mse(const Network& net, const Matrix& x, const Matrix& y) {
  const Matrix pred = forward(net, x);
  if (pred.rows() != y.rows() || pred.cols() != y.cols()) {
    throw InvalidInput("mse: target shape does not match network output");
  }
  return (pred - y).squaredNorm() / static_cast<double>(y.size());
}

Adam::Adam(const Network& net, AdamParams params) : p_(params) {
  if (!(p_.learning_rate > 0.0) || !(p_.epsilon > 0.0) || !(p_.beta1 >= 0.0 && p_.beta1 < 1.0) ||
      !(p_.beta2 >= 0.0 && p_.beta2 < 1.0)) {
    throw InvalidInput("adam: invalid hyperparameters");
  }
  for (const auto& l : net.layers()) {
    mw_.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    vw_.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    mb_.push_back(Vector::Zero(l.bias.size()));
    vb_.push_back(Vector::Zero(l.bias.size()));
  }
}

void Adam::step(Network& net, const Gradients& grads) {
  auto& layers = net.layers();
  if (grads.weights.size() != layers.size() || grads.bias.size() != layers.size()) {
    throw InvalidInput("adam: gradient layer count mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(p_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(p_.beta2, static_cast<double>(t_));
  const double lr = p_.learning_rate;
  const double eps = p_.epsilon;
  const double b1 = p_.beta1;
  const double b2 = p_.beta2;

  const auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t k = 0; k < layers.size(); ++k) {
    update(layers[k].weights, grads.weights[k], mw_[k], vw_[k]);
    update(layers[k].bias, grads.bias[k], mb_[k], vb_[k]);
  }
}

}  // namespace cloud3d
