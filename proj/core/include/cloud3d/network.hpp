#pragma once

// Fully connected network with ELU hidden activations and a linear output
// layer, plus exact reverse-mode gradients of the regularized MSE objective.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cloud3d/features.hpp"
#include "cloud3d/matrix.hpp"

namespace cloud3d {

inline double elu(double x) noexcept { return x > 0.0 ? x : std::expm1(x); }
inline double elu_derivative(double x) noexcept { return x > 0.0 ? 1.0 : std::exp(x); }

struct Layer {
  Matrix weights;  // out x in
  Vector bias;     // out

  Eigen::Index in() const noexcept { return weights.cols(); }
  Eigen::Index out() const noexcept { return weights.rows(); }

  friend bool operator==(const Layer& a, const Layer& b) {
    return a.weights == b.weights && a.bias == b.bias;
  }
};

/// Portable uniform draw in [0, 1) from a 64-bit engine, so results do not
/// depend on the standard library's distribution implementation.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

class Network {
public:
  Network() = default;
  explicit Network(std::vector<Layer> layers);

  /// He-uniform weights (limit sqrt(6 / fan_in)), zero biases.
  static Network he_uniform(Eigen::Index inputs, const std::vector<Eigen::Index>& hidden,
                            Eigen::Index outputs, std::uint64_t seed);

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

  Eigen::Index input_len() const noexcept { return layers_.empty() ? 0 : layers_.front().in(); }
  Eigen::Index output_len() const noexcept { return layers_.empty() ? 0 : layers_.back().out(); }
  std::vector<Eigen::Index> hidden_widths() const;
  std::size_t parameter_count() const noexcept;

  /// Throws InvalidInput if shapes do not chain or any parameter is non-finite.
  void validate() const;

  friend bool operator==(const Network&, const Network&) = default;

private:
  std::vector<Layer> layers_;
};

/// Batched inference: one sample per row. Throws on width mismatch or
/// non-finite input.
Matrix forward(const Network& net, const Matrix& batch);

/// Single-precision copy of the parameters for the fast inference path.
struct NetworkF32 {
  std::vector<MatrixF> weights;
  std::vector<Eigen::VectorXf> biases;

  static NetworkF32 from(const Network& net);
};
MatrixF forward(const NetworkF32& net, const MatrixF& batch);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;
};

struct LossAndGradients {
  double loss = 0.0;      // MSE + l1 sum|w| + l2 sum w^2
  double data_loss = 0.0; // MSE only
  Gradients grads;
};

/// Objective and exact gradients over one batch. The MSE averages over every
/// output element; regularization applies to weights only.
LossAndGradients loss_and_gradients(const Network& net, const Matrix& x, const Matrix& y,
                                    double l1, double l2);

/// Mean squared error over all output elements.
double mse(const Network& net, const Matrix& x, const Matrix& y);

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

class Adam {
public:
  Adam(const Network& net, AdamParams params);

  /// One bias-corrected update.
  void step(Network& net, const Gradients& grads);
  long steps() const noexcept { return t_; }

private:
  AdamParams p_;
  long t_ = 0;
  std::vector<Matrix> mw_, vw_;
  std::vector<Vector> mb_, vb_;
};

}  // namespace cloud3d
