#include "cloud3d/training.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "cloud3d/error.hpp"

namespace cloud3d {
namespace {

Matrix gather_rows(const Matrix& m, const std::vector<Eigen::Index>& idx, std::size_t begin,
                   std::size_t end) {
  Matrix out(static_cast<Eigen::Index>(end - begin), m.cols());
  for (std::size_t k = begin; k < end; ++k) {
    out.row(static_cast<Eigen::Index>(k - begin)) = m.row(idx[k]);
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (max_epochs < 1) throw InvalidInput("train: max_epochs must be >= 1");
  // patience >= max_epochs is allowed; it just never triggers
  if (patience < 0) throw InvalidInput("train: patience must be >= 0");
  if (!(l1 >= 0.0) || !(l2 >= 0.0)) throw InvalidInput("train: negative regularization");
  if (batch_size == 0) throw InvalidInput("train: batch_size must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw InvalidInput("train: learning rate must be > 0");
}

TrainResult train(Network init, const Matrix& x_train, const Matrix& y_train,
                  const Matrix& x_val, const Matrix& y_val, const TrainConfig& cfg) {
  cfg.validate();
  init.validate();
  if (x_train.rows() == 0 || x_val.rows() == 0) {
    throw InvalidInput("train: empty training or validation set");
  }
  if (x_train.rows() != y_train.rows() || x_val.rows() != y_val.rows()) {
    throw InvalidInput("train: input/target row counts differ");
  }
  if (x_train.cols() != init.input_len() || x_val.cols() != init.input_len() ||
      y_train.cols() != init.output_len() || y_val.cols() != init.output_len()) {
    throw InvalidInput("train: data widths do not match the network");
  }

  TrainResult result;
  Network net = std::move(init);
  Adam adam(net, cfg.adam);
  std::mt19937_64 rng(cfg.seed);

  const auto n = static_cast<std::size_t>(x_train.rows());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  result.network = net;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  const int stop_after = std::max(cfg.patience, 1);
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // Fisher-Yates with the portable uniform draw.
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      const Matrix xb = gather_rows(x_train, order, begin, end);
      const Matrix yb = gather_rows(y_train, order, begin, end);
      const LossAndGradients lg = loss_and_gradients(net, xb, yb, cfg.l1, cfg.l2);
      if (!std::isfinite(lg.loss)) {
        throw TrainingDiverged("train: non-finite loss at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batches));
      }
      adam.step(net, lg.grads);
      loss_sum += lg.loss;
      ++batches;
    }

    const double val = mse(net, x_val, y_val);
    if (!std::isfinite(val)) {
      throw TrainingDiverged("train: non-finite validation loss at epoch " +
                             std::to_string(epoch));
    }
    result.history.push_back({epoch, loss_sum / static_cast<double>(batches), val});

    if (val < result.best_val_loss) {
      result.best_val_loss = val;
      result.best_epoch = epoch;
      result.network = net;
      since_best = 0;
    } else if (++since_best >= stop_after) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

}  // namespace cloud3d
