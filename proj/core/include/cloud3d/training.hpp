#pragma once

#include <cstdint>
#include <vector>

#include "cloud3d/network.hpp"

namespace cloud3d {

struct TrainConfig {
  int max_epochs = 1000;
  int patience = 50;
  double l1 = 1e-5;
  double l2 = 1e-5;
  AdamParams adam;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean regularized batch loss
  double val_loss = 0.0;    // MSE on the validation set

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  Network network;  // parameters of the best validation epoch
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

/// Mini-batch Adam with per-epoch shuffling and early stopping on validation
/// MSE. Training halts once max(patience, 1) consecutive epochs fail to
/// improve on the best validation loss, or after max_epochs. The shuffle order
/// is a function of `cfg.seed` only.
///
/// Throws TrainingDiverged if a batch loss becomes non-finite.
TrainResult train(Network init, const Matrix& x_train, const Matrix& y_train,
                  const Matrix& x_val, const Matrix& y_val, const TrainConfig& cfg);

}  // namespace cloud3d
