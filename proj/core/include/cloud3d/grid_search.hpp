#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cloud3d/pipeline.hpp"

namespace cloud3d {

struct GridSearchSpec {
  std::vector<int> input_quantities{6, 7, 8};
  std::vector<int> hidden_layers{1, 2, 3, 4, 5};
  std::vector<double> width_multipliers{0.5, 1.0, 2.0};
  std::vector<double> regularization{1e-6, 1e-5, 1e-4};  // used for both L1 and L2
  int repeats = 10;
  /// Configurations whose mean MAE is within this relative margin of the
  /// best mean MAE count as tied; the simplest of them is selected.
  double selection_tolerance = 0.01;

  void validate() const;
};

struct GridConfig {
  int input_quantities = 6;
  int hidden_layers = 1;
  double width_multiplier = 1.0;
  double regularization = 1e-5;
  Eigen::Index width = 0;  // round(multiplier * input_len)
};

struct GridRow {
  std::size_t index = 0;
  GridConfig config;
  std::vector<double> mae;              // one per successful repeat, physical units
  std::vector<std::string> failures;    // one per failed repeat
  std::optional<double> mean_mae;
};

struct GridReport {
  Component component = Component::Longwave;
  std::vector<GridRow> rows;
  std::optional<std::size_t> selected;
  std::size_t runs = 0;
};

/// Cartesian product of the axes, in row-major order of
/// (inputs, layers, multiplier, regularization).
std::vector<GridConfig> enumerate_grid(const GridSearchSpec& spec);

/// Seed of one training run; depends only on (base, config, repeat).
std::uint64_t run_seed(std::uint64_t base, std::size_t config_index, int repeat);

/// Picks the simplest configuration among those tied for the lowest mean MAE:
/// fewer input quantities, then fewer layers, then narrower layers, then MAE.
std::optional<std::size_t> select_configuration(const std::vector<GridRow>& rows,
                                                double tolerance);

/// Trains every configuration `spec.repeats` times and reports validation MAE
/// (denormalized) per run. Training failures are recorded, not rethrown.
/// `threads` > 1 trains independent runs concurrently.
GridReport grid_search(const GridSearchSpec& spec, const std::vector<AtmosphericProfile>& profiles,
                       const std::vector<EffectTargets>& targets, const DataSplit& split,
                       Component component, const TrainConfig& base, unsigned threads = 1,
                       const PhysConsts& consts = {});

/// Mean absolute error of the model on the given rows, in physical units.
double validation_mae(const MlpModel& model, const std::vector<AtmosphericProfile>& profiles,
                      const std::vector<EffectTargets>& targets,
                      const std::vector<std::size_t>& rows);

}  // namespace cloud3d
