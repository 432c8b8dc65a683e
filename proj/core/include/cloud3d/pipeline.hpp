#pragma once

// Glue between column data and the network: dataset assembly, the seeded
// train/validation/test split, model fitting and batched prediction.

#include <cstdint>
#include <string>
#include <vector>

#include "cloud3d/column.hpp"
#include "cloud3d/features.hpp"
#include "cloud3d/network.hpp"
#include "cloud3d/training.hpp"

namespace cloud3d {

/// Hidden widths of the selected configuration: three layers of 217 (LW) or
/// 182 (SW) units.
inline constexpr int kReferenceHiddenLayers = 3;
inline constexpr Eigen::Index kReferenceWidthLw = 217;
inline constexpr Eigen::Index kReferenceWidthSw = 182;

std::vector<Eigen::Index> reference_hidden(Component c);

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Random disjoint 60/20/20 split by profile: floor(0.6 n) training rows, half
/// of the remainder (rounded down) for validation, the rest for testing.
DataSplit split_60_20_20(std::size_t n, std::uint64_t seed);

struct TrainingRecord {
  std::uint64_t seed = 0;
  int epochs = 0;
  int best_epoch = -1;
  double val_loss = 0.0;
  TrainConfig config;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
};

/// A trained emulator for one spectral component.
struct MlpModel {
  FeatureSchema schema;
  Normalization input_norm;
  Normalization output_norm;
  Network network;
  PhysConsts constants;
  TrainingRecord training;

  Component component() const noexcept { return schema.component(); }
  /// Throws InvalidInput if the pieces disagree on widths.
  void validate() const;
};

/// Window targets from full-grid reference effect fluxes: scalar = up + down,
/// heating recomputed from the window net flux.
EffectTargets targets_from_fluxes(const FluxSet& full, const AtmosphericProfile& profile,
                                  Component component, const PhysConsts& consts);

/// One row per profile.
Matrix build_input_matrix(const std::vector<AtmosphericProfile>& profiles,
                          const std::vector<std::size_t>& rows, const FeatureSchema& schema,
                          const PhysConsts& consts);
Matrix build_target_matrix(const std::vector<EffectTargets>& targets,
                           const std::vector<std::size_t>& rows, const FeatureSchema& schema);

/// Schema matching the window of the first profile; throws if any profile
/// has a different window size.
FeatureSchema schema_for(const std::vector<AtmosphericProfile>& profiles, Component component,
                         const PhysConsts& consts, bool with_humidity = false,
                         bool with_thickness = false);

struct FitOptions {
  std::vector<Eigen::Index> hidden;
  TrainConfig train;
  bool with_humidity = false;
  bool with_thickness = false;
};

struct FitResult {
  MlpModel model;
  TrainResult training;
};

/// Fits normalization on the training rows, initialises He-uniform weights
/// from `opts.train.seed` and trains with early stopping on the validation
/// rows.
FitResult fit_model(const std::vector<AtmosphericProfile>& profiles,
                    const std::vector<EffectTargets>& targets, const DataSplit& split,
                    Component component, const FitOptions& opts, const PhysConsts& consts = {});

/// Raw emulator output on the window in physical units. Shortwave effects are
/// zero for profiles with mu0 <= 0. `threads` > 1 splits rows across threads;
/// results do not depend on it.
std::vector<EffectTargets> predict_targets(const MlpModel& model,
                                           const std::vector<AtmosphericProfile>& profiles,
                                           unsigned threads = 1);

struct ProfileEffects {
  FluxSet lw;
  FluxSet sw;
};

/// Emulated 3D effects on the full grid: network, energy-consistent
/// postprocessing on the window, then extension above the window.
std::vector<ProfileEffects> predict_effects(const MlpModel& lw, const MlpModel& sw,
                                            const std::vector<AtmosphericProfile>& profiles,
                                            unsigned threads = 1);

/// Postprocess window targets and extend to the profile's full grid.
FluxSet effects_to_full_grid(const EffectTargets& targets, const AtmosphericProfile& profile,
                             const PhysConsts& consts);

}  // namespace cloud3d
