#pragma once

// Input/output vector layout of the two emulators and the z-score
// normalization applied on both sides of the network.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cloud3d/column.hpp"
#include "cloud3d/effects.hpp"
#include "cloud3d/matrix.hpp"

namespace cloud3d {

struct FeatureBlock {
  std::string name;
  std::size_t length = 0;

  friend bool operator==(const FeatureBlock&, const FeatureBlock&) = default;
};

class FeatureSchema {
public:
  FeatureSchema() = default;
  /// Longwave inputs: [f_c | tau_c | T | (q) | (dz) | T_s].
  /// Shortwave inputs: [f_c | tau_c | (q) | (dz) | alpha | mu0].
  /// Optional blocks are appended only when the matching flag is set.
  FeatureSchema(Component component, std::size_t n_fl_window, bool with_humidity = false,
                bool with_thickness = false);

  Component component() const noexcept { return component_; }
  std::size_t n_fl_window() const noexcept { return n_fl_; }
  std::size_t n_hl_window() const noexcept { return n_fl_ + 1; }
  bool with_humidity() const noexcept { return with_q_; }
  bool with_thickness() const noexcept { return with_dz_; }
  /// Number of distinct input quantities (6, 7 or 8 across both emulators).
  int input_quantities() const noexcept { return 6 + (with_q_ ? 1 : 0) + (with_dz_ ? 1 : 0); }

  const std::vector<FeatureBlock>& inputs() const noexcept { return inputs_; }
  const std::vector<FeatureBlock>& outputs() const noexcept { return outputs_; }
  std::size_t input_len() const noexcept;
  std::size_t output_len() const noexcept;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

private:
  Component component_ = Component::Longwave;
  std::size_t n_fl_ = 0;
  bool with_q_ = false;
  bool with_dz_ = false;
  std::vector<FeatureBlock> inputs_;
  std::vector<FeatureBlock> outputs_;
};

/// Assembles the network input for one profile. `tau_c` is the full-grid
/// optical depth; both it and the profile are truncated to the window here.
std::vector<double> build_input_vector(const AtmosphericProfile& profile,
                                       std::span<const double> tau_c,
                                       const FeatureSchema& schema,
                                       const PhysConsts& consts = {});

/// [scalar | (direct_down) | heat]. Targets must already be on the window.
std::vector<double> build_target_vector(const EffectTargets& effects, const FeatureSchema& schema);

/// Inverse of build_target_vector. `alpha` is carried through for shortwave.
EffectTargets split_output_vector(std::span<const double> values, const FeatureSchema& schema,
                                  double alpha = 0.0);

/// Per-feature affine map x -> (x - mean) / scale.
struct Normalization {
  static constexpr double kScaleFloor = 1e-8;

  Vector mean;
  Vector scale;

  std::size_t size() const noexcept { return static_cast<std::size_t>(mean.size()); }

  /// Population mean and standard deviation of each column; standard
  /// deviations below kScaleFloor are replaced by 1. Needs >= 2 rows.
  static Normalization fit(const Matrix& samples);
  /// Identity map of the given width.
  static Normalization identity(std::size_t n);

  void apply_inplace(Matrix& m) const;
  void invert_inplace(Matrix& m) const;
  Matrix apply(const Matrix& m) const;
  Matrix invert(const Matrix& m) const;
};

}  // namespace cloud3d
