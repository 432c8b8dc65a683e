#pragma once

#include <optional>
#include <string_view>

#include "cloud3d/column.hpp"

namespace cloud3d {

enum class Component { Longwave, Shortwave };

std::string_view to_string(Component c) noexcept;
/// Accepts "lw"/"sw" and "longwave"/"shortwave"; throws InvalidInput otherwise.
Component component_from_string(std::string_view s);

/// 3D effects in the emulator's output space, on the truncated window.
struct EffectTargets {
  Component component = Component::Longwave;
  Profile1D scalar;                      // W m-2, window HL; down + up
  Profile1D heat;                        // K s-1, window FL
  std::optional<Profile1D> direct_down;  // W m-2, window HL, shortwave only
  double alpha = 0.0;                    // surface albedo, shortwave only

  /// Throws InvalidInput on inconsistent lengths or non-finite values.
  void validate(std::size_t n_fl_window) const;

  friend bool operator==(const EffectTargets&, const EffectTargets&) = default;
};

}  // namespace cloud3d
