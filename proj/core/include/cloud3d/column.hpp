#pragma once

// Vertical grid bookkeeping, atmospheric column state and the two column
// physics relations (cloud optical depth, heating rate from net flux).
//
// Arrays always run from the top of the atmosphere (index 0) to the surface.
// Fluxes live on half levels (HL, layer interfaces), everything else on full
// levels (FL, layer centres).

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace cloud3d {

using Profile1D = std::vector<double>;

inline constexpr double kSecondsPerDay = 86400.0;

struct PhysConsts {
  double g = 9.81;         // m s-2
  double c_p = 1004.0;     // J kg-1 K-1
  double rho_l = 1000.0;   // kg m-3
  double rho_i = 917.0;    // kg m-3
  double p_trunc = 5000.0; // Pa, top of the emulated window

  /// Throws InvalidInput unless every constant is finite and > 0.
  void validate() const;
};

class VerticalGrid {
public:
  VerticalGrid() = default;
  /// Half-level pressures in Pa, TOA first. Must be strictly increasing,
  /// non-negative, finite and contain at least two levels.
  explicit VerticalGrid(Profile1D p_hl);

  std::size_t n_hl() const noexcept { return p_hl_.size(); }
  std::size_t n_fl() const noexcept { return p_hl_.empty() ? 0 : p_hl_.size() - 1; }

  const Profile1D& p_hl() const noexcept { return p_hl_; }
  double p_fl(std::size_t i) const { return 0.5 * (p_hl_[i] + p_hl_[i + 1]); }
  /// Layer thickness in pressure, base minus top (> 0).
  double dp(std::size_t i) const { return p_hl_[i + 1] - p_hl_[i]; }

  friend bool operator==(const VerticalGrid&, const VerticalGrid&) = default;

private:
  Profile1D p_hl_;
};

/// The contiguous block of levels between `p_trunc` and the surface.
/// Full level i is retained iff p_fl(i) >= p_trunc; the half levels bounding
/// the retained full levels are retained too.
struct Window {
  std::size_t first_fl = 0;  // == first retained half level
  std::size_t n_fl = 0;

  std::size_t n_hl() const noexcept { return n_fl + 1; }
  friend bool operator==(const Window&, const Window&) = default;
};

Window window_of(const VerticalGrid& grid, const PhysConsts& consts = {});

/// The sub-grid made of the retained half levels.
VerticalGrid window_grid(const VerticalGrid& grid, const PhysConsts& consts = {});

/// Synthetic 137-level grid: 47 layers above 50 hPa spaced quadratically from
/// 0 Pa, 90 layers linearly spaced between 50 hPa and `surface_pressure`.
VerticalGrid make_l137_grid(double surface_pressure = 101325.0);

struct AtmosphericProfile {
  VerticalGrid grid;
  Profile1D temperature;     // K, FL
  Profile1D cloud_fraction;  // [0, 1], FL
  Profile1D q_liquid;        // kg kg-1, FL
  Profile1D q_ice;           // kg kg-1, FL
  Profile1D r_liquid;        // m, FL
  Profile1D r_ice;           // m, FL
  /// Specific humidity (kg kg-1, FL). Only read by the optional q input block.
  std::optional<Profile1D> humidity;
  double skin_temperature = 288.0;  // K
  double albedo = 0.0;              // [0, 1]
  double mu0 = 0.0;                 // [-1, 1]

  /// Checks array lengths and value ranges; throws InvalidInput naming the
  /// offending field and level.
  void validate() const;

  friend bool operator==(const AtmosphericProfile&, const AtmosphericProfile&) = default;
};

/// Up/down fluxes on half levels plus the heating rate they imply on full
/// levels.
struct FluxSet {
  Profile1D up;
  Profile1D down;
  std::optional<Profile1D> direct_down;
  Profile1D heat;  // K s-1

  /// Builds a FluxSet and derives `heat` from down - up.
  static FluxSet from_fluxes(Profile1D up, Profile1D down,
                             std::optional<Profile1D> direct_down,
                             const VerticalGrid& grid, const PhysConsts& consts);

  Profile1D net() const;
  Profile1D scalar() const;

  friend bool operator==(const FluxSet&, const FluxSet&) = default;
};

/// 1.5 * dp/g * (q_l/(rho_l r_l) + q_i/(rho_i r_i)) per full level.
Profile1D compute_cloud_optical_depth(const AtmosphericProfile& profile,
                                      const PhysConsts& consts);

/// H_i = -(g/c_p) (F_base - F_top) / (p_base - p_top), positive where the
/// layer absorbs. `net_flux` is down minus up on half levels.
Profile1D compute_heating_rates(std::span<const double> net_flux,
                                const VerticalGrid& grid, const PhysConsts& consts);

/// Inverse of compute_heating_rates: per-layer net-flux increment
/// F_base - F_top = -(c_p/g) H dp.
Profile1D net_flux_increments(std::span<const double> heat,
                              const VerticalGrid& grid, const PhysConsts& consts);

/// H_i = -(g/c_p) increment_i / dp_i.
Profile1D heating_from_increments(std::span<const double> increments,
                                  const VerticalGrid& grid, const PhysConsts& consts);

/// Keeps the window part of a full-level or half-level array, detected by
/// length.
Profile1D truncate_to_window(std::span<const double> values,
                             const VerticalGrid& grid, const PhysConsts& consts = {});

/// Rebuilds full-grid fluxes from window fluxes: downwelling quantities are
/// zero above the window, upwelling is held at its topmost window value and
/// heating is zero above the window.
FluxSet extend_to_full(std::span<const double> up_window,
                       std::span<const double> down_window,
                       std::optional<std::span<const double>> direct_window,
                       std::span<const double> heat_window,
                       const VerticalGrid& grid, const PhysConsts& consts = {});

/// Baseline plus effect, with heating recomputed from the corrected net flux.
FluxSet apply_correction(const FluxSet& baseline, const FluxSet& effect,
                         const VerticalGrid& grid, const PhysConsts& consts);

}  // namespace cloud3d
