#pragma once

// Turns predicted 3D effects on scalar flux and heating rate into
// energy-consistent effects on upwelling and downwelling flux.
//
// The heating-rate profile gives one estimate of the total atmospheric
// divergence (sum of layer net-flux increments), the scalar flux at the two
// boundaries gives another. The heating rates are rescaled towards the
// scalar-flux estimate, the factor is capped to [0.5, 2], and the scalar flux
// absorbs whatever the cap leaves over. Net flux is then integrated down from
// the top and split into up and down components.

#include <span>

#include "cloud3d/column.hpp"
#include "cloud3d/effects.hpp"

namespace cloud3d {

inline constexpr double kMinScale = 0.5;
inline constexpr double kMaxScale = 2.0;
/// Below this |D_H| (W m-2) the multiplicative rescale is replaced by an
/// additive per-layer correction.
inline constexpr double kDegenerateDivergence = 1e-9;

struct HeatingDivergence {
  double total = 0.0;        // D_H, W m-2
  Profile1D delta_net;       // per-layer net-flux increment, base minus top
};

HeatingDivergence divergence_from_heating(std::span<const double> heat,
                                          const VerticalGrid& window_grid,
                                          const PhysConsts& consts);

/// D_s = scalar(BOA) + scalar(TOA).
double divergence_from_scalar_lw(std::span<const double> scalar);

/// D_s = scalar(BOA) (1 - alpha)/(1 + alpha) + scalar(TOA).
double divergence_from_scalar_sw(std::span<const double> scalar, double alpha);

enum class RescaleBranch {
  Unchanged,  // c == D_s / D_H inside the cap range
  Capped,     // c clamped; scalar flux rescaled
  Additive,   // |D_H| or |D_s| too small for a ratio; uniform additive fix
};

struct Rescaled {
  Profile1D heat;
  Profile1D delta_net;
  Profile1D scalar;
  double factor = 1.0;  // c
  double raw_factor = 1.0;
  RescaleBranch branch = RescaleBranch::Unchanged;
};

/// Reconciles the two divergence estimates. `d_h` must equal the sum of
/// `delta_net`; `window_grid` and `consts` are used to keep heat and
/// delta_net consistent in the additive branch.
Rescaled rescale(std::span<const double> heat, std::span<const double> delta_net,
                 std::span<const double> scalar, double d_h, double d_s,
                 const VerticalGrid& window_grid, const PhysConsts& consts);

struct SplitFluxes {
  Profile1D up;
  Profile1D down;
  Profile1D net;
};

/// Integrates net flux down from net(TOA) = -scalar(TOA) and splits it into
/// up = (scalar - net)/2 and down = (scalar + net)/2.
SplitFluxes split_fluxes(std::span<const double> scalar, std::span<const double> delta_net);

struct PostprocessResult {
  FluxSet fluxes;  // on the window grid
  Rescaled rescaled;
  double d_heat = 0.0;
  double d_scalar = 0.0;
};

/// Full pipeline on window-grid targets. Shortwave direct_down is copied
/// through unchanged.
PostprocessResult postprocess_detailed(const EffectTargets& targets,
                                       const VerticalGrid& window_grid,
                                       const PhysConsts& consts);

FluxSet postprocess(const EffectTargets& targets, const VerticalGrid& window_grid,
                    const PhysConsts& consts);

}  // namespace cloud3d
