#pragma once

// Dataset augmentation by re-assigning the independent scalar inputs, and a
// synthetic generator for profiles and analytically consistent 3D effects.

#include <cstdint>
#include <vector>

#include "cloud3d/column.hpp"
#include "cloud3d/effects.hpp"

namespace cloud3d {

/// Returns the originals followed by `copies` copies of the whole set. In each
/// copy every profile gets an albedo and a mu0 drawn independently, with
/// replacement, from the originals' values. All other fields are copied.
std::vector<AtmosphericProfile> augment_scalars(const std::vector<AtmosphericProfile>& profiles,
                                                std::size_t copies, std::uint64_t seed);

struct ToyTruthParams {
  double amplitude_lw = 2.0;  // W m-2
  double amplitude_sw = 3.0;  // W m-2
  double decay_layers = 20.0;  // e-folding depth in layers; effects spread well beyond the cloud
};

/// Effects on the window grid together with the fluxes they came from.
struct ToyTruth {
  EffectTargets lw;
  EffectTargets sw;
  FluxSet lw_fluxes;  // window grid
  FluxSet sw_fluxes;  // window grid, with direct_down
};

/// Deterministic cloud-driven 3D effects. Each window layer gets the weight
/// w = f_c (1 - exp(-tau_c)); downwelling effects accumulate weights from
/// above with an exponential decay, upwelling effects from below. The
/// construction keeps the downwelling effect zero at the window top, the
/// longwave upwelling effect zero at the surface, and the shortwave surface
/// upwelling equal to albedo times surface downwelling.
ToyTruth toy_truth(const AtmosphericProfile& profile, const PhysConsts& consts,
                   const ToyTruthParams& params = {});

struct SynthOptions {
  std::size_t profiles = 100;
  std::uint64_t seed = 0;
  double surface_pressure_min = 98000.0;
  double surface_pressure_max = 103000.0;
};

/// Random but physically plausible columns on 137-level grids.
std::vector<AtmosphericProfile> synthesize_profiles(const SynthOptions& opts);

}  // namespace cloud3d
