#pragma once

// Generators shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cloud3d/column.hpp"
#include "cloud3d/effects.hpp"
#include "cloud3d/network.hpp"

namespace cloud3d::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Strictly increasing half-level pressures with random spacing, starting at
/// `top` Pa.
inline VerticalGrid random_grid(std::mt19937_64& rng, std::size_t n_fl, double top = 5000.0,
                                double bottom = 101325.0) {
  std::vector<double> gaps(n_fl);
  double sum = 0.0;
  for (auto& g : gaps) {
    g = uniform(rng, 0.2, 1.8);
    sum += g;
  }
  std::vector<double> p(n_fl + 1);
  p[0] = top;
  for (std::size_t i = 0; i < n_fl; ++i) p[i + 1] = p[i] + (bottom - top) * gaps[i] / sum;
  p.back() = bottom;
  return VerticalGrid(std::move(p));
}

/// Synthetic effect fluxes that satisfy the boundary assumptions of the
/// postprocessing: zero downwelling effect at the top; zero longwave
/// upwelling effect at the surface; shortwave surface upwelling equal to
/// albedo times surface downwelling.
struct SyntheticTruth {
  VerticalGrid grid;
  FluxSet fluxes;
  EffectTargets targets;
};

inline SyntheticTruth random_truth(std::mt19937_64& rng, Component c, std::size_t n_fl,
                                   double amplitude = 50.0) {
  SyntheticTruth t;
  t.grid = random_grid(rng, n_fl);
  const std::size_t n = n_fl + 1;
  std::vector<double> up(n), down(n);
  for (std::size_t j = 0; j < n; ++j) {
    up[j] = uniform(rng, -amplitude, amplitude);
    down[j] = uniform(rng, -amplitude, amplitude);
  }
  down[0] = 0.0;
  const double alpha = uniform(rng, 0.0, 1.0);
  std::optional<std::vector<double>> direct;
  if (c == Component::Longwave) {
    up[n - 1] = 0.0;
  } else {
    up[n - 1] = alpha * down[n - 1];
    direct.emplace(n);
    for (auto& v : *direct) v = uniform(rng, -amplitude, 0.0);
  }
  t.fluxes = FluxSet::from_fluxes(up, down, direct, t.grid, PhysConsts{});
  t.targets.component = c;
  t.targets.alpha = alpha;
  t.targets.scalar = t.fluxes.scalar();
  t.targets.heat = t.fluxes.heat;
  t.targets.direct_down = direct;
  return t;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// max |a - b| / max |b|: error relative to the profile's magnitude.
inline double profile_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  const double scale = max_abs(b);
  return scale == 0.0 ? max_abs_diff(a, b) : max_abs_diff(a, b) / scale;
}

}  // namespace cloud3d::testing
