#include "cloud3d/postproc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "cloud3d/error.hpp"

namespace cloud3d {

std::string_view to_string(Component c) noexcept {
  return c == Component::Longwave ? "lw" : "sw";
}

Component component_from_string(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "lw" || lower == "longwave") return Component::Longwave;
  if (lower == "sw" || lower == "shortwave") return Component::Shortwave;
  throw InvalidInput("unknown component '" + std::string(s) + "' (expected lw or sw)");
}

void EffectTargets::validate(std::size_t n_fl_window) const {
  const auto check = [](const Profile1D& v, std::size_t n, const char* name) {
    if (v.size() != n) {
      throw InvalidInput(std::string("effects ") + name + ": expected length " +
                         std::to_string(n) + ", got " + std::to_string(v.size()));
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) {
        throw InvalidInput(std::string("effects ") + name + ": non-finite at level " +
                           std::to_string(i));
      }
    }
  };
  check(scalar, n_fl_window + 1, "scalar");
  check(heat, n_fl_window, "heat");
  if (direct_down) check(*direct_down, n_fl_window + 1, "direct_down");
}

HeatingDivergence divergence_from_heating(std::span<const double> heat,
                                          const VerticalGrid& window_grid,
                                          const PhysConsts& consts) {
  if (heat.size() != window_grid.n_fl()) {
    throw InvalidInput("divergence: heating length " + std::to_string(heat.size()) +
                       " != window full levels " + std::to_string(window_grid.n_fl()));
  }
  HeatingDivergence d;
  d.delta_net = net_flux_increments(heat, window_grid, consts);
  for (double v : d.delta_net) d.total += v;
  return d;
}

double divergence_from_scalar_lw(std::span<const double> scalar) {
  if (scalar.empty()) throw InvalidInput("divergence: empty scalar flux profile");
  return scalar.back() + scalar.front();
}

double divergence_from_scalar_sw(std::span<const double> scalar, double alpha) {
  if (scalar.empty()) throw InvalidInput("divergence: empty scalar flux profile");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidInput("divergence: albedo " + std::to_string(alpha) + " outside [0,1]");
  }
  return scalar.back() * ((1.0 - alpha) / (1.0 + alpha)) + scalar.front();
}

Rescaled rescale(std::span<const double> heat, std::span<const double> delta_net,
                 std::span<const double> scalar, double d_h, double d_s,
                 const VerticalGrid& window_grid, const PhysConsts& consts) {
  if (heat.size() != delta_net.size() || scalar.size() != heat.size() + 1) {
    throw InvalidInput("rescale: inconsistent profile lengths");
  }
  Rescaled r;
  r.scalar.assign(scalar.begin(), scalar.end());

  const bool ratio_defined = std::abs(d_h) >= kDegenerateDivergence;
  r.raw_factor = ratio_defined ? d_s / d_h : 1.0;
  const double capped = std::clamp(r.raw_factor, kMinScale, kMaxScale);
  const bool needs_scalar_scale = ratio_defined && capped != r.raw_factor;

  if (!ratio_defined || (needs_scalar_scale && std::abs(d_s) < kDegenerateDivergence)) {
    // No usable ratio: move delta_net uniformly so its sum equals D_s.
    r.branch = RescaleBranch::Additive;
    r.factor = 1.0;
    const double inc = (d_s - d_h) / static_cast<double>(delta_net.size());
    r.delta_net.resize(delta_net.size());
    for (std::size_t i = 0; i < delta_net.size(); ++i) r.delta_net[i] = delta_net[i] + inc;
    r.heat = heating_from_increments(r.delta_net, window_grid, consts);
    return r;
  }

  r.factor = capped;
  r.heat.resize(heat.size());
  r.delta_net.resize(delta_net.size());
  for (std::size_t i = 0; i < heat.size(); ++i) {
    r.heat[i] = capped * heat[i];
    r.delta_net[i] = capped * delta_net[i];
  }
  if (needs_scalar_scale) {
    r.branch = RescaleBranch::Capped;
    const double k = capped * d_h / d_s;
    for (double& v : r.scalar) v *= k;
  } else {
    r.branch = RescaleBranch::Unchanged;
  }
  return r;
}

SplitFluxes split_fluxes(std::span<const double> scalar, std::span<const double> delta_net) {
  if (scalar.empty() || scalar.size() != delta_net.size() + 1) {
    throw InvalidInput("split: scalar length " + std::to_string(scalar.size()) +
                       " must be delta_net length " + std::to_string(delta_net.size()) + " + 1");
  }
  const std::size_t n = scalar.size();
  SplitFluxes s;
  s.net.resize(n);
  s.up.resize(n);
  s.down.resize(n);
  s.net[0] = -scalar[0];
  for (std::size_t j = 0; j + 1 < n; ++j) s.net[j + 1] = s.net[j] + delta_net[j];
  for (std::size_t j = 0; j < n; ++j) {
    s.up[j] = 0.5 * (scalar[j] - s.net[j]);
    s.down[j] = 0.5 * (scalar[j] + s.net[j]);
  }
  return s;
}

PostprocessResult postprocess_detailed(const EffectTargets& targets,
                                       const VerticalGrid& window_grid,
                                       const PhysConsts& consts) {
  targets.validate(window_grid.n_fl());
  PostprocessResult out;
  const HeatingDivergence hd = divergence_from_heating(targets.heat, window_grid, consts);
  out.d_heat = hd.total;
  out.d_scalar = targets.component == Component::Longwave
                     ? divergence_from_scalar_lw(targets.scalar)
                     : divergence_from_scalar_sw(targets.scalar, targets.alpha);
  out.rescaled = rescale(targets.heat, hd.delta_net, targets.scalar, out.d_heat, out.d_scalar,
                         window_grid, consts);
  SplitFluxes split = split_fluxes(out.rescaled.scalar, out.rescaled.delta_net);

  out.fluxes.heat = compute_heating_rates(split.net, window_grid, consts);
  out.fluxes.up = std::move(split.up);
  out.fluxes.down = std::move(split.down);
  if (targets.component == Component::Shortwave && targets.direct_down) {
    out.fluxes.direct_down = targets.direct_down;
  }
  return out;
}

FluxSet postprocess(const EffectTargets& targets, const VerticalGrid& window_grid,
                    const PhysConsts& consts) {
  return postprocess_detailed(targets, window_grid, consts).fluxes;
}

}  // namespace cloud3d
