#include "cloud3d/column.hpp"

#include <cmath>
#include <string>

#include "cloud3d/error.hpp"

namespace cloud3d {
namespace {

void require_length(std::span<const double> v, std::size_t n, const char* name) {
  if (v.size() != n) {
    throw InvalidInput(std::string(name) + ": expected length " + std::to_string(n) +
                       ", got " + std::to_string(v.size()));
  }
}

void require_finite(std::span<const double> v, const char* name) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw InvalidInput(std::string(name) + ": non-finite value at level " + std::to_string(i));
    }
  }
}

}  // namespace

void PhysConsts::validate() const {
  const auto check = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw InvalidInput(std::string("constant ") + name + " must be finite and > 0");
    }
  };
  check(g, "g");
  check(c_p, "c_p");
  check(rho_l, "rho_l");
  check(rho_i, "rho_i");
  check(p_trunc, "p_trunc");
}

VerticalGrid::VerticalGrid(Profile1D p_hl) : p_hl_(std::move(p_hl)) {
  if (p_hl_.size() < 2) {
    throw InvalidInput("grid: need at least two half levels");
  }
  require_finite(p_hl_, "grid p_hl");
  if (p_hl_.front() < 0.0) {
    throw InvalidInput("grid: negative pressure at level 0");
  }
  for (std::size_t j = 0; j + 1 < p_hl_.size(); ++j) {
    if (!(p_hl_[j] < p_hl_[j + 1])) {
      throw InvalidInput("grid: pressure not strictly increasing at half level " +
                         std::to_string(j + 1));
    }
  }
}

Window window_of(const VerticalGrid& grid, const PhysConsts& consts) {
  const std::size_t n = grid.n_fl();
  std::size_t first = n;
  // Pressure increases downward, so the retained levels form a suffix.
  while (first > 0 && grid.p_fl(first - 1) >= consts.p_trunc) {
    --first;
  }
  if (first == n) {
    throw InvalidInput("window: no full level at or below p_trunc = " +
                       std::to_string(consts.p_trunc) + " Pa");
  }
  return {first, n - first};
}

VerticalGrid window_grid(const VerticalGrid& grid, const PhysConsts& consts) {
  const Window w = window_of(grid, consts);
  const auto& p = grid.p_hl();
  return VerticalGrid(Profile1D(p.begin() + static_cast<std::ptrdiff_t>(w.first_fl), p.end()));
}

VerticalGrid make_l137_grid(double surface_pressure) {
  constexpr std::size_t kAbove = 47;
  constexpr std::size_t kBelow = 90;
  constexpr double kTop = 5000.0;
  if (!(surface_pressure > kTop)) {
    throw InvalidInput("make_l137_grid: surface pressure must exceed 5000 Pa");
  }
  Profile1D p(kAbove + kBelow + 1);
  for (std::size_t j = 0; j <= kAbove; ++j) {
    const double s = static_cast<double>(j) / kAbove;
    p[j] = kTop * s * s;
  }
  for (std::size_t j = 1; j <= kBelow; ++j) {
    const double s = static_cast<double>(j) / kBelow;
    p[kAbove + j] = kTop + (surface_pressure - kTop) * s;
  }
  p.back() = surface_pressure;
  return VerticalGrid(std::move(p));
}

void AtmosphericProfile::validate() const {
  const std::size_t n = grid.n_fl();
  if (n == 0) {
    throw InvalidInput("profile: empty grid");
  }
  require_length(temperature, n, "T");
  require_length(cloud_fraction, n, "f_c");
  require_length(q_liquid, n, "q_l");
  require_length(q_ice, n, "q_i");
  require_length(r_liquid, n, "r_l");
  require_length(r_ice, n, "r_i");
  require_finite(temperature, "T");
  require_finite(cloud_fraction, "f_c");
  require_finite(q_liquid, "q_l");
  require_finite(q_ice, "q_i");
  require_finite(r_liquid, "r_l");
  require_finite(r_ice, "r_i");
  if (humidity) {
    require_length(*humidity, n, "q");
    require_finite(*humidity, "q");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (cloud_fraction[i] < 0.0 || cloud_fraction[i] > 1.0) {
      throw InvalidInput("f_c: outside [0,1] at level " + std::to_string(i));
    }
    if (q_liquid[i] < 0.0 || q_ice[i] < 0.0) {
      throw InvalidInput("q_l/q_i: negative at level " + std::to_string(i));
    }
  }
  if (!std::isfinite(skin_temperature)) {
    throw InvalidInput("T_s: non-finite");
  }
  if (!(albedo >= 0.0 && albedo <= 1.0)) {
    throw InvalidInput("alpha: outside [0,1]");
  }
  if (!(mu0 >= -1.0 && mu0 <= 1.0)) {
    throw InvalidInput("mu0: outside [-1,1]");
  }
}

FluxSet FluxSet::from_fluxes(Profile1D up, Profile1D down,
                             std::optional<Profile1D> direct_down,
                             const VerticalGrid& grid, const PhysConsts& consts) {
  require_length(up, grid.n_hl(), "up");
  require_length(down, grid.n_hl(), "down");
  if (direct_down) {
    require_length(*direct_down, grid.n_hl(), "direct_down");
  }
  FluxSet f{std::move(up), std::move(down), std::move(direct_down), {}};
  f.heat = compute_heating_rates(f.net(), grid, consts);
  return f;
}

Profile1D FluxSet::net() const {
  Profile1D n(down.size());
  for (std::size_t j = 0; j < n.size(); ++j) n[j] = down[j] - up[j];
  return n;
}

Profile1D FluxSet::scalar() const {
  Profile1D s(down.size());
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = down[j] + up[j];
  return s;
}

Profile1D compute_cloud_optical_depth(const AtmosphericProfile& profile,
                                      const PhysConsts& consts) {
  const std::size_t n = profile.grid.n_fl();
  require_length(profile.q_liquid, n, "q_l");
  require_length(profile.q_ice, n, "q_i");
  require_length(profile.r_liquid, n, "r_l");
  require_length(profile.r_ice, n, "r_i");

  Profile1D tau(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double ql = profile.q_liquid[i];
    const double qi = profile.q_ice[i];
    const double rl = profile.r_liquid[i];
    const double ri = profile.r_ice[i];
    if (!std::isfinite(ql) || !std::isfinite(qi) || !std::isfinite(rl) || !std::isfinite(ri)) {
      throw InvalidInput("cloud optical depth: non-finite input at level " + std::to_string(i));
    }
    double path = 0.0;
    if (ql > 0.0) {
      if (!(rl > 0.0)) {
        throw InvalidInput("cloud optical depth: r_l <= 0 with q_l > 0 at level " +
                           std::to_string(i));
      }
      path += ql / (consts.rho_l * rl);
    }
    if (qi > 0.0) {
      if (!(ri > 0.0)) {
        throw InvalidInput("cloud optical depth: r_i <= 0 with q_i > 0 at level " +
                           std::to_string(i));
      }
      path += qi / (consts.rho_i * ri);
    }
    tau[i] = 1.5 * (profile.grid.dp(i) / consts.g) * path;
  }
  return tau;
}

Profile1D compute_heating_rates(std::span<const double> net_flux,
                                const VerticalGrid& grid, const PhysConsts& consts) {
  require_length(net_flux, grid.n_hl(), "net flux");
  const double factor = consts.g / consts.c_p;
  Profile1D heat(grid.n_fl());
  for (std::size_t i = 0; i < heat.size(); ++i) {
    heat[i] = -factor * (net_flux[i + 1] - net_flux[i]) / grid.dp(i);
  }
  return heat;
}

Profile1D net_flux_increments(std::span<const double> heat,
                              const VerticalGrid& grid, const PhysConsts& consts) {
  require_length(heat, grid.n_fl(), "heating rate");
  const double factor = consts.c_p / consts.g;
  Profile1D d(heat.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = -factor * heat[i] * grid.dp(i);
  }
  return d;
}

Profile1D heating_from_increments(std::span<const double> increments,
                                  const VerticalGrid& grid, const PhysConsts& consts) {
  require_length(increments, grid.n_fl(), "net flux increments");
  const double factor = consts.g / consts.c_p;
  Profile1D heat(increments.size());
  for (std::size_t i = 0; i < heat.size(); ++i) heat[i] = -factor * increments[i] / grid.dp(i);
  return heat;
}

Profile1D truncate_to_window(std::span<const double> values,
                             const VerticalGrid& grid, const PhysConsts& consts) {
  const Window w = window_of(grid, consts);
  if (values.size() != grid.n_fl() && values.size() != grid.n_hl()) {
    throw InvalidInput("truncate: length " + std::to_string(values.size()) +
                       " matches neither full (" + std::to_string(grid.n_fl()) +
                       ") nor half (" + std::to_string(grid.n_hl()) + ") levels");
  }
  const auto first = values.begin() + static_cast<std::ptrdiff_t>(w.first_fl);
  return Profile1D(first, values.end());
}

FluxSet extend_to_full(std::span<const double> up_window,
                       std::span<const double> down_window,
                       std::optional<std::span<const double>> direct_window,
                       std::span<const double> heat_window,
                       const VerticalGrid& grid, const PhysConsts& consts) {
  const Window w = window_of(grid, consts);
  require_length(up_window, w.n_hl(), "window up");
  require_length(down_window, w.n_hl(), "window down");
  require_length(heat_window, w.n_fl, "window heat");
  if (direct_window) {
    require_length(*direct_window, w.n_hl(), "window direct_down");
  }

  const std::size_t off = w.first_fl;
  FluxSet f;
  f.up.assign(grid.n_hl(), up_window.front());
  f.down.assign(grid.n_hl(), 0.0);
  f.heat.assign(grid.n_fl(), 0.0);
  std::copy(up_window.begin(), up_window.end(), f.up.begin() + static_cast<std::ptrdiff_t>(off));
  std::copy(down_window.begin(), down_window.end(),
            f.down.begin() + static_cast<std::ptrdiff_t>(off));
  std::copy(heat_window.begin(), heat_window.end(),
            f.heat.begin() + static_cast<std::ptrdiff_t>(off));
  if (direct_window) {
    f.direct_down.emplace(grid.n_hl(), 0.0);
    std::copy(direct_window->begin(), direct_window->end(),
              f.direct_down->begin() + static_cast<std::ptrdiff_t>(off));
  }
  return f;
}

FluxSet apply_correction(const FluxSet& baseline, const FluxSet& effect,
                         const VerticalGrid& grid, const PhysConsts& consts) {
  const std::size_t n = grid.n_hl();
  if (baseline.up.size() != n || baseline.down.size() != n || effect.up.size() != n ||
      effect.down.size() != n) {
    throw InvalidInput("correction: flux lengths do not match the grid (" + std::to_string(n) +
                       " half levels)");
  }
  if (baseline.direct_down.has_value() != effect.direct_down.has_value()) {
    throw InvalidInput("correction: direct_down present in only one operand");
  }
  Profile1D up(n), down(n);
  for (std::size_t j = 0; j < n; ++j) {
    up[j] = baseline.up[j] + effect.up[j];
    down[j] = baseline.down[j] + effect.down[j];
  }
  std::optional<Profile1D> direct;
  if (baseline.direct_down) {
    require_length(*baseline.direct_down, n, "baseline direct_down");
    require_length(*effect.direct_down, n, "effect direct_down");
    direct.emplace(n);
    for (std::size_t j = 0; j < n; ++j) {
      (*direct)[j] = (*baseline.direct_down)[j] + (*effect.direct_down)[j];
    }
  }
  return FluxSet::from_fluxes(std::move(up), std::move(down), std::move(direct), grid, consts);
}

}  // namespace cloud3d
