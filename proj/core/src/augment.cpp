#include "cloud3d/augment.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cloud3d/error.hpp"
#include "cloud3d/network.hpp"

namespace cloud3d {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) { return mix(seed ^ mix(stream)); }

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

struct Accumulated {
  Profile1D from_above;  // sum_{i<j} w_i e^{-(j-1-i)/h}, per HL
  Profile1D from_below;  // sum_{i>=j} w_i e^{-(i-j)/h}, per HL
  Profile1D cumulative;  // sum_{i<j} w_i, per HL
};

Accumulated accumulate(const Profile1D& w, double decay_layers) {
  const std::size_t n_fl = w.size();
  const std::size_t n_hl = n_fl + 1;
  Accumulated a{Profile1D(n_hl, 0.0), Profile1D(n_hl, 0.0), Profile1D(n_hl, 0.0)};
  for (std::size_t j = 0; j < n_hl; ++j) {
    for (std::size_t i = 0; i < n_fl; ++i) {
      const double di = static_cast<double>(i);
      const double dj = static_cast<double>(j);
      if (i < j) {
        a.from_above[j] += w[i] * std::exp(-(dj - 1.0 - di) / decay_layers);
        a.cumulative[j] += w[i];
      } else {
        a.from_below[j] += w[i] * std::exp(-(di - dj) / decay_layers);
      }
    }
  }
  return a;
}

EffectTargets targets_of(const FluxSet& f, Component c, double alpha) {
  EffectTargets t;
  t.component = c;
  t.alpha = alpha;
  t.scalar = f.scalar();
  t.heat = f.heat;
  t.direct_down = f.direct_down;
  return t;
}

}  // namespace

std::vector<AtmosphericProfile> augment_scalars(const std::vector<AtmosphericProfile>& profiles,
                                                std::size_t copies, std::uint64_t seed) {
  const std::size_t n = profiles.size();
  std::vector<AtmosphericProfile> out;
  out.reserve(n * (copies + 1));
  out.insert(out.end(), profiles.begin(), profiles.end());
  if (n == 0) return out;

  std::vector<double> alphas(n), mus(n);
  for (std::size_t k = 0; k < n; ++k) {
    alphas[k] = profiles[k].albedo;
    mus[k] = profiles[k].mu0;
  }
  for (std::size_t c = 0; c < copies; ++c) {
    std::mt19937_64 rng(derive(seed, c));
    for (std::size_t k = 0; k < n; ++k) {
      AtmosphericProfile p = profiles[k];
      p.albedo = alphas[pick(rng, n)];
      p.mu0 = mus[pick(rng, n)];
      out.push_back(std::move(p));
    }
  }
  return out;
}

ToyTruth toy_truth(const AtmosphericProfile& profile, const PhysConsts& consts,
                   const ToyTruthParams& params) {
  if (!(params.decay_layers > 0.0)) throw InvalidInput("toy truth: decay must be > 0");
  const VerticalGrid wgrid = window_grid(profile.grid, consts);
  const Window win = window_of(profile.grid, consts);
  const Profile1D tau = compute_cloud_optical_depth(profile, consts);

  Profile1D w(win.n_fl);
  for (std::size_t i = 0; i < win.n_fl; ++i) {
    const std::size_t g = win.first_fl + i;
    w[i] = profile.cloud_fraction[g] * (1.0 - std::exp(-tau[g]));
  }
  const Accumulated acc = accumulate(w, params.decay_layers);
  const std::size_t n_hl = win.n_hl();
  const std::size_t boa = n_hl - 1;

  const auto shaped_up = [&](double amplitude) {
    Profile1D up(n_hl, 0.0);
    for (std::size_t j = 0; j < boa; ++j) {
      up[j] = amplitude * acc.from_below[j] *
              (1.0 - static_cast<double>(j) / static_cast<double>(n_hl));
    }
    return up;
  };

  ToyTruth t;
  {
    Profile1D down(n_hl);
    for (std::size_t j = 0; j < n_hl; ++j) down[j] = params.amplitude_lw * acc.from_above[j];
    t.lw_fluxes = FluxSet::from_fluxes(shaped_up(params.amplitude_lw), std::move(down),
                                       std::nullopt, wgrid, consts);
  }
  {
    const double sun = profile.mu0 > 0.0 ? profile.mu0 : 0.0;
    const double amp = params.amplitude_sw * sun;
    Profile1D down(n_hl), direct(n_hl);
    for (std::size_t j = 0; j < n_hl; ++j) {
      down[j] = amp * acc.from_above[j];
      direct[j] = -amp * acc.cumulative[j];
    }
    Profile1D up = shaped_up(amp);
    up[boa] = profile.albedo * down[boa];
    t.sw_fluxes = FluxSet::from_fluxes(std::move(up), std::move(down), std::move(direct), wgrid,
                                       consts);
  }
  t.lw = targets_of(t.lw_fluxes, Component::Longwave, profile.albedo);
  t.sw = targets_of(t.sw_fluxes, Component::Shortwave, profile.albedo);
  return t;
}

std::vector<AtmosphericProfile> synthesize_profiles(const SynthOptions& opts) {
  if (!(opts.surface_pressure_min > 5000.0) ||
      !(opts.surface_pressure_max >= opts.surface_pressure_min)) {
    throw InvalidInput("synth: invalid surface pressure range");
  }
  std::vector<AtmosphericProfile> out;
  out.reserve(opts.profiles);
  for (std::size_t k = 0; k < opts.profiles; ++k) {
    std::mt19937_64 rng(derive(opts.seed, k));
    AtmosphericProfile p;
    const double ps = uniform(rng, opts.surface_pressure_min, opts.surface_pressure_max);
    p.grid = make_l137_grid(ps);
    const std::size_t n = p.grid.n_fl();

    p.skin_temperature = uniform(rng, 255.0, 310.0);
    const double t_air = p.skin_temperature - uniform(rng, -2.0, 4.0);
    const double t_min = uniform(rng, 195.0, 220.0);
    p.temperature.resize(n);
    p.humidity = Profile1D(n);
    const double rh = uniform(rng, 0.3, 0.9);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = p.grid.p_fl(i) / ps;
      p.temperature[i] = std::max(t_min, t_air * std::pow(s, 0.19));
      (*p.humidity)[i] = rh * 0.02 * s * s * s;
    }

    p.cloud_fraction.assign(n, 0.0);
    p.q_liquid.assign(n, 0.0);
    p.q_ice.assign(n, 0.0);
    p.r_liquid.assign(n, 1e-5);
    p.r_ice.assign(n, 5e-5);

    const Window win = window_of(p.grid);
    const auto layers = static_cast<int>(pick(rng, 5));  // 0..4 cloud layers
    for (int c = 0; c < layers; ++c) {
      const std::size_t depth = 2 + pick(rng, 19);
      const std::size_t top = win.first_fl + 5 + pick(rng, win.n_fl - 5 - depth);
      const double fc = uniform(rng, 0.05, 1.0);
      const double ql = log_uniform(rng, 1e-5, 5e-4);
      const double qi = log_uniform(rng, 1e-6, 1e-4);
      const double rl = uniform(rng, 4e-6, 2e-5);
      const double ri = uniform(rng, 2e-5, 1e-4);
      for (std::size_t i = top; i < top + depth; ++i) {
        p.cloud_fraction[i] = std::max(p.cloud_fraction[i], fc);
        if (p.temperature[i] > 253.0) {
          p.q_liquid[i] += ql;
          p.r_liquid[i] = rl;
        }
        if (p.temperature[i] < 273.0) {
          p.q_ice[i] += qi;
          p.r_ice[i] = ri;
        }
      }
    }
    p.albedo = uniform(rng, 0.05, 0.9);
    p.mu0 = uniform(rng, -0.3, 1.0);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace cloud3d
