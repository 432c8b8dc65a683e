#include "cloud3d/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <thread>

#include "cloud3d/error.hpp"
#include "cloud3d/postproc.hpp"

namespace cloud3d {
namespace {

// Rows are always processed in blocks of this size so results do not depend
// on how many threads share the work.
constexpr Eigen::Index kInferenceBlock = 512;

template <typename Fn>
void parallel_blocks(Eigen::Index rows, unsigned threads, Fn&& fn) {
  const Eigen::Index blocks = (rows + kInferenceBlock - 1) / kInferenceBlock;
  const auto run = [&](Eigen::Index first, Eigen::Index stride) {
    for (Eigen::Index b = first; b < blocks; b += stride) {
      const Eigen::Index begin = b * kInferenceBlock;
      fn(begin, std::min(rows, begin + kInferenceBlock));
    }
  };
  const auto workers = static_cast<Eigen::Index>(
      std::min<std::size_t>(std::max(threads, 1u), static_cast<std::size_t>(std::max<Eigen::Index>(blocks, 1))));
  if (workers <= 1) {
    run(0, 1);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (Eigen::Index w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        run(w, workers);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<Eigen::Index> reference_hidden(Component c) {
  const Eigen::Index w = c == Component::Longwave ? kReferenceWidthLw : kReferenceWidthSw;
  return std::vector<Eigen::Index>(kReferenceHiddenLayers, w);
}

DataSplit split_60_20_20(std::size_t n, std::uint64_t seed) {
  if (n < 3) throw InvalidInput("split: need at least 3 profiles, got " + std::to_string(n));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
  }
  const std::size_t n_train = (n * 6) / 10;
  const std::size_t n_val = (n - n_train) / 2;
  DataSplit s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
               idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  return s;
}

void MlpModel::validate() const {
  network.validate();
  constants.validate();
  const auto in = static_cast<Eigen::Index>(schema.input_len());
  const auto out = static_cast<Eigen::Index>(schema.output_len());
  if (network.input_len() != in || network.output_len() != out) {
    throw InvalidInput("model: network shape " + std::to_string(network.input_len()) + "->" +
                       std::to_string(network.output_len()) + " does not match schema " +
                       std::to_string(in) + "->" + std::to_string(out));
  }
  if (input_norm.size() != schema.input_len() || output_norm.size() != schema.output_len()) {
    throw InvalidInput("model: normalization widths do not match schema");
  }
  if ((input_norm.scale.array() <= 0.0).any() || (output_norm.scale.array() <= 0.0).any()) {
    throw InvalidInput("model: normalization scale must be > 0");
  }
}

EffectTargets targets_from_fluxes(const FluxSet& full, const AtmosphericProfile& profile,
                                  Component component, const PhysConsts& consts) {
  const VerticalGrid wgrid = window_grid(profile.grid, consts);
  const Profile1D up = truncate_to_window(full.up, profile.grid, consts);
  const Profile1D down = truncate_to_window(full.down, profile.grid, consts);
  EffectTargets t;
  t.component = component;
  t.alpha = profile.albedo;
  t.scalar.resize(up.size());
  Profile1D net(up.size());
  for (std::size_t j = 0; j < up.size(); ++j) {
    t.scalar[j] = down[j] + up[j];
    net[j] = down[j] - up[j];
  }
  t.heat = compute_heating_rates(net, wgrid, consts);
  if (component == Component::Shortwave) {
    if (!full.direct_down) {
      throw InvalidInput("targets: shortwave fluxes lack direct_down");
    }
    t.direct_down = truncate_to_window(*full.direct_down, profile.grid, consts);
  }
  return t;
}

FeatureSchema schema_for(const std::vector<AtmosphericProfile>& profiles, Component component,
                         const PhysConsts& consts, bool with_humidity, bool with_thickness) {
  if (profiles.empty()) throw InvalidInput("schema: no profiles");
  const std::size_t n_fl = window_of(profiles.front().grid, consts).n_fl;
  for (std::size_t k = 1; k < profiles.size(); ++k) {
    const std::size_t other = window_of(profiles[k].grid, consts).n_fl;
    if (other != n_fl) {
      throw InvalidInput("schema: profile " + std::to_string(k) + " has a " +
                         std::to_string(other) + "-level window, expected " +
                         std::to_string(n_fl));
    }
  }
  return FeatureSchema(component, n_fl, with_humidity, with_thickness);
}

Matrix build_input_matrix(const std::vector<AtmosphericProfile>& profiles,
                          const std::vector<std::size_t>& rows, const FeatureSchema& schema,
                          const PhysConsts& consts) {
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(schema.input_len()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const AtmosphericProfile& p = profiles.at(rows[r]);
    const Profile1D tau = compute_cloud_optical_depth(p, consts);
    const std::vector<double> v = build_input_vector(p, tau, schema, consts);
    x.row(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const RowVector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return x;
}

Matrix build_target_matrix(const std::vector<EffectTargets>& targets,
                           const std::vector<std::size_t>& rows, const FeatureSchema& schema) {
  Matrix y(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(schema.output_len()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::vector<double> v = build_target_vector(targets.at(rows[r]), schema);
    y.row(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const RowVector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return y;
}

FitResult fit_model(const std::vector<AtmosphericProfile>& profiles,
                    const std::vector<EffectTargets>& targets, const DataSplit& split,
                    Component component, const FitOptions& opts, const PhysConsts& consts) {
  if (profiles.size() != targets.size()) {
    throw InvalidInput("fit: " + std::to_string(profiles.size()) + " profiles but " +
                       std::to_string(targets.size()) + " target records");
  }
  const FeatureSchema schema =
      schema_for(profiles, component, consts, opts.with_humidity, opts.with_thickness);

  Matrix x_train = build_input_matrix(profiles, split.train, schema, consts);
  Matrix y_train = build_target_matrix(targets, split.train, schema);
  Matrix x_val = build_input_matrix(profiles, split.val, schema, consts);
  Matrix y_val = build_target_matrix(targets, split.val, schema);

  FitResult out;
  MlpModel& m = out.model;
  m.schema = schema;
  m.constants = consts;
  m.input_norm = Normalization::fit(x_train);
  m.output_norm = Normalization::fit(y_train);
  m.input_norm.apply_inplace(x_train);
  m.input_norm.apply_inplace(x_val);
  m.output_norm.apply_inplace(y_train);
  m.output_norm.apply_inplace(y_val);

  Network init = Network::he_uniform(static_cast<Eigen::Index>(schema.input_len()), opts.hidden,
                                     static_cast<Eigen::Index>(schema.output_len()),
                                     opts.train.seed);
  out.training = train(std::move(init), x_train, y_train, x_val, y_val, opts.train);
  m.network = out.training.network;
  m.training.seed = opts.train.seed;
  m.training.epochs = static_cast<int>(out.training.history.size());
  m.training.best_epoch = out.training.best_epoch;
  m.training.val_loss = out.training.best_val_loss;
  m.training.config = opts.train;
  return out;
}

std::vector<EffectTargets> predict_targets(const MlpModel& model,
                                           const std::vector<AtmosphericProfile>& profiles,
                                           unsigned threads) {
  model.validate();
  std::vector<std::size_t> rows(profiles.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const FeatureSchema& schema = model.schema;
  const Matrix x = build_input_matrix(profiles, rows, schema, model.constants);

  Matrix y(x.rows(), static_cast<Eigen::Index>(schema.output_len()));
  parallel_blocks(x.rows(), threads, [&](Eigen::Index begin, Eigen::Index end) {
    Matrix block = x.middleRows(begin, end - begin);
    model.input_norm.apply_inplace(block);
    Matrix out = forward(model.network, block);
    model.output_norm.invert_inplace(out);
    y.middleRows(begin, end - begin) = out;
  });

  std::vector<EffectTargets> result;
  result.reserve(profiles.size());
  for (std::size_t r = 0; r < profiles.size(); ++r) {
    const auto row = y.row(static_cast<Eigen::Index>(r));
    EffectTargets t = split_output_vector(std::span<const double>(row.data(), row.size()),
                                          schema, profiles[r].albedo);
    if (schema.component() == Component::Shortwave && profiles[r].mu0 <= 0.0) {
      std::fill(t.scalar.begin(), t.scalar.end(), 0.0);
      std::fill(t.heat.begin(), t.heat.end(), 0.0);
      if (t.direct_down) std::fill(t.direct_down->begin(), t.direct_down->end(), 0.0);
    }
    result.push_back(std::move(t));
  }
  return result;
}

FluxSet effects_to_full_grid(const EffectTargets& targets, const AtmosphericProfile& profile,
                             const PhysConsts& consts) {
  const VerticalGrid wgrid = window_grid(profile.grid, consts);
  const FluxSet w = postprocess(targets, wgrid, consts);
  std::optional<std::span<const double>> direct;
  if (w.direct_down) direct = std::span<const double>(*w.direct_down);
  return extend_to_full(w.up, w.down, direct, w.heat, profile.grid, consts);
}

std::vector<ProfileEffects> predict_effects(const MlpModel& lw, const MlpModel& sw,
                                            const std::vector<AtmosphericProfile>& profiles,
                                            unsigned threads) {
  if (lw.component() != Component::Longwave || sw.component() != Component::Shortwave) {
    throw InvalidInput("predict: expected one longwave and one shortwave model");
  }
  const std::vector<EffectTargets> t_lw = predict_targets(lw, profiles, threads);
  const std::vector<EffectTargets> t_sw = predict_targets(sw, profiles, threads);
  std::vector<ProfileEffects> out(profiles.size());
  for (std::size_t r = 0; r < profiles.size(); ++r) {
    out[r].lw = effects_to_full_grid(t_lw[r], profiles[r], lw.constants);
    out[r].sw = effects_to_full_grid(t_sw[r], profiles[r], sw.constants);
  }
  return out;
}

}  // namespace cloud3d
