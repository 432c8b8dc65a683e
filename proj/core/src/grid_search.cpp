#include "cloud3d/grid_search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>
#include <tuple>

#include "cloud3d/error.hpp"

namespace cloud3d {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::pair<bool, bool> input_flags(int quantities) {
  switch (quantities) {
    case 6: return {false, false};
    case 7: return {true, false};
    case 8: return {true, true};
    default: throw InvalidInput("grid search: input quantities must be 6, 7 or 8");
  }
}

}  // namespace

void GridSearchSpec::validate() const {
  if (input_quantities.empty() || hidden_layers.empty() || width_multipliers.empty() ||
      regularization.empty()) {
    throw InvalidInput("grid search: every axis needs at least one value");
  }
  if (repeats < 1) throw InvalidInput("grid search: repeats must be >= 1");
  for (int q : input_quantities) input_flags(q);
  for (int l : hidden_layers) {
    if (l < 0) throw InvalidInput("grid search: negative hidden layer count");
  }
  for (double m : width_multipliers) {
    if (!(m > 0.0)) throw InvalidInput("grid search: width multipliers must be > 0");
  }
  for (double r : regularization) {
    if (!(r >= 0.0)) throw InvalidInput("grid search: negative regularization");
  }
  if (!(selection_tolerance >= 0.0)) throw InvalidInput("grid search: negative tolerance");
}

std::vector<GridConfig> enumerate_grid(const GridSearchSpec& spec) {
  spec.validate();
  std::vector<GridConfig> out;
  for (int q : spec.input_quantities) {
    for (int l : spec.hidden_layers) {
      for (double m : spec.width_multipliers) {
        for (double r : spec.regularization) {
          out.push_back({q, l, m, r, 0});
        }
      }
    }
  }
  return out;
}

std::uint64_t run_seed(std::uint64_t base, std::size_t config_index, int repeat) {
  return splitmix64(splitmix64(base ^ splitmix64(config_index)) + static_cast<std::uint64_t>(repeat));
}

std::optional<std::size_t> select_configuration(const std::vector<GridRow>& rows,
                                                double tolerance) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (r.mean_mae) best = std::min(best, *r.mean_mae);
  }
  if (!std::isfinite(best)) return std::nullopt;
  const double cutoff = best + tolerance * std::abs(best);

  std::optional<std::size_t> pick;
  const auto key = [](const GridRow& r) {
    return std::make_tuple(r.config.input_quantities, r.config.hidden_layers, r.config.width,
                           *r.mean_mae);
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].mean_mae || *rows[i].mean_mae > cutoff) continue;
    if (!pick || key(rows[i]) < key(rows[*pick])) pick = i;
  }
  return pick;
}

double validation_mae(const MlpModel& model, const std::vector<AtmosphericProfile>& profiles,
                      const std::vector<EffectTargets>& targets,
                      const std::vector<std::size_t>& rows) {
  Matrix x = build_input_matrix(profiles, rows, model.schema, model.constants);
  const Matrix y = build_target_matrix(targets, rows, model.schema);
  model.input_norm.apply_inplace(x);
  Matrix pred = forward(model.network, x);
  model.output_norm.invert_inplace(pred);
  return (pred - y).cwiseAbs().mean();
}

GridReport grid_search(const GridSearchSpec& spec, const std::vector<AtmosphericProfile>& profiles,
                       const std::vector<EffectTargets>& targets, const DataSplit& split,
                       Component component, const TrainConfig& base, unsigned threads,
                       const PhysConsts& consts) {
  const std::vector<GridConfig> configs = enumerate_grid(spec);
  GridReport report;
  report.component = component;
  report.rows.resize(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    GridConfig c = configs[i];
    const auto [with_q, with_dz] = input_flags(c.input_quantities);
    const FeatureSchema schema(component, schema_for(profiles, component, consts).n_fl_window(),
                               with_q, with_dz);
    c.width = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::lround(c.width_multiplier *
                                                 static_cast<double>(schema.input_len()))));
    report.rows[i].index = i;
    report.rows[i].config = c;
    report.rows[i].mae.assign(static_cast<std::size_t>(spec.repeats),
                              std::numeric_limits<double>::quiet_NaN());
    report.rows[i].failures.assign(static_cast<std::size_t>(spec.repeats), {});
  }

  const std::size_t total = configs.size() * static_cast<std::size_t>(spec.repeats);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      const std::size_t ci = job / static_cast<std::size_t>(spec.repeats);
      const int rep = static_cast<int>(job % static_cast<std::size_t>(spec.repeats));
      GridRow& row = report.rows[ci];
      const auto [with_q, with_dz] = input_flags(row.config.input_quantities);
      FitOptions opts;
      opts.hidden.assign(static_cast<std::size_t>(row.config.hidden_layers), row.config.width);
      opts.train = base;
      opts.train.l1 = row.config.regularization;
      opts.train.l2 = row.config.regularization;
      opts.train.seed = run_seed(base.seed, ci, rep);
      opts.with_humidity = with_q;
      opts.with_thickness = with_dz;
      try {
        const FitResult fit = fit_model(profiles, targets, split, component, opts, consts);
        row.mae[static_cast<std::size_t>(rep)] =
            validation_mae(fit.model, profiles, targets, split.val);
      } catch (const std::exception& e) {
        row.failures[static_cast<std::size_t>(rep)] = e.what();
      }
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (GridRow& row : report.rows) {
    std::vector<double> ok;
    std::vector<std::string> failed;
    for (std::size_t r = 0; r < row.mae.size(); ++r) {
      if (row.failures[r].empty()) {
        ok.push_back(row.mae[r]);
      } else {
        failed.push_back("repeat " + std::to_string(r) + ": " + row.failures[r]);
      }
    }
    row.mae = std::move(ok);
    row.failures = std::move(failed);
    if (!row.mae.empty()) {
      double s = 0.0;
      for (double v : row.mae) s += v;
      row.mean_mae = s / static_cast<double>(row.mae.size());
    }
  }
  report.runs = total;
  report.selected = select_configuration(report.rows, spec.selection_tolerance);
  return report;
}

}  // namespace cloud3d
