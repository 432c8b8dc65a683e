// cloud3d: command-line driver for the 3D cloud effect emulator.
//
// Every subcommand takes --config FILE (a flat JSON object) and per-key flag
// overrides; the resolved settings, defaults included, are echoed into the
// outputs that have room for them (model files, reports).

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cloud3d/augment.hpp"
#include "cloud3d/error.hpp"
#include "cloud3d/evalbench.hpp"
#include "cloud3d/grid_search.hpp"
#include "cloud3d/io.hpp"
#include "cloud3d/pipeline.hpp"
#include "cloud3d/postproc.hpp"

using nlohmann::json;
using namespace cloud3d;
namespace fs = std::filesystem;

namespace {

constexpr const char* kThreadsEnv = "CLOUD3D_THREADS";

// Error raised for command-level problems; the locus is the subcommand.
struct UsageError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Settings: defaults <- config file <- flags.

class Settings {
public:
  Settings(CLI::App* app, json defaults) : app_(app), values_(std::move(defaults)) {
    app_->add_option("--config", config_path_, "flat JSON file with settings");
    for (const auto& [key, value] : values_.items()) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      std::string help = "default " + value.dump();
      options_[key] = app_->add_option(flag, raw_[key], help);
    }
  }

  /// Applies the config file and the flags that were given. Call after parse.
  const json& resolve() {
    if (!config_path_.empty()) {
      const json cfg = io::read_json(config_path_);
      if (!cfg.is_object()) throw FormatError(config_path_, "config must be a JSON object");
      for (const auto& [key, value] : cfg.items()) {
        if (!values_.contains(key)) {
          throw FormatError(config_path_, "unknown key '" + key + "' for '" + app_->get_name() + "'");
        }
        set(key, value, config_path_);
      }
    }
    for (const auto& [key, opt] : options_) {
      if (opt->count() == 0) continue;
      const std::string& text = raw_[key];
      const json& like = values_[key];
      json v;
      try {
        if (like.is_string()) v = text;
        else if (like.is_array() && !text.empty() && text.front() != '[') v = json::parse("[" + text + "]");
        else v = json::parse(text);
      } catch (const json::exception&) {
        throw FormatError(opt->get_name(), "cannot parse '" + text + "'");
      }
      set(key, v, opt->get_name());
    }
    return values_;
  }

  const json& values() const { return values_; }

private:
  void set(const std::string& key, const json& v, const std::string& locus) {
    const json& like = values_[key];
    const bool ok = (like.is_number() && v.is_number()) || (like.is_boolean() && v.is_boolean()) ||
                    (like.is_string() && v.is_string()) || (like.is_array() && v.is_array());
    if (!ok) throw FormatError(locus, "'" + key + "' expects " + std::string(like.type_name()));
    if (like.is_number_unsigned() && v.is_number_integer() && v.get<long long>() < 0) {
      throw FormatError(locus, "'" + key + "' must be non-negative");
    }
    values_[key] = v;
  }

  CLI::App* app_;
  json values_;
  std::string config_path_;
  std::map<std::string, std::string> raw_;
  std::map<std::string, CLI::Option*> options_;
};

json consts_defaults() { return io::consts_to_json(PhysConsts{}); }

PhysConsts consts_from(const json& s) {
  PhysConsts c;
  json sub;
  const json defaults = consts_defaults();  // items() must not outlive its json
  for (const auto& [k, v] : defaults.items()) sub[k] = s.at(k);
  io::apply_consts(sub, c, "constants");
  return c;
}

TrainConfig train_config_from(const json& s) {
  TrainConfig cfg;
  json sub;
  const json defaults = io::train_config_to_json(TrainConfig{});
  for (const auto& [k, v] : defaults.items()) sub[k] = s.at(k);
  io::apply_train_config(sub, cfg, "training");
  cfg.validate();
  return cfg;
}

unsigned default_threads() {
  if (const char* env = std::getenv(kThreadsEnv)) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return 1;
}

unsigned threads_from(const json& s) {
  const long long t = s.at("threads").get<long long>();
  if (t < 1) throw UsageError("threads must be >= 1");
  return static_cast<unsigned>(t);
}

Component component_from(const json& s) { return component_from_string(s.at("component").get<std::string>()); }

// ---------------------------------------------------------------------------
// Dataset helpers.

struct Dataset {
  std::vector<std::string> ids;
  std::vector<AtmosphericProfile> profiles;
};

Dataset load_profiles(const fs::path& path) {
  Dataset d;
  std::unordered_map<std::string, std::size_t> seen;
  for (auto& r : io::read_profiles(path)) {
    if (!seen.emplace(r.id, d.ids.size()).second) {
      throw FormatError(path.string() + ":" + std::to_string(d.ids.size() + 1),
                        "duplicate id '" + r.id + "'");
    }
    d.ids.push_back(std::move(r.id));
    d.profiles.push_back(std::move(r.profile));
  }
  if (d.profiles.empty()) throw FormatError(path.string(), "no profiles");
  return d;
}

/// Flux records reordered to match the profile ids; grids must agree.
std::vector<FluxSet> load_aligned_fluxes(const fs::path& path, const Dataset& d) {
  auto recs = io::read_fluxes(path);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (!index.emplace(recs[i].id, i).second) {
      throw FormatError(path.string() + ":" + std::to_string(i + 1), "duplicate id '" + recs[i].id + "'");
    }
  }
  std::vector<FluxSet> out;
  out.reserve(d.ids.size());
  for (std::size_t k = 0; k < d.ids.size(); ++k) {
    const auto it = index.find(d.ids[k]);
    if (it == index.end()) throw FormatError(path.string(), "no record for profile id '" + d.ids[k] + "'");
    const std::string locus = path.string() + ":" + std::to_string(it->second + 1);
    FluxSet f = std::move(recs[it->second].fluxes);
    const std::size_t n_hl = d.profiles[k].grid.n_hl();
    if (f.up.size() != n_hl) {
      throw FormatError(locus, "flux has " + std::to_string(f.up.size()) + " half levels, profile '" +
                                   d.ids[k] + "' has " + std::to_string(n_hl));
    }
    if (!f.heat.empty() && f.heat.size() + 1 != n_hl) throw FormatError(locus, "'heat' length mismatch");
    out.push_back(std::move(f));
  }
  if (recs.size() != d.ids.size()) {
    throw FormatError(path.string(), std::to_string(recs.size()) + " records for " +
                                         std::to_string(d.ids.size()) + " profiles");
  }
  return out;
}

void write_flux_file(const fs::path& path, const std::vector<std::string>& ids,
                     const std::vector<FluxSet>& fluxes) {
  std::vector<io::FluxRecord> recs;
  recs.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) recs.push_back({ids[i], fluxes[i]});
  io::write_fluxes(path, recs);
}

std::vector<std::string> ids_of(const Dataset& d, const std::vector<std::size_t>& rows) {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(d.ids[r]);
  return out;
}

FluxSet extend_window(const FluxSet& w, const VerticalGrid& grid, const PhysConsts& c) {
  std::optional<std::span<const double>> direct;
  if (w.direct_down) direct = std::span<const double>(*w.direct_down);
  return extend_to_full(w.up, w.down, direct, w.heat, grid, c);
}

void write_json(const fs::path& path, const json& j) { io::write_atomic(path, j.dump(2) + "\n"); }

std::string hardware_description() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) return line.substr(line.find_first_not_of(' ', colon + 1));
    }
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Subcommands.

struct SynthCmd {
  std::unique_ptr<Settings> settings;
  std::string profiles_in, out_profiles, out_lw, out_sw;

  void setup(CLI::App* app) {
    const SynthOptions so;
    const ToyTruthParams tp;
    json d = {{"profiles", so.profiles},
              {"seed", so.seed},
              {"surface_pressure_min", so.surface_pressure_min},
              {"surface_pressure_max", so.surface_pressure_max},
              {"amplitude_lw", tp.amplitude_lw},
              {"amplitude_sw", tp.amplitude_sw},
              {"decay_layers", tp.decay_layers}};
    d.update(consts_defaults());
    settings = std::make_unique<Settings>(app, d);
    app->add_option("--profiles-in", profiles_in, "compute toy truth for these profiles instead of generating");
    app->add_option("--out-profiles", out_profiles, "profile JSONL output");
    app->add_option("--out-lw", out_lw, "longwave effect JSONL output")->required();
    app->add_option("--out-sw", out_sw, "shortwave effect JSONL output")->required();
  }

  void run() {
    const json& s = settings->resolve();
    const PhysConsts c = consts_from(s);
    Dataset d;
    if (!profiles_in.empty()) {
      d = load_profiles(profiles_in);
    } else {
      if (out_profiles.empty()) throw UsageError("--out-profiles is required unless --profiles-in is given");
      SynthOptions so;
      so.profiles = s.at("profiles").get<std::size_t>();
      so.seed = s.at("seed").get<std::uint64_t>();
      so.surface_pressure_min = s.at("surface_pressure_min").get<double>();
      so.surface_pressure_max = s.at("surface_pressure_max").get<double>();
      d.profiles = synthesize_profiles(so);
      for (std::size_t i = 0; i < d.profiles.size(); ++i) d.ids.push_back(std::to_string(i));
    }
    ToyTruthParams tp;
    tp.amplitude_lw = s.at("amplitude_lw").get<double>();
    tp.amplitude_sw = s.at("amplitude_sw").get<double>();
    tp.decay_layers = s.at("decay_layers").get<double>();

    std::vector<FluxSet> lw, sw;
    for (const auto& p : d.profiles) {
      const ToyTruth t = toy_truth(p, c, tp);
      lw.push_back(extend_window(t.lw_fluxes, p.grid, c));
      sw.push_back(extend_window(t.sw_fluxes, p.grid, c));
    }
    if (profiles_in.empty()) {
      std::vector<io::ProfileRecord> recs;
      for (std::size_t i = 0; i < d.profiles.size(); ++i) recs.push_back({d.ids[i], d.profiles[i]});
      io::write_profiles(out_profiles, recs);
    }
    write_flux_file(out_lw, d.ids, lw);
    write_flux_file(out_sw, d.ids, sw);
    std::cout << "synth: " << d.profiles.size() << " profiles\n";
  }
};

struct AugmentCmd {
  std::unique_ptr<Settings> settings;
  std::string in, out;

  void setup(CLI::App* app) {
    settings = std::make_unique<Settings>(app, json{{"copies", 9}, {"seed", 0}});
    app->add_option("--in", in, "profile JSONL input")->required();
    app->add_option("--out", out, "profile JSONL output")->required();
  }

  void run() {
    const json& s = settings->resolve();
    const long long copies = s.at("copies").get<long long>();
    if (copies < 0) throw UsageError("copies must be >= 0");
    const Dataset d = load_profiles(in);
    const auto aug = augment_scalars(d.profiles, static_cast<std::size_t>(copies),
                                     s.at("seed").get<std::uint64_t>());
    std::vector<io::ProfileRecord> recs;
    recs.reserve(aug.size());
    const std::size_t n = d.ids.size();
    for (std::size_t i = 0; i < aug.size(); ++i) {
      const std::size_t copy = i / n;
      std::string id = d.ids[i % n];
      if (copy > 0) id += "#" + std::to_string(copy);
      recs.push_back({std::move(id), aug[i]});
    }
    io::write_profiles(out, recs);
    std::cout << "augment: " << n << " -> " << recs.size() << " profiles\n";
  }
};

json training_defaults() {
  json d = io::train_config_to_json(TrainConfig{});
  d["component"] = "lw";
  d["split_seed"] = 0;
  d["with_humidity"] = false;
  d["with_thickness"] = false;
  d.update(consts_defaults());
  return d;
}

std::vector<EffectTargets> targets_for(const Dataset& d, const std::vector<FluxSet>& fluxes,
                                       Component comp, const PhysConsts& c) {
  std::vector<EffectTargets> t;
  t.reserve(d.profiles.size());
  for (std::size_t i = 0; i < d.profiles.size(); ++i) {
    if (comp == Component::Shortwave && !fluxes[i].direct_down) {
      throw FormatError("effects", "shortwave record '" + d.ids[i] + "' has no direct_down");
    }
    t.push_back(targets_from_fluxes(fluxes[i], d.profiles[i], comp, c));
  }
  return t;
}

struct TrainCmd {
  std::unique_ptr<Settings> settings;
  std::string profiles, effects, out;

  void setup(CLI::App* app) {
    json d = training_defaults();
    d["hidden"] = json::array();  // empty: reference architecture
    settings = std::make_unique<Settings>(app, d);
    app->add_option("--profiles", profiles, "profile JSONL")->required();
    app->add_option("--effects", effects, "3D-effect flux JSONL for the component")->required();
    app->add_option("--out", out, "model file")->required();
  }

  void run() {
    const json& s = settings->resolve();
    const PhysConsts c = consts_from(s);
    const Component comp = component_from(s);
    const Dataset d = load_profiles(profiles);
    const auto targets = targets_for(d, load_aligned_fluxes(effects, d), comp, c);

    FitOptions opts;
    opts.train = train_config_from(s);
    opts.with_humidity = s.at("with_humidity").get<bool>();
    opts.with_thickness = s.at("with_thickness").get<bool>();
    opts.hidden = s.at("hidden").get<std::vector<Eigen::Index>>();
    if (opts.hidden.empty()) opts.hidden = reference_hidden(comp);

    const DataSplit split = split_60_20_20(d.profiles.size(), s.at("split_seed").get<std::uint64_t>());
    FitResult r = fit_model(d.profiles, targets, split, comp, opts, c);
    r.model.training.train_ids = ids_of(d, split.train);
    r.model.training.val_ids = ids_of(d, split.val);
    r.model.training.test_ids = ids_of(d, split.test);
    io::write_model(out, r.model);
    std::cout << "train " << to_string(comp) << ": " << r.training.history.size() << " epochs, best "
              << r.training.best_epoch << ", val_loss " << r.training.best_val_loss << "\n";
  }
};

struct GridSearchCmd {
  std::unique_ptr<Settings> settings;
  std::string profiles, effects, out;

  void setup(CLI::App* app) {
    const GridSearchSpec spec;
    json d = training_defaults();
    d["inputs"] = spec.input_quantities;
    d["layers"] = spec.hidden_layers;
    d["width_multipliers"] = spec.width_multipliers;
    d["regularization"] = spec.regularization;
    d["repeats"] = spec.repeats;
    d["selection_tolerance"] = spec.selection_tolerance;
    d["threads"] = default_threads();
    settings = std::make_unique<Settings>(app, d);
    app->add_option("--profiles", profiles, "profile JSONL")->required();
    app->add_option("--effects", effects, "3D-effect flux JSONL for the component")->required();
    app->add_option("--out", out, "report JSON")->required();
  }

  void run() {
    const json& s = settings->resolve();
    const PhysConsts c = consts_from(s);
    const Component comp = component_from(s);
    GridSearchSpec spec;
    spec.input_quantities = s.at("inputs").get<std::vector<int>>();
    spec.hidden_layers = s.at("layers").get<std::vector<int>>();
    spec.width_multipliers = s.at("width_multipliers").get<std::vector<double>>();
    spec.regularization = s.at("regularization").get<std::vector<double>>();
    spec.repeats = s.at("repeats").get<int>();
    spec.selection_tolerance = s.at("selection_tolerance").get<double>();
    spec.validate();

    const Dataset d = load_profiles(profiles);
    const auto targets = targets_for(d, load_aligned_fluxes(effects, d), comp, c);
    const DataSplit split = split_60_20_20(d.profiles.size(), s.at("split_seed").get<std::uint64_t>());
    const GridReport report =
        grid_search(spec, d.profiles, targets, split, comp, train_config_from(s), threads_from(s), c);
    json j = io::grid_report_to_json(report);
    j["settings"] = s;
    write_json(out, j);
    std::cout << "grid-search " << to_string(comp) << ": " << report.runs << " runs";
    if (report.selected) std::cout << ", selected row " << *report.selected;
    std::cout << "\n";
  }
};

struct PredictCmd {
  std::unique_ptr<Settings> settings;
  std::string lw_model, sw_model, profiles, out_lw, out_sw;

  void setup(CLI::App* app) {
    settings = std::make_unique<Settings>(app, json{{"threads", default_threads()}});
    app->add_option("--lw-model", lw_model, "longwave model file")->required();
    app->add_option("--sw-model", sw_model, "shortwave model file")->required();
    app->add_option("--profiles", profiles, "profile JSONL")->required();
    app->add_option("--out-lw", out_lw, "longwave effect JSONL output")->required();
    app->add_option("--out-sw", out_sw, "shortwave effect JSONL output")->required();
  }

  void run() {
    const json& s = settings->resolve();
    const MlpModel lw = io::read_model(lw_model);
    const MlpModel sw = io::read_model(sw_model);
    if (lw.component() != Component::Longwave) throw FormatError(lw_model, "not a longwave model");
    if (sw.component() != Component::Shortwave) throw FormatError(sw_model, "not a shortwave model");
    const Dataset d = load_profiles(profiles);
    const auto effects = predict_effects(lw, sw, d.profiles, threads_from(s));
    std::vector<FluxSet> l, w;
    for (const auto& e : effects) {
      l.push_back(e.lw);
      w.push_back(e.sw);
    }
    write_flux_file(out_lw, d.ids, l);
    write_flux_file(out_sw, d.ids, w);
    std::cout << "predict: " << d.profiles.size() << " profiles\n";
  }
};

struct CorrectCmd {
  std::unique_ptr<Settings> settings;
  std::string profiles, baseline, effects, out;

  void setup(CLI::App* app) {
    settings = std::make_unique<Settings>(app, consts_defaults());
    app->add_option("--profiles", profiles, "profile JSONL (for the grids)")->required();
    app->add_option("--baseline", baseline, "1D baseline flux JSONL")->required();
    app->add_option("--effects", effects, "3D-effect flux JSONL")->required();
    app->add_option("--out", out, "corrected flux JSONL")->required();
  }

  void run() {
    const PhysConsts c = consts_from(settings->resolve());
    const Dataset d = load_profiles(profiles);
    const auto base = load_aligned_fluxes(baseline, d);
    const auto eff = load_aligned_fluxes(effects, d);
    std::vector<FluxSet> corrected;
    corrected.reserve(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      try {
        corrected.push_back(apply_correction(base[i], eff[i], d.profiles[i].grid, c));
      } catch (const InvalidInput& e) {
        throw FormatError(effects + ": id '" + d.ids[i] + "'", e.what());
      }
    }
    write_flux_file(out, d.ids, corrected);
    std::cout << "correct: " << corrected.size() << " profiles\n";
  }
};

struct EvalCmd {
  std::unique_ptr<Settings> settings;
  std::string profiles, truth, pred, model, out, levels_csv;

  void setup(CLI::App* app) {
    json d = {{"subset", "all"}};
    d.update(consts_defaults());
    settings = std::make_unique<Settings>(app, d);
    app->add_option("--profiles", profiles, "profile JSONL")->required();
    app->add_option("--truth", truth, "reference effect flux JSONL")->required();
    app->add_option("--pred", pred, "emulated effect flux JSONL")->required();
    app->add_option("--model", model, "model file whose recorded split selects the subset");
    app->add_option("--out", out, "report JSON")->required();
    app->add_option("--levels-csv", levels_csv, "per-level statistics CSV");
  }

  std::vector<std::size_t> subset_rows(const Dataset& d, const std::string& subset) {
    std::vector<std::size_t> rows;
    if (subset == "all") {
      for (std::size_t i = 0; i < d.ids.size(); ++i) rows.push_back(i);
      return rows;
    }
    if (model.empty()) throw UsageError("subset '" + subset + "' needs --model");
    const MlpModel m = io::read_model(model);
    const std::vector<std::string>* ids = nullptr;
    if (subset == "train") ids = &m.training.train_ids;
    else if (subset == "val") ids = &m.training.val_ids;
    else if (subset == "test") ids = &m.training.test_ids;
    else throw UsageError("subset must be all, train, val or test");
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < d.ids.size(); ++i) index.emplace(d.ids[i], i);
    for (const auto& id : *ids) {
      const auto it = index.find(id);
      if (it == index.end()) throw FormatError(model, "split id '" + id + "' not in " + profiles);
      rows.push_back(it->second);
    }
    if (rows.empty()) throw FormatError(model, "subset '" + subset + "' is empty");
    return rows;
  }

  void run() {
    const json& s = settings->resolve();
    const PhysConsts c = consts_from(s);
    const Dataset d = load_profiles(profiles);
    auto t = load_aligned_fluxes(truth, d);
    auto p = load_aligned_fluxes(pred, d);
    const auto rows = subset_rows(d, s.at("subset").get<std::string>());

    const std::size_t n_hl = d.profiles[rows.front()].grid.n_hl();
    for (std::size_t r : rows) {
      if (d.profiles[r].grid.n_hl() != n_hl) throw FormatError(profiles, "eval needs a common level count");
      for (FluxSet* f : {&t[r], &p[r]}) {
        if (f->heat.empty()) f->heat = compute_heating_rates(f->net(), d.profiles[r].grid, c);
      }
    }
    const bool direct = t[rows.front()].direct_down.has_value() && p[rows.front()].direct_down.has_value();

    struct Quantity {
      std::string name;
      std::function<const Profile1D&(const FluxSet&)> get;
      double scale;
    };
    std::vector<Quantity> quantities = {
        {"down", [](const FluxSet& f) -> const Profile1D& { return f.down; }, 1.0},
        {"up", [](const FluxSet& f) -> const Profile1D& { return f.up; }, 1.0},
        {"heat_K_per_day", [](const FluxSet& f) -> const Profile1D& { return f.heat; }, kSecondsPerDay}};
    if (direct) {
      quantities.push_back(
          {"direct_down", [](const FluxSet& f) -> const Profile1D& { return *f.direct_down; }, 1.0});
    }

    json report = {{"profiles", rows.size()}, {"settings", s}, {"quantities", json::object()}};
    std::ostringstream csv;
    csv.precision(17);
    csv << "quantity,level,mean_signal,mean_error,mabs_error,p05,p25,p75,p95\n";
    Matrix all_sig, all_pred;  // fluxes pooled for the headline number
    for (const auto& q : quantities) {
      const auto cols = static_cast<Eigen::Index>(q.get(t[rows.front()]).size());
      Matrix sig(static_cast<Eigen::Index>(rows.size()), cols), prd(sig.rows(), cols);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const Profile1D& a = q.get(t[rows[k]]);
        const Profile1D& b = q.get(p[rows[k]]);
        if (static_cast<Eigen::Index>(a.size()) != cols || static_cast<Eigen::Index>(b.size()) != cols) {
          throw FormatError(pred, "id '" + d.ids[rows[k]] + "': " + q.name + " length mismatch");
        }
        for (Eigen::Index j = 0; j < cols; ++j) {
          sig(static_cast<Eigen::Index>(k), j) = a[static_cast<std::size_t>(j)] * q.scale;
          prd(static_cast<Eigen::Index>(k), j) = b[static_cast<std::size_t>(j)] * q.scale;
        }
      }
      report["quantities"][q.name] = io::bulk_stats_to_json(bulk_stats(sig, prd));
      if ((q.name == "down" || q.name == "up") && all_sig.size() == 0) {
        all_sig = sig;
        all_pred = prd;
      } else if (q.name == "down" || q.name == "up") {
        Matrix s2(sig.rows(), all_sig.cols() + cols), p2(sig.rows(), all_sig.cols() + cols);
        s2 << all_sig, sig;
        p2 << all_pred, prd;
        all_sig = std::move(s2);
        all_pred = std::move(p2);
      }
      const LevelStats l = per_level_stats(sig, prd);
      for (std::size_t j = 0; j < l.mean_signal.size(); ++j) {
        csv << q.name << ',' << j << ',' << l.mean_signal[j] << ',' << l.mean_error[j] << ','
            << l.mabs_error[j] << ',' << l.band90[j].lo << ',' << l.band50[j].lo << ','
            << l.band50[j].hi << ',' << l.band90[j].hi << '\n';
      }
    }
    report["fluxes_pooled"] = io::bulk_stats_to_json(bulk_stats(all_sig, all_pred));
    write_json(out, report);
    if (!levels_csv.empty()) io::write_atomic(levels_csv, csv.str());
    const auto& pooled = report["fluxes_pooled"];
    std::cout << "eval: " << rows.size() << " profiles, flux MAE " << pooled["mabs_error"].get<double>()
              << " W m-2 (" << pooled["mabs_pct_error"].dump() << " % of mean |signal|)\n";
  }
};

struct BenchCmd {
  std::unique_ptr<Settings> settings;
  std::string lw_model, sw_model, profiles, out;

  void setup(CLI::App* app) {
    settings = std::make_unique<Settings>(
        app, json{{"repeats", 3}, {"warmup", 1}, {"replication", 10}, {"threads", default_threads()}});
    app->add_option("--lw-model", lw_model, "longwave model file")->required();
    app->add_option("--sw-model", sw_model, "shortwave model file")->required();
    app->add_option("--profiles", profiles, "profile JSONL")->required();
    app->add_option("--out", out, "report JSON");
  }

  void run() {
    const json& s = settings->resolve();
    const unsigned threads = threads_from(s);
    const int repeats = s.at("repeats").get<int>();
    const long long replication = s.at("replication").get<long long>();
    if (replication < 1) throw UsageError("replication must be >= 1");
    const MlpModel lw = io::read_model(lw_model);
    const MlpModel sw = io::read_model(sw_model);
    const Dataset d = load_profiles(profiles);
    std::vector<AtmosphericProfile> batch;
    batch.reserve(d.profiles.size() * static_cast<std::size_t>(replication));
    for (long long r = 0; r < replication; ++r) batch.insert(batch.end(), d.profiles.begin(), d.profiles.end());

    std::vector<EffectTargets> lw_t, sw_t;
    std::vector<FluxSet> lw_f(batch.size()), sw_f(batch.size());
    const std::vector<BenchStage> stages = {
        {"inference", [&] {
           lw_t = predict_targets(lw, batch, threads);
           sw_t = predict_targets(sw, batch, threads);
         }},
        {"postprocess", [&] {
           for (std::size_t i = 0; i < batch.size(); ++i) {
             lw_f[i] = effects_to_full_grid(lw_t[i], batch[i], lw.constants);
             sw_f[i] = effects_to_full_grid(sw_t[i], batch[i], sw.constants);
           }
         }}};
    const BenchReport r = bench(stages, batch.size(), repeats, static_cast<std::size_t>(replication),
                                s.at("warmup").get<int>());
    json j = io::bench_report_to_json(r);
    j["settings"] = s;
    j["hardware"] = {{"cpu", hardware_description()},
                     {"hardware_concurrency", std::thread::hardware_concurrency()},
                     {"threads", threads}};
    j["models"] = {{"lw_hidden", lw.network.hidden_widths()}, {"sw_hidden", sw.network.hidden_widths()}};
    if (!out.empty()) write_json(out, j);
    std::cout << "bench: " << r.summary() << " (" << batch.size() << " profiles x " << repeats
              << " repeats)\n";
  }
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emulate 3D cloud radiative effects with small neural networks"};
  app.require_subcommand(1);

  SynthCmd synth;
  AugmentCmd augment;
  TrainCmd train;
  GridSearchCmd grid;
  PredictCmd predict;
  CorrectCmd correct;
  EvalCmd eval;
  BenchCmd benchc;
  std::vector<std::pair<CLI::App*, std::function<void()>>> commands;
  const auto add = [&](auto& cmd, const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    cmd.setup(sub);
    commands.emplace_back(sub, [&cmd] { cmd.run(); });
  };
  add(synth, "synth", "generate synthetic profiles and toy-truth 3D effects");
  add(augment, "augment", "enlarge a profile set by re-drawing albedo and mu0");
  add(train, "train", "train an emulator for one component");
  add(grid, "grid-search", "hyperparameter grid search with repeated seeds");
  add(predict, "predict", "emulate 3D effects on the full grid");
  add(correct, "correct", "add 3D effects to baseline fluxes");
  add(eval, "eval", "error statistics of emulated against reference effects");
  add(benchc, "bench", "normalized runtime of inference and postprocessing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return 2;
  }

  for (auto& [sub, run] : commands) {
    if (!sub->parsed()) continue;
    try {
      run();
      return 0;
    } catch (const FormatError& e) {
      std::cerr << "error: " << one_line(e.what()) << "\n";
    } catch (const std::exception& e) {
      std::cerr << "error: " << sub->get_name() << ": " << one_line(e.what()) << "\n";
    }
    return 1;
  }
  return 1;
}
