#include "cloud3d/io.hpp"

#include <fstream>
#include <sstream>
#include <unistd.h>

#include "cloud3d/error.hpp"

namespace cloud3d::io {
namespace {

using nlohmann::json;

const json& field(const json& j, const char* key, const std::string& locus) {
  const auto it = j.find(key);
  if (it == j.end()) throw FormatError(locus, std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& j, const char* key, const std::string& locus) {
  const json& v = field(j, key, locus);
  if (!v.is_number()) throw FormatError(locus, std::string("field '") + key + "' is not a number");
  return v.get<double>();
}

Profile1D array(const json& j, const char* key, const std::string& locus) {
  const json& v = field(j, key, locus);
  if (!v.is_array()) throw FormatError(locus, std::string("field '") + key + "' is not an array");
  Profile1D out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw FormatError(locus, std::string("field '") + key + "' element " + std::to_string(i) +
                                   " is not a number");
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::optional<Profile1D> optional_array(const json& j, const char* key, const std::string& locus) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return array(j, key, locus);
}

std::string id_of(const json& j, const std::string& locus) {
  const json& v = field(j, "id", locus);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw FormatError(locus, "field 'id' must be a string or integer");
}

template <typename Parse>
auto read_lines(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string(), "cannot open for reading");
  std::vector<decltype(parse(json{}, std::string{}))> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string locus = path.string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(locus, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw FormatError(locus, "record is not a JSON object");
    out.push_back(parse(j, locus));
  }
  return out;
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from(const json& j, const char* key, const std::string& locus) {
  const Profile1D v = array(j, key, locus);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json normalization_json(const Normalization& n) {
  return {{"mean", vector_json(n.mean)}, {"scale", vector_json(n.scale)}};
}

Normalization normalization_from(const json& j, const std::string& locus) {
  Normalization n{vector_from(j, "mean", locus), vector_from(j, "scale", locus)};
  if (n.mean.size() != n.scale.size()) throw FormatError(locus, "normalization lengths differ");
  return n;
}

std::vector<std::string> ids_from(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::vector<std::string>>();
}

}  // namespace

json profile_to_json(const ProfileRecord& rec) {
  const AtmosphericProfile& p = rec.profile;
  json j = {{"id", rec.id},
            {"p_hl", p.grid.p_hl()},
            {"T", p.temperature},
            {"f_c", p.cloud_fraction},
            {"q_l", p.q_liquid},
            {"q_i", p.q_ice},
            {"r_l", p.r_liquid},
            {"r_i", p.r_ice}};
  if (p.humidity) j["q"] = *p.humidity;
  j["T_s"] = p.skin_temperature;
  j["alpha"] = p.albedo;
  j["mu0"] = p.mu0;
  return j;
}

ProfileRecord profile_from_json(const json& j, const std::string& locus) {
  ProfileRecord rec;
  rec.id = id_of(j, locus);
  AtmosphericProfile& p = rec.profile;
  try {
    p.grid = VerticalGrid(array(j, "p_hl", locus));
    p.temperature = array(j, "T", locus);
    p.cloud_fraction = array(j, "f_c", locus);
    p.q_liquid = array(j, "q_l", locus);
    p.q_ice = array(j, "q_i", locus);
    p.r_liquid = array(j, "r_l", locus);
    p.r_ice = array(j, "r_i", locus);
    p.humidity = optional_array(j, "q", locus);
    p.skin_temperature = number(j, "T_s", locus);
    p.albedo = number(j, "alpha", locus);
    p.mu0 = number(j, "mu0", locus);
    p.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(locus, e.what());
  }
  return rec;
}

json fluxes_to_json(const FluxRecord& rec, bool with_heat) {
  json j = {{"id", rec.id}, {"up", rec.fluxes.up}, {"down", rec.fluxes.down}};
  if (rec.fluxes.direct_down) j["direct_down"] = *rec.fluxes.direct_down;
  if (with_heat) j["heat"] = rec.fluxes.heat;
  return j;
}

FluxRecord fluxes_from_json(const json& j, const std::string& locus) {
  FluxRecord rec;
  rec.id = id_of(j, locus);
  rec.fluxes.up = array(j, "up", locus);
  rec.fluxes.down = array(j, "down", locus);
  rec.fluxes.direct_down = optional_array(j, "direct_down", locus);
  if (auto heat = optional_array(j, "heat", locus)) rec.fluxes.heat = std::move(*heat);
  if (rec.fluxes.up.size() != rec.fluxes.down.size()) {
    throw FormatError(locus, "'up' and 'down' lengths differ");
  }
  if (rec.fluxes.direct_down && rec.fluxes.direct_down->size() != rec.fluxes.up.size()) {
    throw FormatError(locus, "'direct_down' length differs from 'up'");
  }
  return rec;
}

std::vector<ProfileRecord> read_profiles(const std::filesystem::path& path) {
  return read_lines(path, profile_from_json);
}

std::vector<FluxRecord> read_fluxes(const std::filesystem::path& path) {
  return read_lines(path, fluxes_from_json);
}

void write_profiles(const std::filesystem::path& path, const std::vector<ProfileRecord>& recs) {
  std::string out;
  for (const auto& r : recs) {
    out += profile_to_json(r).dump();
    out += '\n';
  }
  write_atomic(path, out);
}

void write_fluxes(const std::filesystem::path& path, const std::vector<FluxRecord>& recs,
                  bool with_heat) {
  std::string out;
  for (const auto& r : recs) {
    out += fluxes_to_json(r, with_heat).dump();
    out += '\n';
  }
  write_atomic(path, out);
}

json train_config_to_json(const TrainConfig& cfg) {
  return {{"max_epochs", cfg.max_epochs},
          {"patience", cfg.patience},
          {"l1", cfg.l1},
          {"l2", cfg.l2},
          {"learning_rate", cfg.adam.learning_rate},
          {"beta1", cfg.adam.beta1},
          {"beta2", cfg.adam.beta2},
          {"epsilon", cfg.adam.epsilon},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed}};
}

void apply_train_config(const json& j, TrainConfig& cfg, const std::string& locus) {
  if (!j.is_object()) throw FormatError(locus, "training config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "max_epochs") cfg.max_epochs = value.get<int>();
      else if (key == "patience") cfg.patience = value.get<int>();
      else if (key == "l1") cfg.l1 = value.get<double>();
      else if (key == "l2") cfg.l2 = value.get<double>();
      else if (key == "learning_rate") cfg.adam.learning_rate = value.get<double>();
      else if (key == "beta1") cfg.adam.beta1 = value.get<double>();
      else if (key == "beta2") cfg.adam.beta2 = value.get<double>();
      else if (key == "epsilon") cfg.adam.epsilon = value.get<double>();
      else if (key == "batch_size") cfg.batch_size = value.get<std::size_t>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else throw FormatError(locus, "unknown training key '" + key + "'");
    } catch (const json::exception& e) {
      throw FormatError(locus, "bad value for '" + key + "': " + e.what());
    }
  }
}

json consts_to_json(const PhysConsts& c) {
  return {{"g", c.g}, {"c_p", c.c_p}, {"rho_l", c.rho_l}, {"rho_i", c.rho_i},
          {"p_trunc", c.p_trunc}};
}

void apply_consts(const json& j, PhysConsts& c, const std::string& locus) {
  if (!j.is_object()) throw FormatError(locus, "constants must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) throw FormatError(locus, "constant '" + key + "' is not a number");
    const double v = value.get<double>();
    if (key == "g") c.g = v;
    else if (key == "c_p") c.c_p = v;
    else if (key == "rho_l") c.rho_l = v;
    else if (key == "rho_i") c.rho_i = v;
    else if (key == "p_trunc") c.p_trunc = v;
    else throw FormatError(locus, "unknown constant '" + key + "'");
  }
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(locus, e.what());
  }
}

json model_to_json(const MlpModel& model) {
  json schema = {{"component", std::string(to_string(model.schema.component()))},
                 {"n_fl_window", model.schema.n_fl_window()},
                 {"n_hl_window", model.schema.n_hl_window()},
                 {"with_humidity", model.schema.with_humidity()},
                 {"with_thickness", model.schema.with_thickness()},
                 {"input_len", model.schema.input_len()},
                 {"output_len", model.schema.output_len()}};
  json blocks_in = json::array();
  for (const auto& b : model.schema.inputs()) blocks_in.push_back({{"name", b.name}, {"length", b.length}});
  json blocks_out = json::array();
  for (const auto& b : model.schema.outputs()) blocks_out.push_back({{"name", b.name}, {"length", b.length}});
  schema["inputs"] = blocks_in;
  schema["outputs"] = blocks_out;

  json layers = json::array();
  for (std::size_t k = 0; k < model.network.layers().size(); ++k) {
    const Layer& l = model.network.layers()[k];
    const auto& w = l.weights;
    layers.push_back({{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"activation", k + 1 < model.network.layers().size() ? "elu" : "linear"},
                      {"w_rowmajor", std::vector<double>(w.data(), w.data() + w.size())},
                      {"b", vector_json(l.bias)}});
  }

  const TrainingRecord& t = model.training;
  json training = {{"seed", t.seed},
                   {"epochs", t.epochs},
                   {"best_epoch", t.best_epoch},
                   {"val_loss", t.val_loss},
                   {"config", train_config_to_json(t.config)},
                   {"split", {{"train", t.train_ids}, {"val", t.val_ids}, {"test", t.test_ids}}}};

  return {{"format_version", kModelFormatVersion},
          {"component", std::string(to_string(model.schema.component()))},
          {"schema", schema},
          {"normalization",
           {{"in", normalization_json(model.input_norm)},
            {"out", normalization_json(model.output_norm)}}},
          {"layers", layers},
          {"training", training},
          {"constants", consts_to_json(model.constants)}};
}

MlpModel model_from_json(const json& j, const std::string& locus) {
  if (!j.is_object()) throw FormatError(locus, "model is not a JSON object");
  const int version = field(j, "format_version", locus).get<int>();
  if (version != kModelFormatVersion) {
    throw FormatError(locus, "unsupported format_version " + std::to_string(version));
  }
  MlpModel m;
  try {
    const json& s = field(j, "schema", locus);
    const Component c = component_from_string(field(s, "component", locus).get<std::string>());
    m.schema = FeatureSchema(c, field(s, "n_fl_window", locus).get<std::size_t>(),
                             s.value("with_humidity", false), s.value("with_thickness", false));
    if (s.contains("input_len") && s.at("input_len").get<std::size_t>() != m.schema.input_len()) {
      throw FormatError(locus + ":schema", "input_len disagrees with the block layout");
    }
    if (s.contains("output_len") &&
        s.at("output_len").get<std::size_t>() != m.schema.output_len()) {
      throw FormatError(locus + ":schema", "output_len disagrees with the block layout");
    }
    if (component_from_string(field(j, "component", locus).get<std::string>()) != c) {
      throw FormatError(locus, "top-level component disagrees with schema");
    }

    const json& norm = field(j, "normalization", locus);
    m.input_norm = normalization_from(field(norm, "in", locus), locus + ":normalization.in");
    m.output_norm = normalization_from(field(norm, "out", locus), locus + ":normalization.out");

    std::vector<Layer> layers;
    const json& jl = field(j, "layers", locus);
    for (std::size_t k = 0; k < jl.size(); ++k) {
      const std::string lloc = locus + ":layers[" + std::to_string(k) + "]";
      const auto rows = field(jl[k], "rows", lloc).get<Eigen::Index>();
      const auto cols = field(jl[k], "cols", lloc).get<Eigen::Index>();
      const Profile1D w = array(jl[k], "w_rowmajor", lloc);
      if (static_cast<Eigen::Index>(w.size()) != rows * cols) {
        throw FormatError(lloc, "w_rowmajor has " + std::to_string(w.size()) +
                                    " values, expected rows*cols = " + std::to_string(rows * cols));
      }
      Layer l{Eigen::Map<const Matrix>(w.data(), rows, cols), vector_from(jl[k], "b", lloc)};
      layers.push_back(std::move(l));
    }
    m.network = Network(std::move(layers));

    if (j.contains("constants")) apply_consts(j.at("constants"), m.constants, locus + ":constants");
    if (j.contains("training")) {
      const json& t = j.at("training");
      m.training.seed = t.value("seed", std::uint64_t{0});
      m.training.epochs = t.value("epochs", 0);
      m.training.best_epoch = t.value("best_epoch", -1);
      m.training.val_loss = t.value("val_loss", 0.0);
      if (t.contains("config")) apply_train_config(t.at("config"), m.training.config, locus + ":training.config");
      if (t.contains("split")) {
        m.training.train_ids = ids_from(t.at("split"), "train");
        m.training.val_ids = ids_from(t.at("split"), "val");
        m.training.test_ids = ids_from(t.at("split"), "test");
      }
    }
    m.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(locus, e.what());
  } catch (const json::exception& e) {
    throw FormatError(locus, e.what());
  }
  return m;
}

MlpModel read_model(const std::filesystem::path& path) {
  return model_from_json(read_json(path), path.string());
}

void write_model(const std::filesystem::path& path, const MlpModel& model) {
  write_atomic(path, model_to_json(model).dump() + "\n");
}

json grid_report_to_json(const GridReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row = {{"index", r.index},
                {"input_quantities", r.config.input_quantities},
                {"hidden_layers", r.config.hidden_layers},
                {"width_multiplier", r.config.width_multiplier},
                {"width", r.config.width},
                {"regularization", r.config.regularization},
                {"mae", r.mae},
                {"failures", r.failures}};
    row["mean_mae"] = r.mean_mae ? json(*r.mean_mae) : json(nullptr);
    rows.push_back(std::move(row));
  }
  json j = {{"component", std::string(to_string(report.component))},
            {"runs", report.runs},
            {"metric", "validation mean absolute error, physical units"},
            {"rows", rows}};
  j["selected"] = report.selected ? json(*report.selected) : json(nullptr);
  return j;
}

json bulk_stats_to_json(const BulkStats& s) {
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"count", s.count},
          {"mean_signal", s.mean_signal},
          {"mean_error", s.mean_error},
          {"pct_error", opt(s.pct_error)},
          {"mabs_signal", s.mabs_signal},
          {"mabs_error", s.mabs_error},
          {"mabs_pct_error", opt(s.mabs_pct_error)}};
}

json bench_report_to_json(const BenchReport& r) {
  json stages = json::array();
  for (const auto& s : r.stages) {
    stages.push_back({{"name", s.name},
                      {"mean_ms_per_profile", s.mean_ms_per_profile},
                      {"std_ms_per_profile", s.std_ms_per_profile}});
  }
  return {{"metric", "total runtime / number of profiles"},
          {"profiles_per_repeat", r.profiles},
          {"replication", r.replication},
          {"repeats", r.repeats},
          {"warmup", r.warmup},
          {"mean_ms_per_profile", r.mean_ms_per_profile},
          {"std_ms_per_profile", r.std_ms_per_profile},
          {"repeat_ms_per_profile", r.repeat_ms_per_profile},
          {"summary", r.summary()},
          {"stages", stages}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string(), "cannot open for reading");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string(), std::string("malformed JSON: ") + e.what());
  }
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(path.string(), "cannot open for writing");
    out << contents;
    out.flush();
    if (!out) throw FormatError(path.string(), "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw FormatError(path.string(), "rename failed: " + ec.message());
  }
}

}  // namespace cloud3d::io
