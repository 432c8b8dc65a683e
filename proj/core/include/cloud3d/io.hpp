#pragma once

// File formats.
//
// Profiles and fluxes are JSON Lines, one record per profile, arrays running
// from the top of the atmosphere to the surface:
//   profile: {"id", "p_hl", "T", "f_c", "q_l", "q_i", "r_l", "r_i", ["q"],
//             "T_s", "alpha", "mu0"}
//   fluxes:  {"id", "up", "down", ["direct_down"], ["heat"]}
// The model is one JSON document (see model_to_json). Numbers are written in
// shortest round-trip decimal form, so every double survives a reload.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cloud3d/column.hpp"
#include "cloud3d/evalbench.hpp"
#include "cloud3d/grid_search.hpp"
#include "cloud3d/pipeline.hpp"

namespace cloud3d::io {

inline constexpr int kModelFormatVersion = 1;

struct ProfileRecord {
  std::string id;
  AtmosphericProfile profile;
};

struct FluxRecord {
  std::string id;
  FluxSet fluxes;
};

nlohmann::json profile_to_json(const ProfileRecord& rec);
/// `locus` names the record in error messages ("file:line").
ProfileRecord profile_from_json(const nlohmann::json& j, const std::string& locus);

nlohmann::json fluxes_to_json(const FluxRecord& rec, bool with_heat = true);
FluxRecord fluxes_from_json(const nlohmann::json& j, const std::string& locus);

std::vector<ProfileRecord> read_profiles(const std::filesystem::path& path);
void write_profiles(const std::filesystem::path& path, const std::vector<ProfileRecord>& recs);

std::vector<FluxRecord> read_fluxes(const std::filesystem::path& path);
void write_fluxes(const std::filesystem::path& path, const std::vector<FluxRecord>& recs,
                  bool with_heat = true);

nlohmann::json model_to_json(const MlpModel& model);
MlpModel model_from_json(const nlohmann::json& j, const std::string& locus);
MlpModel read_model(const std::filesystem::path& path);
void write_model(const std::filesystem::path& path, const MlpModel& model);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
/// Overlays keys present in `j` onto `cfg`; unknown keys are rejected.
void apply_train_config(const nlohmann::json& j, TrainConfig& cfg, const std::string& locus);

nlohmann::json consts_to_json(const PhysConsts& c);
void apply_consts(const nlohmann::json& j, PhysConsts& c, const std::string& locus);

nlohmann::json grid_report_to_json(const GridReport& report);
nlohmann::json bulk_stats_to_json(const BulkStats& s);
nlohmann::json bench_report_to_json(const BenchReport& r);

nlohmann::json read_json(const std::filesystem::path& path);

/// Writes to a temporary sibling, then renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace cloud3d::io
