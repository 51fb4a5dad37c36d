#pragma once

// On-disk formats: key=value case configs, CSV field snapshots with a
// metadata sidecar, binary parameter checkpoints and run manifests.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "grinn/fd_reference.hpp"
#include "grinn/grinn_model.hpp"
#include "grinn/units_domain.hpp"

namespace grinn {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses "key = value" lines; '#' starts a comment. Throws Error(parse)
/// with the line number on malformed lines.
KeyValues parse_key_values(std::string_view text);

/// Applies overrides to `config` in order. A "case" key resets the config
/// to that case's defaults first. Throws Error(parse) naming unknown keys
/// or malformed values. Does not validate.
void apply_overrides(CaseConfig& config, const KeyValues& values);

/// Case defaults, then file values, then flag values; validated.
CaseConfig resolve_config(const KeyValues& file_values, const KeyValues& flag_values);
CaseConfig parse_config(std::string_view text);
CaseConfig read_config(const std::filesystem::path& path);

/// Every key, doubles at 17 significant digits; parse_config inverts it.
std::string serialize_config(const CaseConfig& config);

/// Point table with optional grid metadata.
struct Snapshot {
  int dimension = 1;
  std::vector<SpaceTimePoint> points;
  std::vector<double> rho;
  std::array<std::vector<double>, 3> v;
  std::vector<double> phi;
  /// Grid description for the sidecar (shape 0 when the points are scattered).
  Shape shape{0, 0, 0};
  Vec3 spacing{0.0, 0.0, 0.0};
  UnitSystem units;
  std::string case_id;
};

Snapshot snapshot_from_state(const FieldState& state, const UnitSystem& units,
                             std::string case_id);
Snapshot snapshot_from_prediction(std::span<const SpaceTimePoint> points,
                                  const Prediction& prediction, const UnitSystem& units,
                                  std::string case_id);

/// Writes `path` (header x,y,z,t,rho,vx,vy,vz,phi minus absent axes) and
/// `path` + ".meta". Throws Error(io).
void write_snapshot(const Snapshot& snapshot, const std::filesystem::path& path);
Snapshot read_snapshot(const std::filesystem::path& path);

struct Checkpoint {
  NetworkParams params;
  std::uint64_t seed = 0;
};

/// Text header describing the network and seed, terminated by "end", then
/// the raw little-endian float64 parameters.
void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params,
                     std::uint64_t seed);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Checkpoint plus the case config next to it (`stem`.ckpt and `stem`.cfg).
void save_model(const std::filesystem::path& stem, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& stem, const UnitSystem& units = {});

struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  CaseConfig config;
  std::uint64_t seed = 0;
  std::uint64_t sampling_seed = 0;
  std::uint64_t init_seed = 0;
  std::string output_dir;
  std::string version;
  std::string started_at;
};

RunManifest make_manifest(std::string command, std::vector<std::string> arguments,
                          const CaseConfig& config, std::string output_dir);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

/// $GRINN_OUTPUT_ROOT, or "runs" when unset.
std::filesystem::path default_output_root();

const char* version_string();

}  // namespace grinn
