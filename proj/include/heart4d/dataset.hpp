#pragma once

#include <map>

#include "heart4d/optimizer.hpp"
#include "heart4d/synth.hpp"

namespace heart4d {

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64-bit over the file bytes, as a 16-char hex string.
std::string file_checksum(const std::string& path);

/// Same hash over an in-memory string (for config echoes).
std::string string_checksum(const std::string& bytes);

/// Dataset directory contents:
///   meshes/f<t>.obj + f<t>.labels   one mesh per frame
///   planes.json                     [{view, affine[16], rows, cols}]
///   masks/<view>_f<t>.pgm           one binary mask per (view, frame)
///   manifest.json                   config echo + content checksums
struct Dataset {
  MeshSequence meshes;
  std::vector<PlaneSpec> plane_specs;
  std::vector<PlaneFrame> planes;
  ObservationSet observations;
};

/// Writes the full dataset plus manifest; returns the relative paths
/// of everything written (for checksumming).
std::vector<std::string> write_dataset(const std::string& dir,
                                       const MeshSequence& meshes,
                                       const std::vector<PlaneSpec>& specs,
                                       const ObservationSet& observations);

/// Loads and validates a dataset directory. Missing or malformed files
/// are enumerated before any compute. `require_meshes` controls
/// whether ground-truth meshes must be present.
Dataset load_dataset(const std::string& dir, bool require_meshes = true);

/// Loads only the fitted mesh sequence from a fit output directory
/// (out_dir/meshes/f<t>.obj).
MeshSequence load_mesh_sequence(const std::string& meshes_dir, int n_frames);

SynthConfig synth_config_from_json(const std::string& path,
                                   const std::map<std::string, std::string>&
                                       overrides = {});
FitConfig fit_config_from_json(const std::string& path,
                               const std::map<std::string, std::string>&
                                   overrides = {});

/// Serialized echo of the configs (for manifests).
std::string synth_config_to_json(const SynthConfig& config);
std::string fit_config_to_json(const FitConfig& config);

/// Run manifest written by every CLI subcommand.
struct RunManifest {
  std::string subcommand;
  std::string tool_version = kToolVersion;
  std::string config_echo_json;             // canonical config echo
  std::string config_checksum;              // of the config echo string
  std::map<std::string, std::string> input_checksums;   // path -> fnv64
  std::map<std::string, std::string> output_checksums;  // path -> fnv64
  double wall_seconds = 0.0;
};

void write_manifest(const RunManifest& manifest, const std::string& path);

/// Writes the per-step loss trace CSV (step, total, mse, dr, edge,
/// norm, temp); an inactive MSE term is recorded as `na`.
void write_trace_csv(const std::vector<TraceRow>& trace,
                     const std::string& path);

}  // namespace heart4d
