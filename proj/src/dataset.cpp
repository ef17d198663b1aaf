#include "heart4d/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace heart4d {

namespace fs = std::filesystem;
using nlohmann::json;

std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open for checksum: " + path);
  uint64_t hash = 1469598103934665603ULL;  // FNV-1a offset basis
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<uint8_t>(buf[i]);
      hash *= 1099511628211ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(hash));
  return hex;
}

std::string string_checksum(const std::string& bytes) {
  uint64_t hash = 1469598103934665603ULL;
  for (char ch : bytes) {
    hash ^= static_cast<uint8_t>(ch);
    hash *= 1099511628211ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(hash));
  return hex;
}

namespace {

std::string frame_basename(int t) { return "f" + std::to_string(t); }

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open JSON file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return j;
}

// Flat key=value overrides onto a flat JSON object; values parse as
// JSON scalars when possible, else as strings.
void apply_overrides(json& j,
                     const std::map<std::string, std::string>& overrides) {
  for (const auto& [key, value] : overrides) {
    if (!j.contains(key))
      throw ValidationError("config override: unknown key '" + key + "'");
    try {
      j[key] = json::parse(value);
    } catch (const json::parse_error&) {
      j[key] = value;
    }
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << text;
}

}  // namespace

std::vector<std::string> write_dataset(const std::string& dir,
                                       const MeshSequence& meshes,
                                       const std::vector<PlaneSpec>& specs,
                                       const ObservationSet& observations) {
  fs::create_directories(fs::path(dir) / "meshes");
  fs::create_directories(fs::path(dir) / "masks");
  std::vector<std::string> written;

  for (int t = 0; t < meshes.frame_count(); ++t) {
    const std::string rel = "meshes/" + frame_basename(t) + ".obj";
    save_mesh(meshes.frame_mesh(t), (fs::path(dir) / rel).string());
    written.push_back(rel);
    written.push_back("meshes/" + frame_basename(t) + ".labels");
  }

  json planes = json::array();
  for (const PlaneSpec& spec : specs) {
    json p;
    p["view"] = spec.view;
    std::vector<double> affine(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) affine[r * 4 + c] = spec.header.matrix(r, c);
    p["affine"] = affine;
    p["rows"] = spec.rows;
    p["cols"] = spec.cols;
    planes.push_back(p);
  }
  write_text((fs::path(dir) / "planes.json").string(), planes.dump(2) + "\n");
  written.push_back("planes.json");

  for (const auto& [key, obs] : observations.items) {
    const std::string rel =
        "masks/" + key.first + "_f" + std::to_string(key.second) + ".pgm";
    write_pgm(obs.mask, (fs::path(dir) / rel).string());
    written.push_back(rel);
  }
  return written;
}

namespace {

std::vector<PlaneSpec> load_plane_specs(const std::string& path) {
  const json planes = load_json_file(path);
  if (!planes.is_array() || planes.empty())
    throw ValidationError(path + ": expected a nonempty array of planes");
  std::vector<PlaneSpec> specs;
  for (size_t i = 0; i < planes.size(); ++i) {
    const json& p = planes[i];
    PlaneSpec spec;
    try {
      spec.view = p.at("view").get<std::string>();
      const auto affine = p.at("affine").get<std::vector<double>>();
      if (affine.size() != 16)
        throw ValidationError(path + ": plane " + std::to_string(i) +
                              ": affine needs 16 numbers");
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) spec.header.matrix(r, c) = affine[r * 4 + c];
      spec.rows = p.at("rows").get<int>();
      spec.cols = p.at("cols").get<int>();
    } catch (const json::exception& e) {
      throw ValidationError(path + ": plane " + std::to_string(i) + ": " +
                            e.what());
    }
    specs.push_back(spec);
  }
  return specs;
}

}  // namespace

Dataset load_dataset(const std::string& dir, bool require_meshes) {
  if (!fs::is_directory(dir))
    throw ValidationError("dataset directory not found: " + dir);

  Dataset ds;
  ds.plane_specs = load_plane_specs((fs::path(dir) / "planes.json").string());
  for (const PlaneSpec& spec : ds.plane_specs)
    ds.planes.push_back(
        plane_from_affine(spec.header, spec.view, spec.rows, spec.cols));

  // Count frames from the mask files of the first view.
  int n_frames = 0;
  while (fs::exists(fs::path(dir) / "masks" /
                    (ds.planes.front().view + "_f" + std::to_string(n_frames) +
                     ".pgm")))
    ++n_frames;
  if (n_frames == 0)
    throw ValidationError("dataset has no masks for view " +
                          ds.planes.front().view);

  // Pre-flight: enumerate every missing file before loading anything.
  std::vector<std::string> missing;
  for (const PlaneFrame& plane : ds.planes)
    for (int t = 0; t < n_frames; ++t) {
      const fs::path p = fs::path(dir) / "masks" /
                         (plane.view + "_f" + std::to_string(t) + ".pgm");
      if (!fs::exists(p)) missing.push_back(p.string());
    }
  if (require_meshes)
    for (int t = 0; t < n_frames; ++t) {
      for (const char* ext : {".obj", ".labels"}) {
        const fs::path p =
            fs::path(dir) / "meshes" / (frame_basename(t) + ext);
        if (!fs::exists(p)) missing.push_back(p.string());
      }
    }
  if (!missing.empty()) {
    std::string msg = "dataset " + dir + " is missing files:";
    for (const std::string& m : missing) msg += "\n  " + m;
    throw ValidationError(msg);
  }

  for (const PlaneFrame& plane : ds.planes)
    for (int t = 0; t < n_frames; ++t) {
      const fs::path p = fs::path(dir) / "masks" /
                         (plane.view + "_f" + std::to_string(t) + ".pgm");
      MaskGrid mask = read_pgm(p.string());
      if (mask.rows != plane.rows || mask.cols != plane.cols)
        throw ValidationError(p.string() + ": extent " +
                              std::to_string(mask.rows) + "x" +
                              std::to_string(mask.cols) +
                              " does not match plane " + plane.view);
      ds.observations.insert(make_observation(plane.view, t, std::move(mask)));
    }

  if (require_meshes)
    ds.meshes =
        load_mesh_sequence((fs::path(dir) / "meshes").string(), n_frames);
  return ds;
}

MeshSequence load_mesh_sequence(const std::string& meshes_dir, int n_frames) {
  MeshSequence seq;
  for (int t = 0; t < n_frames; ++t) {
    const std::string path =
        (fs::path(meshes_dir) / (frame_basename(t) + ".obj")).string();
    LabeledMesh mesh = load_mesh(path);
    if (t == 0) {
      seq.faces = mesh.faces;
      seq.labels = mesh.labels;
    } else if (mesh.faces != seq.faces || mesh.labels != seq.labels) {
      throw ValidationError(path +
                            ": connectivity or labels differ from frame 0 "
                            "(sequence must share one connectivity)");
    }
    seq.frames.push_back(std::move(mesh.vertices));
  }
  return seq;
}

SynthConfig synth_config_from_json(
    const std::string& path,
    const std::map<std::string, std::string>& overrides) {
  json j = load_json_file(path);
  apply_overrides(j, overrides);
  SynthConfig cfg;
  try {
    cfg.seed = j.value("seed", cfg.seed);
    cfg.frames = j.value("frames", cfg.frames);
    cfg.sax_slices = j.value("sax_slices", cfg.sax_slices);
    cfg.sax_gap = j.value("sax_gap", cfg.sax_gap);
    cfg.radius_lv = j.value("radius_lv", cfg.radius_lv);
    cfg.radius_rv = j.value("radius_rv", cfg.radius_rv);
    cfg.radius_la = j.value("radius_la", cfg.radius_la);
    cfg.radius_ra = j.value("radius_ra", cfg.radius_ra);
    cfg.myo_gap = j.value("myo_gap", cfg.myo_gap);
    cfg.myo_thickness = j.value("myo_thickness", cfg.myo_thickness);
    cfg.elongation = j.value("elongation", cfg.elongation);
    cfg.amp_lv = j.value("amp_lv", cfg.amp_lv);
    cfg.amp_rv = j.value("amp_rv", cfg.amp_rv);
    cfg.amp_la = j.value("amp_la", cfg.amp_la);
    cfg.amp_ra = j.value("amp_ra", cfg.amp_ra);
    cfg.rows = j.value("rows", cfg.rows);
    cfg.cols = j.value("cols", cfg.cols);
    cfg.spacing = j.value("spacing", cfg.spacing);
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

FitConfig fit_config_from_json(
    const std::string& path,
    const std::map<std::string, std::string>& overrides) {
  json j = load_json_file(path);
  apply_overrides(j, overrides);
  FitConfig cfg;
  try {
    cfg.lambda_mse = j.value("lambda_mse", cfg.lambda_mse);
    cfg.lambda_dr = j.value("lambda_dr", cfg.lambda_dr);
    cfg.regularizers.lambda_edge =
        j.value("lambda_edge", cfg.regularizers.lambda_edge);
    cfg.regularizers.lambda_norm =
        j.value("lambda_norm", cfg.regularizers.lambda_norm);
    cfg.regularizers.lambda_temp =
        j.value("lambda_temp", cfg.regularizers.lambda_temp);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.optimizer = j.value("optimizer", cfg.optimizer);
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.renderer.mu = j.value("mu", cfg.renderer.mu);
    cfg.renderer.window_halfwidth =
        j.value("window_halfwidth", cfg.renderer.window_halfwidth);
    cfg.renderer.window_softness =
        j.value("window_softness", cfg.renderer.window_softness);
    cfg.cyclic_temporal = j.value("cyclic_temporal", cfg.cyclic_temporal);
    cfg.threads = j.value("threads", cfg.threads);
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string synth_config_to_json(const SynthConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["frames"] = c.frames;
  j["sax_slices"] = c.sax_slices;
  j["sax_gap"] = c.sax_gap;
  j["radius_lv"] = c.radius_lv;
  j["radius_rv"] = c.radius_rv;
  j["radius_la"] = c.radius_la;
  j["radius_ra"] = c.radius_ra;
  j["myo_gap"] = c.myo_gap;
  j["myo_thickness"] = c.myo_thickness;
  j["elongation"] = c.elongation;
  j["amp_lv"] = c.amp_lv;
  j["amp_rv"] = c.amp_rv;
  j["amp_la"] = c.amp_la;
  j["amp_ra"] = c.amp_ra;
  j["rows"] = c.rows;
  j["cols"] = c.cols;
  j["spacing"] = c.spacing;
  return j.dump(2) + "\n";
}

std::string fit_config_to_json(const FitConfig& c) {
  json j;
  j["lambda_mse"] = c.lambda_mse;
  j["lambda_dr"] = c.lambda_dr;
  j["lambda_edge"] = c.regularizers.lambda_edge;
  j["lambda_norm"] = c.regularizers.lambda_norm;
  j["lambda_temp"] = c.regularizers.lambda_temp;
  j["steps"] = c.steps;
  j["learning_rate"] = c.learning_rate;
  j["optimizer"] = c.optimizer;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["seed"] = c.seed;
  j["mu"] = c.renderer.mu;
  j["window_halfwidth"] = c.renderer.window_halfwidth;
  j["window_softness"] = c.renderer.window_softness;
  j["cyclic_temporal"] = c.cyclic_temporal;
  j["threads"] = c.threads;
  return j.dump(2) + "\n";
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  json j;
  j["subcommand"] = manifest.subcommand;
  j["tool_version"] = manifest.tool_version;
  if (!manifest.config_echo_json.empty())
    j["config"] = json::parse(manifest.config_echo_json);
  j["config_checksum"] = manifest.config_checksum;
  j["input_checksums"] = manifest.input_checksums;
  j["output_checksums"] = manifest.output_checksums;
  j["wall_seconds"] = manifest.wall_seconds;
  write_text(path, j.dump(2) + "\n");
}

void write_trace_csv(const std::vector<TraceRow>& trace,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write trace CSV: " + path);
  out << "step,total,mse,dr,edge,norm,temp\n";
  char buf[64];
  auto fmt = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  for (const TraceRow& row : trace) {
    out << row.step << ',' << fmt(row.total) << ','
        << (row.mse ? fmt(*row.mse) : "na") << ',' << fmt(row.dr) << ','
        << fmt(row.edge) << ',' << fmt(row.norm) << ',' << fmt(row.temp)
        << '\n';
  }
}

}  // namespace heart4d
