// heart4d: 4D whole-heart surface fitting against multi-view contour
// supervision. Subcommands: synth, fit, eval, gradcheck.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "heart4d/dataset.hpp"
#include "heart4d/metrics.hpp"
#include "heart4d/parallel.hpp"

namespace fs = std::filesystem;
using namespace heart4d;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitTolerance = 3;

std::map<std::string, std::string> parse_overrides(
    const std::vector<std::string>& sets) {
  std::map<std::string, std::string> overrides;
  for (const std::string& kv : sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError("--set expects key=value, got '" + kv + "'");
    overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return overrides;
}

// Configs come from an optional JSON file plus flat --set overrides;
// absent file means defaults. Routed through a temp echo so both paths
// share the same parser.
SynthConfig resolve_synth_config(const std::string& config_path,
                                 const std::vector<std::string>& sets) {
  const auto overrides = parse_overrides(sets);
  if (!config_path.empty()) return synth_config_from_json(config_path, overrides);
  SynthConfig defaults;
  const std::string echo = synth_config_to_json(defaults);
  const std::string tmp =
      (fs::temp_directory_path() / "heart4d_synth_defaults.json").string();
  std::ofstream(tmp) << echo;
  return synth_config_from_json(tmp, overrides);
}

FitConfig resolve_fit_config(const std::string& config_path,
                             const std::vector<std::string>& sets) {
  const auto overrides = parse_overrides(sets);
  if (!config_path.empty()) return fit_config_from_json(config_path, overrides);
  FitConfig defaults;
  const std::string echo = fit_config_to_json(defaults);
  const std::string tmp =
      (fs::temp_directory_path() / "heart4d_fit_defaults.json").string();
  std::ofstream(tmp) << echo;
  return fit_config_from_json(tmp, overrides);
}

void checksum_dataset_inputs(const std::string& dir, bool with_meshes,
                             RunManifest& manifest) {
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel =
        fs::relative(entry.path(), fs::path(dir)).string();
    if (!with_meshes && rel.rfind("meshes/", 0) == 0) continue;
    if (rel == "manifest.json") continue;
    manifest.input_checksums[rel] = file_checksum(entry.path().string());
  }
}

int cmd_synth(const std::string& config_path,
              const std::vector<std::string>& sets, const std::string& out_dir,
              int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const SynthConfig config = resolve_synth_config(config_path, sets);
  (void)threads;  // generation is deterministic and cheap; kept serial

  const MeshSequence heart = generate_heart(config);
  const auto overlaps = component_overlaps(heart.frame_mesh(0));
  for (const auto& [a, b] : overlaps)
    std::cerr << "warning: component " << to_string(a)
              << " overlaps component " << to_string(b) << "\n";

  const std::vector<PlaneSpec> specs = generate_plane_specs(config);
  std::vector<PlaneFrame> planes;
  for (const PlaneSpec& spec : specs)
    planes.push_back(
        plane_from_affine(spec.header, spec.view, spec.rows, spec.cols));
  const ObservationSet observations = render_ground_truth(heart, planes);

  fs::create_directories(out_dir);
  const std::vector<std::string> written =
      write_dataset(out_dir, heart, specs, observations);

  RunManifest manifest;
  manifest.subcommand = "synth";
  manifest.config_echo_json = synth_config_to_json(config);
  manifest.config_checksum = string_checksum(manifest.config_echo_json);
  if (!config_path.empty())
    manifest.input_checksums[config_path] = file_checksum(config_path);
  for (const std::string& rel : written)
    manifest.output_checksums[rel] =
        file_checksum((fs::path(out_dir) / rel).string());
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());

  std::cout << "synth: wrote " << heart.frame_count() << " frames, "
            << planes.size() << " planes, " << observations.items.size()
            << " masks to " << out_dir << "\n";
  return 0;
}

int cmd_fit(const std::string& dataset_dir, const std::string& config_path,
            const std::vector<std::string>& sets, const std::string& out_dir,
            const std::string& init_mode, int steps_flag, int threads,
            uint64_t seed_flag, bool seed_given) {
  const auto t0 = std::chrono::steady_clock::now();
  FitConfig config = resolve_fit_config(config_path, sets);
  if (steps_flag > 0) config.steps = steps_flag;
  if (seed_given) config.seed = seed_flag;
  config.threads = threads;
  config.validate();

  const bool meshes_present = fs::is_directory(fs::path(dataset_dir) / "meshes");
  const bool need_meshes = init_mode == "ground-truth-ed" || meshes_present;
  const Dataset dataset = load_dataset(dataset_dir, need_meshes);

  LabeledMesh tmpl;
  if (init_mode == "ground-truth-ed") {
    tmpl = dataset.meshes.frame_mesh(0);
  } else {
    tmpl = load_mesh(init_mode);  // path to a template OBJ
  }

  const int n_frames =
      static_cast<int>(dataset.observations.items.size() / dataset.planes.size());
  FitProblem problem = make_fit_problem(tmpl, n_frames, dataset.planes,
                                        dataset.observations);
  if (meshes_present) problem.reference = dataset.meshes;

  const FitReport report = fit(problem, config);

  fs::create_directories(fs::path(out_dir) / "meshes");
  std::vector<std::string> written;
  for (int t = 0; t < report.fitted.frame_count(); ++t) {
    const std::string rel = "meshes/f" + std::to_string(t) + ".obj";
    save_mesh(report.fitted.frame_mesh(t), (fs::path(out_dir) / rel).string());
    written.push_back(rel);
    written.push_back("meshes/f" + std::to_string(t) + ".labels");
  }
  write_trace_csv(report.trace, (fs::path(out_dir) / "trace.csv").string());
  written.push_back("trace.csv");

  {
    nlohmann::json j;
    j["initial_loss"] = report.trace.front().total;
    j["final_loss"] = report.final_loss;
    j["steps"] = config.steps;
    j["converged"] = report.converged;
    j["loss_decreased"] = report.loss_decreased;
    j["wall_seconds"] = report.wall_seconds;
    std::ofstream(fs::path(out_dir) / "fit_report.json") << j.dump(2) << "\n";
    written.push_back("fit_report.json");
  }

  RunManifest manifest;
  manifest.subcommand = "fit";
  manifest.config_echo_json = fit_config_to_json(config);
  manifest.config_checksum = string_checksum(manifest.config_echo_json);
  checksum_dataset_inputs(dataset_dir, need_meshes, manifest);
  if (!config_path.empty())
    manifest.input_checksums[config_path] = file_checksum(config_path);
  for (const std::string& rel : written) {
    if (rel == "fit_report.json") continue;  // contains wall time
    manifest.output_checksums[rel] =
        file_checksum((fs::path(out_dir) / rel).string());
  }
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());

  std::printf("fit: %d steps, loss %.6g -> %.6g (%s) in %.1f s\n",
              config.steps, report.trace.front().total, report.final_loss,
              report.converged ? "converged" : "budget exhausted",
              report.wall_seconds);
  return 0;
}

int cmd_eval(const std::string& pred_dir, const std::string& ref_dir,
             const std::string& out_csv) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ref = load_dataset(ref_dir, true);
  const MeshSequence pred = load_mesh_sequence(
      (fs::path(pred_dir) / "meshes").string(), ref.meshes.frame_count());
  if (pred.vertex_count() != ref.meshes.vertex_count())
    throw ValidationError(
        "prediction/reference vertex correspondence mismatch: " +
        std::to_string(pred.vertex_count()) + " vs " +
        std::to_string(ref.meshes.vertex_count()));

  const MetricReport report =
      evaluate(pred, ref.meshes, ref.planes, ref.observations);
  const fs::path out_path(out_csv);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_metric_csv(report, out_csv);
  const std::string volumes_csv =
      (out_path.parent_path() / "volumes.csv").string();
  write_volume_csv(pred, ref.meshes, volumes_csv);

  RunManifest manifest;
  manifest.subcommand = "eval";
  checksum_dataset_inputs(ref_dir, true, manifest);
  for (int t = 0; t < pred.frame_count(); ++t) {
    const std::string rel = "meshes/f" + std::to_string(t) + ".obj";
    manifest.input_checksums["pred:" + rel] =
        file_checksum((fs::path(pred_dir) / rel).string());
  }
  manifest.output_checksums["metrics.csv"] = file_checksum(out_csv);
  manifest.output_checksums["volumes.csv"] = file_checksum(volumes_csv);
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_manifest(manifest,
                 (out_path.parent_path() / "manifest.json").string());

  for (const auto& s : report.structures)
    std::printf("%-8s  MAE %.3f mm  MSE %.3f mm2  CD %.3f mm  HD %.3f mm  "
                "Jm %.4f\n",
                s.structure.c_str(), s.mae, s.mse, s.chamfer, s.hausdorff,
                s.jitter);
  std::printf("E_vol %.4f mL\n", report.e_vol);
  for (const auto& v : report.views) {
    if (v.mcd_mm)
      std::printf("%-6s  MCD %.3f mm  BF %.1f%%\n", v.view.c_str(), *v.mcd_mm,
                  *v.bf_percent);
    else
      std::printf("%-6s  no contours\n", v.view.c_str());
  }
  return 0;
}

int cmd_gradcheck(const std::string& dataset_dir, int n_coords, double step,
                  double rel_tol, double abs_tol, const std::string& out_csv,
                  int threads, uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset dataset = load_dataset(dataset_dir, true);
  FitConfig config;
  config.threads = threads;
  config.seed = seed;

  const LabeledMesh tmpl = dataset.meshes.frame_mesh(0);
  FitProblem problem =
      make_fit_problem(tmpl, dataset.meshes.frame_count(), dataset.planes,
                       dataset.observations);
  problem.reference = dataset.meshes;

  const GradCheckReport report = gradcheck(problem, config, n_coords, step);

  std::printf("%-6s %9s %9s %14s %14s\n", "term", "checked", "skipped",
              "max_rel_err", "max_abs_err");
  for (const TermCheck& t : report.terms)
    std::printf("%-6s %9d %9d %14.6e %14.6e\n", t.term.c_str(), t.n_checked,
                t.n_skipped, t.max_rel_error, t.max_abs_error);

  const fs::path out_path(out_csv);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  {
    std::ofstream out(out_csv);
    out << "term,n_checked,n_skipped,max_rel_error,max_abs_error\n";
    char buf[64];
    for (const TermCheck& t : report.terms) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g", t.max_rel_error,
                    t.max_abs_error);
      out << t.term << ',' << t.n_checked << ',' << t.n_skipped << ',' << buf
          << '\n';
    }
  }

  RunManifest manifest;
  manifest.subcommand = "gradcheck";
  checksum_dataset_inputs(dataset_dir, true, manifest);
  manifest.output_checksums["gradcheck.csv"] = file_checksum(out_csv);
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_manifest(manifest,
                 (out_path.parent_path() / "manifest.json").string());

  if (!report.passed(rel_tol, abs_tol)) {
    std::fprintf(stderr, "gradcheck: tolerance exceeded (rel %.1e, abs %.1e)\n",
                 rel_tol, abs_tol);
    return kExitTolerance;
  }
  std::printf("gradcheck: all terms within tolerance\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"4D whole-heart mesh fitting from multi-view contours"};
  app.require_subcommand(1);

  std::string config_path, out_dir, dataset_dir, pred_dir, ref_dir, out_csv;
  std::string init_mode = "ground-truth-ed";
  std::vector<std::string> sets;
  int threads = hardware_threads();
  int steps_flag = 0;
  int n_coords = 200;
  double fd_step = 1e-3;
  double rel_tol = 1e-4;
  double abs_tol = 1e-8;
  uint64_t seed = 0;
  bool seed_given = false;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", config_path, "SynthConfig JSON");
  synth->add_option("--out", out_dir, "output dataset directory")->required();
  synth->add_option("--set", sets, "flat config override key=value");
  synth->add_option("--threads", threads, "worker threads");

  auto* fitc = app.add_subcommand("fit", "fit a template to a dataset");
  fitc->add_option("--dataset", dataset_dir, "dataset directory")->required();
  fitc->add_option("--config", config_path, "FitConfig JSON");
  fitc->add_option("--out", out_dir, "output directory")->required();
  fitc->add_option("--init", init_mode,
                   "'ground-truth-ed' or a template OBJ path");
  fitc->add_option("--steps", steps_flag, "override optimization steps");
  fitc->add_option("--threads", threads, "worker threads");
  auto* seed_opt = fitc->add_option("--seed", seed, "override RNG seed");
  fitc->add_option("--set", sets, "flat config override key=value");

  auto* evalc = app.add_subcommand("eval", "evaluate fitted meshes");
  evalc->add_option("--pred", pred_dir, "fit output directory")->required();
  evalc->add_option("--ref", ref_dir, "reference dataset directory")
      ->required();
  evalc->add_option("--out-csv", out_csv, "metrics CSV path")->required();

  auto* gradc = app.add_subcommand("gradcheck", "finite-difference audit");
  gradc->add_option("--dataset", dataset_dir, "dataset directory")->required();
  gradc->add_option("--n-coords", n_coords, "sampled coordinates");
  gradc->add_option("--step", fd_step, "central difference step (mm)");
  gradc->add_option("--tolerance", rel_tol, "relative error tolerance");
  gradc->add_option("--abs-tolerance", abs_tol,
                    "absolute tolerance for tiny gradients");
  gradc->add_option("--out-csv", out_csv, "report CSV path");
  gradc->add_option("--threads", threads, "worker threads");
  gradc->add_option("--seed", seed, "coordinate sampling seed");

  CLI11_PARSE(app, argc, argv);
  seed_given = seed_opt->count() > 0;

  try {
    if (synth->parsed()) return cmd_synth(config_path, sets, out_dir, threads);
    if (fitc->parsed())
      return cmd_fit(dataset_dir, config_path, sets, out_dir, init_mode,
                     steps_flag, threads, seed, seed_given);
    if (evalc->parsed()) return cmd_eval(pred_dir, ref_dir, out_csv);
    if (gradc->parsed()) {
      if (out_csv.empty()) out_csv = "gradcheck.csv";
      return cmd_gradcheck(dataset_dir, n_coords, fd_step, rel_tol, abs_tol,
                           out_csv, threads, seed);
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  return 0;
}
