#pragma once

#include <optional>

#include "heart4d/regularizers.hpp"
#include "heart4d/renderer.hpp"

namespace heart4d {

/// Weights and optimizer settings for the total objective
///   lambda_mse L_MSE + lambda_dr L_DR + lambda_edge L_edge
///   + lambda_norm L_norm + lambda_temp L_temp.
/// The MSE term is active only when a reference sequence exists.
struct FitConfig {
  double lambda_mse = 10.0;
  double lambda_dr = 5.0;
  RegularizerWeights regularizers;
  int steps = 2000;
  double learning_rate = 0.05;  // mm scale
  std::string optimizer = "adam";
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  uint64_t seed = 0;
  RendererConfig renderer;
  bool cyclic_temporal = true;
  int threads = 1;

  void validate() const;
};

/// Template sequence + supervision + precomputed connectivity caches.
struct FitProblem {
  MeshSequence init;
  EdgeList edges;                           // rest lengths from template
  std::vector<std::array<int, 2>> face_pairs;
  std::vector<PlaneFrame> planes;
  ObservationSet observations;
  std::optional<MeshSequence> reference;
};

/// Builds the problem caches from a template mesh. The template defines
/// rest edge lengths; the initial sequence repeats it n_frames times.
FitProblem make_fit_problem(const LabeledMesh& tmpl, int n_frames,
                            std::vector<PlaneFrame> planes,
                            ObservationSet observations);

/// Per-coordinate mean squared error over frames, vertices and the 3
/// coordinates; gradient is 2 (pred - ref) / (N V 3).
SeqLossGrad mse_loss(const MeshSequence& pred, const MeshSequence& ref);

/// Unweighted per-term losses. `mse` is absent (not zero) when no
/// reference sequence exists.
struct LossBreakdown {
  std::optional<double> mse;
  double dr = 0.0;
  double edge = 0.0;
  double norm = 0.0;
  double temp = 0.0;

  double weighted_total(const FitConfig& config) const;
};

struct TotalLossResult {
  double total = 0.0;
  LossBreakdown breakdown;
  std::vector<std::vector<Vec3>> gradient;  // N x V x 3
};

/// Weighted objective and its gradient. Edge/normal/DR terms are means
/// over frames so the lambdas stay frame-count independent.
TotalLossResult total_loss(const MeshSequence& pred, const FitProblem& problem,
                           const FitConfig& config);

struct TraceRow {
  int step = 0;
  double total = 0.0;
  std::optional<double> mse;
  double dr = 0.0;
  double edge = 0.0;
  double norm = 0.0;
  double temp = 0.0;
};

struct FitReport {
  std::vector<TraceRow> trace;  // loss at each step, before the update
  MeshSequence fitted;
  double final_loss = 0.0;      // after the last update
  double wall_seconds = 0.0;
  bool converged = false;       // relative change < 1e-6 over 50 steps
  bool loss_decreased = false;  // final_loss < trace.front().total
};

/// Adam descent on the per-frame, per-vertex displacement field from
/// the initial sequence. Deterministic given config and inputs,
/// independent of the thread count. Aborts with NumericalError (step
/// index and offending term) on any non-finite loss or gradient.
FitReport fit(const FitProblem& problem, const FitConfig& config);

struct TermCheck {
  std::string term;
  int n_checked = 0;
  int n_skipped = 0;         // sampled at a non-smooth point and redrawn
  double max_rel_error = 0.0;  // over coords with |analytic| >= 1e-10
  double max_abs_error = 0.0;  // over coords with |analytic| < 1e-10
};

struct GradCheckReport {
  std::vector<TermCheck> terms;
  bool passed(double rel_tol, double abs_tol) const;
};

/// Central-difference check of every analytic term gradient at the
/// problem's initial sequence, over n_coords randomly sampled
/// coordinates. Coordinates where the rendering loss is locally
/// non-smooth (|n.(v-c)| kink, association cutoff, bilinear cell
/// boundaries) are redrawn: central differences are only meaningful
/// where the objective is C1 within the probe step.
GradCheckReport gradcheck(const FitProblem& problem, const FitConfig& config,
                          int n_coords, double step);

}  // namespace heart4d
