#pragma once

#include <map>
#include <string>
#include <vector>

#include "heart4d/raster.hpp"

namespace heart4d {

/// Differentiable-rendering knobs. `mu` is the sharpness of the
/// distance-to-probability mapping; the sigmoid window has midpoint
/// `window_halfwidth` (mm) and softness `window_softness` (mm).
struct RendererConfig {
  double mu = 8.0;
  double window_halfwidth = 5.0;  // half the default SAX slice gap
  double window_softness = 1.0;

  void validate() const;
};

/// Per-view aggregation of projected vertex probabilities, in [0, 1).
struct ProbabilityMap {
  std::string view;
  RealGrid values;
};

/// Ground-truth mask for one (view, frame) plus its precomputed signed
/// distance map (negative inside, zero on boundary pixels, px units).
struct ViewObservation {
  std::string view;
  int frame = 0;
  MaskGrid mask;
  RealGrid sdm;
};

ViewObservation make_observation(const std::string& view, int frame,
                                 MaskGrid mask);

/// Observations keyed by (view, frame).
struct ObservationSet {
  std::map<std::pair<std::string, int>, ViewObservation> items;

  void insert(ViewObservation obs);
  const ViewObservation* find(const std::string& view, int frame) const;
  const ViewObservation& require(const std::string& view, int frame) const;
};

/// Falling sigmoid window 1 / (1 + exp((R - h) / tau)); 0.5 at R = h,
/// monotone decreasing, exponent clamped against overflow.
double sigmoid_window(double distance, const RendererConfig& config);

/// Beer-Lambert association probability q = 1 - exp(-mu * l(R)).
double association_probability(double distance, const RendererConfig& config);

/// Vertices with q above this cutoff participate in splatting.
constexpr double kAssociationCutoff = 1e-6;

/// Distance beyond which q <= kAssociationCutoff (early-out radius).
double association_cutoff_radius(const RendererConfig& config);

/// Bilinear splat of per-vertex association probabilities with
/// probabilistic-OR aggregation: Q(p) = 1 - prod_i (1 - w_i(p) q_i).
/// Out-of-extent projections contribute nothing.
ProbabilityMap splat_probability_map(const std::vector<Vec3>& vertices,
                                     const PlaneFrame& plane,
                                     const RendererConfig& config);

/// Boundary-constraint loss: sum_p sdm(p) * Q(p) / (rows * cols).
double boundary_loss(const ProbabilityMap& q, const ViewObservation& obs);

/// L_B for one plane plus its analytic gradient with respect to the
/// vertex positions, accumulated into `grad` (same length as vertices).
double boundary_loss_with_gradient(const std::vector<Vec3>& vertices,
                                   const PlaneFrame& plane,
                                   const ViewObservation& obs,
                                   const RendererConfig& config,
                                   std::vector<Vec3>& grad);

struct RenderLossResult {
  double loss = 0.0;
  std::vector<std::vector<Vec3>> gradient;  // N x V x 3
};

/// Mean over frames of the per-frame sum over planes of L_B, with the
/// full analytic gradient. Requires one observation per (plane, frame).
/// Per-frame work may run on `threads` workers; reduction order is
/// fixed, so results do not depend on the thread count.
RenderLossResult render_loss(const MeshSequence& sequence,
                             const std::vector<PlaneFrame>& planes,
                             const ObservationSet& observations,
                             const RendererConfig& config, int threads = 1);

/// Single-frame variant: sum over planes of L_B and its gradient.
double frame_render_loss(const std::vector<Vec3>& vertices, int frame,
                         const std::vector<PlaneFrame>& planes,
                         const ObservationSet& observations,
                         const RendererConfig& config,
                         std::vector<Vec3>* grad = nullptr);

}  // namespace heart4d
