#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "heart4d/renderer.hpp"

namespace heart4d {

/// Per-vertex reconstruction errors between corresponding sequences:
/// MAE = mean Euclidean distance (mm), MSE = mean squared Euclidean
/// distance (mm^2), averaged over frames and the given vertex subset
/// (all vertices when empty).
struct VertexErrors {
  double mae = 0.0;
  double mse = 0.0;
};
VertexErrors vertexwise_errors(const MeshSequence& pred,
                               const MeshSequence& ref,
                               const std::vector<int>& subset = {});

/// Symmetric Chamfer distance (mean of the two directed mean
/// nearest-neighbour distances, halved) and Hausdorff distance (max of
/// the two directed maxima). Exact nearest neighbours via a k-d tree;
/// results are bit-identical to the O(n^2) scan.
struct ChamferHausdorff {
  double chamfer = 0.0;
  double hausdorff = 0.0;
};
ChamferHausdorff chamfer_hausdorff(const std::vector<Vec3>& a,
                                   const std::vector<Vec3>& b);

/// Directed exact nearest-neighbour distances from each query to the
/// target set (k-d tree accelerated, exact).
std::vector<double> nearest_distances(const std::vector<Vec3>& queries,
                                      const std::vector<Vec3>& targets);

/// Uniform arc-length resampling of a closed polyline with step <=
/// max_step (pixel units).
Polyline2 resample_closed(const Polyline2& poly, double max_step);

/// Mean contour distance (mm, symmetric mean closest-point distance;
/// spacing converts pixels to mm per axis) and boundary F-score (%) at
/// threshold_px between two pooled contour point sets. Absent when
/// either side has no contour.
struct ContourMetrics {
  double mcd_mm = 0.0;
  double bf_percent = 0.0;
};
std::optional<ContourMetrics> contour_metrics(
    const std::vector<Polyline2>& pred, const std::vector<Polyline2>& ref,
    double spacing_u, double spacing_v, double threshold_px = 1.0);

/// Mean over frames of |whole-heart volume difference| (mL).
double volume_error(const MeshSequence& pred, const MeshSequence& ref);

/// Mesh jitter: mean over vertices and frames of the Euclidean norm of
/// the third central finite difference of position (mm/frame^3).
double mesh_jitter(const MeshSequence& seq,
                   const std::vector<int>& subset = {}, bool cyclic = true);

/// Structure rows (FullMesh + per component) and view rows of the
/// evaluation protocol.
struct MetricReport {
  struct StructureRow {
    std::string structure;
    double mae = 0.0;
    double mse = 0.0;
    double chamfer = 0.0;   // averaged over frames
    double hausdorff = 0.0; // averaged over frames
    double jitter = 0.0;
  };
  struct ViewRow {
    std::string view;
    std::optional<double> mcd_mm;      // mean over frames with contours
    std::optional<double> bf_percent;
  };
  std::vector<StructureRow> structures;
  std::vector<ViewRow> views;
  double e_vol = 0.0;
};

/// Runs the full protocol: vertex errors / CD / HD / jitter per
/// structure, volume error, and MCD/BF per view (predicted mesh slices
/// against marching-squares contours of the ground-truth masks).
MetricReport evaluate(const MeshSequence& pred, const MeshSequence& ref,
                      const std::vector<PlaneFrame>& planes,
                      const ObservationSet& observations,
                      double contour_threshold_px = 1.0);

/// CSV with one row per (structure, metric) and one per (view, metric).
void write_metric_csv(const MetricReport& report, const std::string& path);

/// Per-frame per-structure volume curves for both sequences.
void write_volume_csv(const MeshSequence& pred, const MeshSequence& ref,
                      const std::string& path);

}  // namespace heart4d
