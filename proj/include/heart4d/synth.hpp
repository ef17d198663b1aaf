#pragma once

#include "heart4d/renderer.hpp"

namespace heart4d {

/// Parametric beating-heart dataset: five closed components, three
/// long-axis planes through the LV long axis plus a short-axis stack,
/// and filled cross-section masks per (view, frame).
struct SynthConfig {
  uint64_t seed = 0;
  int frames = 25;
  int sax_slices = 9;
  double sax_gap = 10.0;  // mm between adjacent SAX planes

  // Chamber base radii (mm). Ventricles are prolate along the long
  // axis by `elongation`; the LV myocardium is a shell around the LV
  // cavity with a small cavity/wall gap.
  double radius_lv = 22.0;
  double radius_rv = 19.0;
  double radius_la = 16.0;
  double radius_ra = 15.0;
  double myo_gap = 2.0;
  double myo_thickness = 4.0;
  double elongation = 1.36;

  // Fractional contraction amplitudes; atria beat in antiphase.
  double amp_lv = 0.25;
  double amp_rv = 0.20;
  double amp_la = 0.15;
  double amp_ra = 0.15;

  int rows = 150;
  int cols = 150;
  double spacing = 1.2;  // mm per pixel, isotropic

  void validate() const;
};

/// Unit icosphere: V = 10 * 4^s + 2 vertices, F = 20 * 4^s faces.
void icosphere(int subdivisions, std::vector<Vec3>& vertices,
               std::vector<Face>& faces);

/// Template heart at end-diastole (frame 0 geometry).
LabeledMesh generate_template(const SynthConfig& config);

/// Beating sequence: per-frame radial scaling of each chamber about
/// its centre, r_c(t) = r_c (1 - a_c (1 - cos(2 pi t / N + phase)) / 2).
/// Ventricles peak at t = 0 (end-diastole); atria are antiphase.
/// Deterministic per config.
MeshSequence generate_heart(const SynthConfig& config);

struct PlaneSpec {
  std::string view;
  AffineHeader header;
  int rows = 0;
  int cols = 0;
};

/// Plane headers: 2CH/3CH/4CH at 60-degree azimuth increments around
/// the LV long axis, and SAX planes orthogonal to it at sax_gap
/// spacing, each centred on the template's footprint.
std::vector<PlaneSpec> generate_plane_specs(const SynthConfig& config);

/// The same planes materialized through plane_from_affine.
std::vector<PlaneFrame> generate_planes(const SynthConfig& config);

/// Filled whole-heart cross-section masks and signed distance maps for
/// every (plane, frame): per-component even-odd fill of the slice
/// polylines, OR-ed across components.
ObservationSet render_ground_truth(const MeshSequence& seq,
                                   const std::vector<PlaneFrame>& planes);

/// Pairs of components whose surfaces interpenetrate (informational;
/// the generator keeps default chambers disjoint).
std::vector<std::pair<Component, Component>> component_overlaps(
    const LabeledMesh& mesh);

}  // namespace heart4d
