#pragma once

#include "heart4d/mesh.hpp"

namespace heart4d {

struct RegularizerWeights {
  double lambda_edge = 0.8;
  double lambda_norm = 0.8;
  double lambda_temp = 0.1;  // temporal jerk; not part of the base objective

  void validate() const;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<Vec3> gradient;  // V x 3
};

struct SeqLossGrad {
  double loss = 0.0;
  std::vector<std::vector<Vec3>> gradient;  // N x V x 3
};

/// Mean over edges of (|e| - rest)^2, analytic gradient.
LossGrad edge_loss(const std::vector<Vec3>& vertices, const EdgeList& edges);

/// Unique unordered pairs of faces sharing an edge, in deterministic
/// order. Built once per connectivity.
std::vector<std::array<int, 2>> adjacent_face_pairs(
    const std::vector<Face>& faces);

/// Mean over adjacent face pairs of (1 - cos theta) between their unit
/// normals. A zero-area face at the evaluation point is an error naming
/// the face.
LossGrad normal_loss(const std::vector<Vec3>& vertices,
                     const std::vector<Face>& faces,
                     const std::vector<std::array<int, 2>>& face_pairs);

/// Mean over frames and vertices of the squared third central finite
/// difference of vertex position. The sequence is cyclic by default
/// (cardiac cycle wraps); non-cyclic mode restricts to interior frames.
/// Requires N >= 4.
SeqLossGrad temporal_jerk_loss(const MeshSequence& sequence,
                               bool cyclic = true);

}  // namespace heart4d
