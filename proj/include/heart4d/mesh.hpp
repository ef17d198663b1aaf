#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace heart4d {

using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

/// Anatomical component tags carried per vertex.
enum class Component { LV, LV_MYO, RV, LA, RA };

inline constexpr std::array<Component, 5> kComponents = {
    Component::LV, Component::LV_MYO, Component::RV, Component::LA,
    Component::RA};

std::string to_string(Component c);
std::optional<Component> component_from_string(const std::string& s);

/// Input or dataset validation failure. CLI maps these to exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite value encountered during numerics. CLI exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fixed-connectivity triangle surface with per-vertex component labels.
/// Coordinates are millimetres in world space. Immutable by convention
/// once constructed; all derived-quantity operations are pure.
struct LabeledMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Component> labels;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
};

/// N time-ordered vertex sets sharing one connectivity and label set.
struct MeshSequence {
  std::vector<std::vector<Vec3>> frames;
  std::vector<Face> faces;
  std::vector<Component> labels;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int vertex_count() const {
    return frames.empty() ? 0 : static_cast<int>(frames.front().size());
  }

  LabeledMesh frame_mesh(int t) const { return {frames.at(t), faces, labels}; }
};

MeshSequence sequence_from_mesh(const LabeledMesh& mesh, int n_frames);

/// Unique undirected edges with template rest lengths (supports the
/// edge-length regularizer).
struct EdgeList {
  std::vector<std::array<int, 2>> edges;  // each pair stored (min, max)
  std::vector<double> rest_lengths;       // mm, strictly positive
};

/// Structural invariants: index ranges, degenerate faces, label
/// consistency within each face, label/vertex count match.
/// Throws ValidationError naming the violated invariant.
void validate_mesh(const LabeledMesh& mesh);

/// Parses the OBJ subset (`v` and `f` records only) plus the `.labels`
/// sidecar next to `path`. Errors carry the offending line number.
LabeledMesh load_mesh(const std::string& path);

/// Writes vertices with full round-trip decimal precision so that
/// save-then-load reproduces coordinates bit-exactly.
void save_mesh(const LabeledMesh& mesh, const std::string& path);

std::vector<Vec3> face_normals(const std::vector<Vec3>& vertices,
                               const std::vector<Face>& faces);
std::vector<Vec3> face_normals(const LabeledMesh& mesh);

struct VolumeResult {
  double milliliters = 0.0;          // always nonnegative
  bool orientation_flipped = false;  // raw signed volume was negative
};

/// Divergence-theorem volume of one labeled component (or the whole
/// mesh when `component` is empty). Requires the selected surface to be
/// closed; a boundary or non-manifold edge aborts with ValidationError
/// before any volume is computed. mm^3 are converted to mL.
VolumeResult signed_volume(const LabeledMesh& mesh,
                           std::optional<Component> component = std::nullopt);
VolumeResult signed_volume(const std::vector<Vec3>& vertices,
                           const std::vector<Face>& faces);

EdgeList build_edge_list(const std::vector<Vec3>& vertices,
                         const std::vector<Face>& faces);
EdgeList build_edge_list(const LabeledMesh& mesh);

/// Faces of `mesh` whose vertices carry `component`.
std::vector<Face> component_faces(const LabeledMesh& mesh, Component component);

/// Vertex indices labeled `component`.
std::vector<int> component_vertices(const std::vector<Component>& labels,
                                    Component component);

}  // namespace heart4d
