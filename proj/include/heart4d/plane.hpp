#pragma once

#include <map>
#include <string>
#include <vector>

#include "heart4d/mesh.hpp"

namespace heart4d {

/// 4x4 row-major affine mapping homogeneous pixel coordinates
/// (col, row, slice, 1) to world millimetres.
struct AffineHeader {
  Eigen::Matrix4d matrix = Eigen::Matrix4d::Identity();
};

/// One imaging plane in world coordinates. `origin` is the world
/// position of the pixel (0,0) centre; normal/axis_u/axis_v are an
/// orthonormal triad with normal = axis_u x axis_v.
struct PlaneFrame {
  std::string view;  // 2CH, 3CH, 4CH, SAX0..SAX<k-1>
  Vec3 origin = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 axis_u = Vec3::UnitX();
  Vec3 axis_v = Vec3::UnitY();
  double spacing_u = 1.0;  // mm per pixel along columns
  double spacing_v = 1.0;  // mm per pixel along rows
  int rows = 150;
  int cols = 150;
};

/// Fractional pixel coordinates of a projected world point.
struct PixelCoord {
  double row = 0.0;
  double col = 0.0;
};

/// Recovers plane geometry from an affine header: origin from the
/// translation column, axes and spacings from the first two columns,
/// normal from their cross product. Rejects near-singular columns and
/// non-orthogonal axes (reporting the measured angle).
PlaneFrame plane_from_affine(const AffineHeader& header,
                             const std::string& view, int rows, int cols);

/// Absolute vertex-to-plane normal distance |n . (v - c)|, mm.
double vertex_plane_distance(const Vec3& v, const PlaneFrame& plane);

/// Orthogonal projection of a world point expressed in fractional pixel
/// units. Out-of-extent coordinates are returned as-is.
PixelCoord world_to_pixel(const Vec3& v, const PlaneFrame& plane);

/// World position of a (fractional) pixel centre on the plane.
Vec3 pixel_to_world(double row, double col, const PlaneFrame& plane);

/// Closed polyline in fractional pixel units; closure is implicit
/// (last point connects back to the first).
using Polyline2 = std::vector<PixelCoord>;

/// Marching-triangles cross section: every face crossing the plane
/// contributes one segment, segments are chained into closed loops via
/// the mesh edges they lie on, and loop points are emitted in pixel
/// units. Empty intersections give empty sets. A non-manifold chain
/// (an intersected mesh edge shared by != 2 crossing faces) throws.
std::vector<Polyline2> slice_with_plane(const std::vector<Vec3>& vertices,
                                        const std::vector<Face>& faces,
                                        const PlaneFrame& plane);

std::map<Component, std::vector<Polyline2>> slice_mesh_with_plane(
    const LabeledMesh& mesh, const PlaneFrame& plane);

/// Shoelace area of a closed polyline, pixel^2 units.
double polyline_area(const Polyline2& poly);

/// Arc length of a closed polyline (includes the closing segment).
double polyline_perimeter(const Polyline2& poly);

}  // namespace heart4d
