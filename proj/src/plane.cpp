#include "heart4d/plane.hpp"

#include <cmath>
#include <map>

namespace heart4d {

PlaneFrame plane_from_affine(const AffineHeader& header,
                             const std::string& view, int rows, int cols) {
  const Eigen::Matrix4d& m = header.matrix;
  const Vec3 col_u = m.block<3, 1>(0, 0);
  const Vec3 col_v = m.block<3, 1>(0, 1);
  const Vec3 col_w = m.block<3, 1>(0, 2);

  const double su = col_u.norm();
  const double sv = col_v.norm();
  if (su < 1e-9 || sv < 1e-9 || col_w.norm() < 1e-9)
    throw ValidationError("affine header near-singular: column norm < 1e-9");

  PlaneFrame plane;
  plane.view = view;
  plane.rows = rows;
  plane.cols = cols;
  plane.origin = m.block<3, 1>(0, 3);
  plane.axis_u = col_u / su;
  plane.axis_v = col_v / sv;
  plane.spacing_u = su;
  plane.spacing_v = sv;

  const double d = plane.axis_u.dot(plane.axis_v);
  if (std::abs(d) > 1e-6) {
    const double angle_deg = std::acos(std::clamp(d, -1.0, 1.0)) * 180.0 / M_PI;
    throw ValidationError(
        "affine in-plane axes not orthogonal: angle between u and v is " +
        std::to_string(angle_deg) + " deg");
  }

  plane.normal = plane.axis_u.cross(plane.axis_v).normalized();
  return plane;
}

double vertex_plane_distance(const Vec3& v, const PlaneFrame& plane) {
  return std::abs(plane.normal.dot(v - plane.origin));
}

PixelCoord world_to_pixel(const Vec3& v, const PlaneFrame& plane) {
  const Vec3 d = v - plane.origin;
  return {d.dot(plane.axis_v) / plane.spacing_v,
          d.dot(plane.axis_u) / plane.spacing_u};
}

Vec3 pixel_to_world(double row, double col, const PlaneFrame& plane) {
  return plane.origin + col * plane.spacing_u * plane.axis_u +
         row * plane.spacing_v * plane.axis_v;
}

namespace {

struct CrossSegment {
  std::pair<int, int> edge_a;  // mesh edge carrying endpoint a
  std::pair<int, int> edge_b;
  Vec3 point_a;
  Vec3 point_b;
};

std::pair<int, int> edge_key(int a, int b) {
  return {std::min(a, b), std::max(a, b)};
}

}  // namespace

std::vector<Polyline2> slice_with_plane(const std::vector<Vec3>& vertices,
                                        const std::vector<Face>& faces,
                                        const PlaneFrame& plane) {
  // Signed distances; d >= 0 counts as the positive side, so a vertex
  // exactly on the plane never produces a zero denominator below.
  std::vector<double> dist(vertices.size());
  for (size_t i = 0; i < vertices.size(); ++i)
    dist[i] = plane.normal.dot(vertices[i] - plane.origin);

  auto above = [&](int i) { return dist[i] >= 0.0; };

  std::vector<CrossSegment> segments;
  for (const Face& f : faces) {
    int pos = above(f[0]) + above(f[1]) + above(f[2]);
    if (pos == 0 || pos == 3) continue;

    CrossSegment seg;
    int found = 0;
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      if (above(a) == above(b)) continue;
      const double t = dist[a] / (dist[a] - dist[b]);
      const Vec3 p = vertices[a] + t * (vertices[b] - vertices[a]);
      if (found == 0) {
        seg.edge_a = edge_key(a, b);
        seg.point_a = p;
      } else {
        seg.edge_b = edge_key(a, b);
        seg.point_b = p;
      }
      ++found;
    }
    if (found == 2) segments.push_back(seg);
  }

  if (segments.empty()) return {};

  // Chain segments into loops through shared mesh edges.
  std::map<std::pair<int, int>, std::vector<int>> by_edge;
  for (size_t s = 0; s < segments.size(); ++s) {
    by_edge[segments[s].edge_a].push_back(static_cast<int>(s));
    by_edge[segments[s].edge_b].push_back(static_cast<int>(s));
  }
  for (const auto& [e, segs] : by_edge)
    if (segs.size() != 2)
      throw ValidationError(
          "non-manifold cross section: mesh edge (" + std::to_string(e.first) +
          ", " + std::to_string(e.second) + ") crossed by " +
          std::to_string(segs.size()) + " faces");

  std::vector<Polyline2> loops;
  std::vector<bool> used(segments.size(), false);
  for (size_t start = 0; start < segments.size(); ++start) {
    if (used[start]) continue;
    Polyline2 loop;
    int cur = static_cast<int>(start);
    std::pair<int, int> entry = segments[start].edge_a;
    while (!used[cur]) {
      used[cur] = true;
      const CrossSegment& s = segments[cur];
      const bool forward = (entry == s.edge_a);
      const Vec3& pt = forward ? s.point_a : s.point_b;
      loop.push_back(world_to_pixel(pt, plane));
      const std::pair<int, int> exit = forward ? s.edge_b : s.edge_a;
      const auto& pair = by_edge.at(exit);
      cur = (pair[0] == cur) ? pair[1] : pair[0];
      entry = exit;
    }
    if (loop.size() >= 3) loops.push_back(std::move(loop));
  }
  return loops;
}

std::map<Component, std::vector<Polyline2>> slice_mesh_with_plane(
    const LabeledMesh& mesh, const PlaneFrame& plane) {
  std::map<Component, std::vector<Polyline2>> out;
  for (Component c : kComponents) {
    auto faces = component_faces(mesh, c);
    if (faces.empty()) continue;
    auto loops = slice_with_plane(mesh.vertices, faces, plane);
    if (!loops.empty()) out[c] = std::move(loops);
  }
  return out;
}

double polyline_area(const Polyline2& poly) {
  double twice = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const PixelCoord& p = poly[i];
    const PixelCoord& q = poly[(i + 1) % n];
    twice += p.col * q.row - q.col * p.row;
  }
  return std::abs(twice) / 2.0;
}

double polyline_perimeter(const Polyline2& poly) {
  double len = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const PixelCoord& p = poly[i];
    const PixelCoord& q = poly[(i + 1) % n];
    len += std::hypot(q.row - p.row, q.col - p.col);
  }
  return len;
}

}  // namespace heart4d
