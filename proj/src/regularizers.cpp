#include "heart4d/regularizers.hpp"

#include <cmath>
#include <map>

namespace heart4d {

void RegularizerWeights::validate() const {
  if (lambda_edge < 0.0 || lambda_norm < 0.0 || lambda_temp < 0.0)
    throw ValidationError("regularizer weights must be nonnegative");
}

LossGrad edge_loss(const std::vector<Vec3>& vertices, const EdgeList& edges) {
  LossGrad out;
  out.gradient.assign(vertices.size(), Vec3::Zero());
  if (edges.edges.empty()) return out;

  const double inv_count = 1.0 / static_cast<double>(edges.edges.size());
  double acc = 0.0;
  for (size_t e = 0; e < edges.edges.size(); ++e) {
    const int a = edges.edges[e][0], b = edges.edges[e][1];
    const Vec3 d = vertices[a] - vertices[b];
    const double len = d.norm();
    const double stretch = len - edges.rest_lengths[e];
    acc += stretch * stretch;
    if (len > 1e-14) {
      const Vec3 g = (2.0 * inv_count * stretch / len) * d;
      out.gradient[a] += g;
      out.gradient[b] -= g;
    }
  }
  out.loss = acc * inv_count;
  return out;
}

std::vector<std::array<int, 2>> adjacent_face_pairs(
    const std::vector<Face>& faces) {
  std::map<std::pair<int, int>, std::vector<int>> edge_faces;
  for (size_t f = 0; f < faces.size(); ++f)
    for (int k = 0; k < 3; ++k) {
      int a = faces[f][k], b = faces[f][(k + 1) % 3];
      if (a > b) std::swap(a, b);
      edge_faces[{a, b}].push_back(static_cast<int>(f));
    }
  std::vector<std::array<int, 2>> pairs;
  for (const auto& [edge, fs] : edge_faces)
    if (fs.size() == 2) pairs.push_back({fs[0], fs[1]});
  return pairs;
}

namespace {

struct FaceGeom {
  Vec3 m;       // unnormalized normal e1 x e2
  Vec3 n;       // unit normal
  double len;   // |m|
};

// Accumulates (d m / d vertices)^T g into the three vertex gradients.
// m = (v1 - v0) x (v2 - v0).
void scatter_normal_grad(const Face& f, const std::vector<Vec3>& vertices,
                         const Vec3& g, std::vector<Vec3>& grad) {
  const Vec3 e1 = vertices[f[1]] - vertices[f[0]];
  const Vec3 e2 = vertices[f[2]] - vertices[f[0]];
  grad[f[1]] += e2.cross(g);
  grad[f[2]] += g.cross(e1);
  grad[f[0]] += (e1 - e2).cross(g);
}

}  // namespace

LossGrad normal_loss(const std::vector<Vec3>& vertices,
                     const std::vector<Face>& faces,
                     const std::vector<std::array<int, 2>>& face_pairs) {
  LossGrad out;
  out.gradient.assign(vertices.size(), Vec3::Zero());
  if (face_pairs.empty()) return out;

  std::vector<FaceGeom> geom(faces.size());
  for (size_t f = 0; f < faces.size(); ++f) {
    const Vec3 e1 = vertices[faces[f][1]] - vertices[faces[f][0]];
    const Vec3 e2 = vertices[faces[f][2]] - vertices[faces[f][0]];
    geom[f].m = e1.cross(e2);
    geom[f].len = geom[f].m.norm();
    if (geom[f].len < 1e-14)
      throw NumericalError("zero-area face " + std::to_string(f) +
                           " in normal consistency loss");
    geom[f].n = geom[f].m / geom[f].len;
  }

  const double inv_count = 1.0 / static_cast<double>(face_pairs.size());
  double acc = 0.0;
  for (const auto& pair : face_pairs) {
    const FaceGeom& ga = geom[pair[0]];
    const FaceGeom& gb = geom[pair[1]];
    acc += 1.0 - ga.n.dot(gb.n);
    // d(1 - na . nb)/d ma = -(I - na na^T) nb / |ma|
    const Vec3 da = -inv_count * (gb.n - ga.n.dot(gb.n) * ga.n) / ga.len;
    const Vec3 db = -inv_count * (ga.n - ga.n.dot(gb.n) * gb.n) / gb.len;
    scatter_normal_grad(faces[pair[0]], vertices, da, out.gradient);
    scatter_normal_grad(faces[pair[1]], vertices, db, out.gradient);
  }
  out.loss = acc * inv_count;
  return out;
}

SeqLossGrad temporal_jerk_loss(const MeshSequence& sequence, bool cyclic) {
  const int n = sequence.frame_count();
  const int v = sequence.vertex_count();
  if (n < 4)
    throw ValidationError("temporal jerk needs N >= 4 frames, got " +
                          std::to_string(n));

  SeqLossGrad out;
  out.gradient.assign(n, std::vector<Vec3>(v, Vec3::Zero()));

  const int t_begin = cyclic ? 0 : 2;
  const int t_end = cyclic ? n : n - 2;
  const int n_valid = t_end - t_begin;
  if (n_valid <= 0) return out;
  const double inv_count = 1.0 / (static_cast<double>(n_valid) * v);

  auto frame = [&](int t) -> const std::vector<Vec3>& {
    return sequence.frames[((t % n) + n) % n];
  };

  double acc = 0.0;
  for (int t = t_begin; t < t_end; ++t) {
    const auto& xm2 = frame(t - 2);
    const auto& xm1 = frame(t - 1);
    const auto& xp1 = frame(t + 1);
    const auto& xp2 = frame(t + 2);
    auto& gm2 = out.gradient[(((t - 2) % n) + n) % n];
    auto& gm1 = out.gradient[(((t - 1) % n) + n) % n];
    auto& gp1 = out.gradient[(((t + 1) % n) + n) % n];
    auto& gp2 = out.gradient[(((t + 2) % n) + n) % n];
    for (int i = 0; i < v; ++i) {
      const Vec3 d =
          0.5 * (xp2[i] - 2.0 * xp1[i] + 2.0 * xm1[i] - xm2[i]);
      acc += d.squaredNorm();
      const Vec3 two_d = 2.0 * inv_count * d;
      gp2[i] += 0.5 * two_d;
      gp1[i] -= two_d;
      gm1[i] += two_d;
      gm2[i] -= 0.5 * two_d;
    }
  }
  out.loss = acc * inv_count;
  return out;
}

}  // namespace heart4d
