#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "heart4d/mesh.hpp"
#include "heart4d/synth.hpp"

namespace heart4d::testutil {

/// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("heart4d_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

/// Unit cube [0,1]^3 as 12 outward-oriented triangles.
inline LabeledMesh unit_cube(Component label = Component::LV) {
  LabeledMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                   {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  mesh.faces = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7},
                {0, 1, 5}, {0, 5, 4}, {2, 3, 7}, {2, 7, 6},
                {0, 4, 7}, {0, 7, 3}, {1, 2, 6}, {1, 6, 5}};
  mesh.labels.assign(8, label);
  return mesh;
}

inline LabeledMesh icosphere_mesh(int subdivisions, double radius,
                                  const Vec3& center = Vec3::Zero(),
                                  Component label = Component::LV) {
  LabeledMesh mesh;
  icosphere(subdivisions, mesh.vertices, mesh.faces);
  for (Vec3& v : mesh.vertices) v = center + radius * v;
  mesh.labels.assign(mesh.vertices.size(), label);
  return mesh;
}

/// Closed UV sphere with exactly (rings - 1) * segments + 2 vertices.
/// rings=10, segments=22 gives the 200-vertex test mesh.
inline LabeledMesh uv_sphere(int rings, int segments, double radius,
                             const Vec3& center = Vec3::Zero(),
                             Component label = Component::LV) {
  LabeledMesh mesh;
  mesh.vertices.push_back(center + Vec3(0, 0, radius));  // north pole
  for (int r = 1; r < rings; ++r) {
    const double polar = M_PI * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double az = 2.0 * M_PI * s / segments;
      mesh.vertices.push_back(center +
                              radius * Vec3(std::sin(polar) * std::cos(az),
                                            std::sin(polar) * std::sin(az),
                                            std::cos(polar)));
    }
  }
  mesh.vertices.push_back(center + Vec3(0, 0, -radius));  // south pole
  const int south = static_cast<int>(mesh.vertices.size()) - 1;
  auto ring_vertex = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
  for (int s = 0; s < segments; ++s)
    mesh.faces.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
  for (int r = 1; r + 1 < rings; ++r)
    for (int s = 0; s < segments; ++s) {
      const int a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
      const int c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
      mesh.faces.push_back({a, c, d});
      mesh.faces.push_back({a, d, b});
    }
  for (int s = 0; s < segments; ++s)
    mesh.faces.push_back(
        {south, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)});
  mesh.labels.assign(mesh.vertices.size(), label);
  return mesh;
}

}  // namespace heart4d::testutil
