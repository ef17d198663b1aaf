#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "heart4d/plane.hpp"
#include "testutil.hpp"

using namespace heart4d;
using namespace heart4d::testutil;

namespace {

AffineHeader affine_from(const Vec3& col_u, const Vec3& col_v,
                         const Vec3& col_w, const Vec3& origin) {
  AffineHeader h;
  h.matrix.setIdentity();
  h.matrix.block<3, 1>(0, 0) = col_u;
  h.matrix.block<3, 1>(0, 1) = col_v;
  h.matrix.block<3, 1>(0, 2) = col_w;
  h.matrix.block<3, 1>(0, 3) = origin;
  return h;
}

PlaneFrame transformed(const PlaneFrame& plane, const Eigen::Matrix3d& rot,
                       const Vec3& shift) {
  PlaneFrame out = plane;
  out.origin = rot * plane.origin + shift;
  out.normal = rot * plane.normal;
  out.axis_u = rot * plane.axis_u;
  out.axis_v = rot * plane.axis_v;
  return out;
}

}  // namespace

TEST_CASE("plane_from_affine: identity header") {
  const PlaneFrame plane = plane_from_affine(AffineHeader{}, "2CH", 150, 150);
  CHECK(plane.origin.norm() == 0.0);
  CHECK((plane.normal - Vec3(0, 0, 1)).norm() == 0.0);
  CHECK(plane.spacing_u == 1.0);
  CHECK(plane.spacing_v == 1.0);
  CHECK(plane.rows == 150);
  CHECK(plane.cols == 150);
}

TEST_CASE("plane_from_affine: column scale becomes pixel spacing") {
  const AffineHeader h = affine_from(1.5 * Vec3::UnitX(), 1.5 * Vec3::UnitY(),
                                     Vec3::UnitZ(), Vec3::Zero());
  const PlaneFrame plane = plane_from_affine(h, "SAX0", 150, 150);
  CHECK(plane.spacing_u == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(plane.spacing_v == doctest::Approx(1.5).epsilon(1e-15));
  CHECK((plane.axis_u - Vec3::UnitX()).norm() == 0.0);
  CHECK((plane.axis_v - Vec3::UnitY()).norm() == 0.0);
}

TEST_CASE("plane_from_affine: normal equals rotation third column") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Matrix3d rot = random_rotation(rng);
    const AffineHeader h = affine_from(1.2 * rot.col(0), 1.2 * rot.col(1),
                                       rot.col(2), random_vec(rng, 50));
    const PlaneFrame plane = plane_from_affine(h, "4CH", 150, 150);
    CHECK((plane.normal - rot.col(2)).norm() < 1e-12);
  }
}

TEST_CASE("plane_from_affine: rejects near-singular and skewed headers") {
  CHECK_THROWS_WITH_AS(
      plane_from_affine(affine_from(Vec3::Zero(), Vec3::UnitY(), Vec3::UnitZ(),
                                    Vec3::Zero()),
                        "2CH", 150, 150),
      doctest::Contains("near-singular"), ValidationError);
  // u and v 45 degrees apart
  CHECK_THROWS_WITH_AS(
      plane_from_affine(affine_from(Vec3::UnitX(),
                                    Vec3(1, 1, 0).normalized(), Vec3::UnitZ(),
                                    Vec3::Zero()),
                        "2CH", 150, 150),
      doctest::Contains("not orthogonal"), ValidationError);
}

TEST_CASE("vertex_plane_distance: examples") {
  std::mt19937_64 rng(29);
  const Eigen::Matrix3d rot = random_rotation(rng);
  const AffineHeader h = affine_from(2.0 * rot.col(0), 2.0 * rot.col(1),
                                     rot.col(2), Vec3(3, -1, 4));
  const PlaneFrame plane = plane_from_affine(h, "3CH", 100, 100);
  CHECK(vertex_plane_distance(plane.origin, plane) == 0.0);
  CHECK(vertex_plane_distance(plane.origin + 2.0 * plane.normal, plane) ==
        doctest::Approx(2.0).epsilon(1e-12));
  // In-plane offsets are ignored by the normal distance.
  const Vec3 v = plane.origin + 3.0 * plane.axis_u + 4.0 * plane.normal;
  CHECK(vertex_plane_distance(v, plane) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("world_to_pixel: axis steps and round trip") {
  std::mt19937_64 rng(31);
  const Eigen::Matrix3d rot = random_rotation(rng);
  const AffineHeader h = affine_from(1.3 * rot.col(0), 0.8 * rot.col(1),
                                     rot.col(2), Vec3(-5, 2, 1));
  const PlaneFrame plane = plane_from_affine(h, "2CH", 150, 150);

  const PixelCoord at_origin = world_to_pixel(plane.origin, plane);
  CHECK(std::abs(at_origin.row) < 1e-12);
  CHECK(std::abs(at_origin.col) < 1e-12);

  const Vec3 v = plane.origin + 5.0 * plane.spacing_u * plane.axis_u;
  const PixelCoord p = world_to_pixel(v, plane);
  CHECK(p.col == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(std::abs(p.row) < 1e-12);

  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_real_distribution<double> u(0.0, 149.0);
    const double row = u(rng), col = u(rng);
    const PixelCoord back =
        world_to_pixel(pixel_to_world(row, col, plane), plane);
    CHECK(std::abs(back.row - row) < 1e-9);
    CHECK(std::abs(back.col - col) < 1e-9);
  }
}

TEST_CASE("distance is rigid-invariant; offset decomposition reconstructs") {
  std::mt19937_64 rng(37);
  const PlaneFrame plane = plane_from_affine(AffineHeader{}, "SAX0", 150, 150);
  for (int trial = 0; trial < 25; ++trial) {
    const Vec3 v = random_vec(rng, 80.0);
    const Eigen::Matrix3d rot = random_rotation(rng);
    const Vec3 shift = random_vec(rng, 40.0);
    const PlaneFrame moved = transformed(plane, rot, shift);
    CHECK(std::abs(vertex_plane_distance(rot * v + shift, moved) -
                   vertex_plane_distance(v, plane)) < 1e-9);

    const PixelCoord px = world_to_pixel(v, plane);
    const double offset = plane.normal.dot(v - plane.origin);
    const Vec3 rebuilt =
        pixel_to_world(px.row, px.col, plane) + offset * plane.normal;
    CHECK((rebuilt - v).norm() < 1e-9);
  }
}

TEST_CASE("slice_mesh_with_plane: sphere cross sections") {
  const double radius = 10.0;
  const LabeledMesh sphere = icosphere_mesh(3, radius, {40.0, 40.0, 0.0});
  const AffineHeader h = affine_from(Vec3::UnitX(), Vec3::UnitY(),
                                     Vec3::UnitZ(), Vec3::Zero());
  const PlaneFrame plane = plane_from_affine(h, "SAX0", 100, 100);

  SUBCASE("center cut approximates the great circle") {
    const auto per_comp = slice_mesh_with_plane(sphere, plane);
    REQUIRE(per_comp.count(Component::LV) == 1);
    const auto& loops = per_comp.at(Component::LV);
    REQUIRE(loops.size() == 1);
    // spacing is 1 so pixel units are mm here
    CHECK(polyline_perimeter(loops[0]) ==
          doctest::Approx(2.0 * M_PI * radius).epsilon(0.02));
  }

  SUBCASE("offset cuts match the analytic disk area within 3%") {
    for (double offset : {0.0, 2.5, 5.0, 7.5}) {
      PlaneFrame shifted = plane;
      shifted.origin.z() = offset;
      const auto per_comp = slice_mesh_with_plane(sphere, shifted);
      const auto& loops = per_comp.at(Component::LV);
      REQUIRE(loops.size() == 1);
      const double analytic = M_PI * (radius * radius - offset * offset);
      CHECK(polyline_area(loops[0]) ==
            doctest::Approx(analytic).epsilon(0.03));
    }
  }

  SUBCASE("plane past the sphere yields an empty set") {
    PlaneFrame far = plane;
    far.origin.z() = radius + 1.0;
    CHECK(slice_mesh_with_plane(sphere, far).empty());
  }

  SUBCASE("tangent plane never crashes") {
    for (double nudge : {-1e-12, 0.0, 1e-12}) {
      PlaneFrame tangent = plane;
      tangent.origin.z() = radius + nudge;
      const auto per_comp = slice_mesh_with_plane(sphere, tangent);
      if (per_comp.count(Component::LV)) {
        for (const auto& loop : per_comp.at(Component::LV))
          CHECK(polyline_area(loop) < 1.0);
      }
    }
  }
}

TEST_CASE("slice separates components") {
  LabeledMesh two = icosphere_mesh(2, 5.0, {30.0, 30.0, 0.0}, Component::LV);
  const LabeledMesh rv =
      icosphere_mesh(2, 4.0, {55.0, 30.0, 0.0}, Component::RV);
  const int offset = two.vertex_count();
  for (const Vec3& v : rv.vertices) two.vertices.push_back(v);
  for (const Face& f : rv.faces)
    two.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
  two.labels.insert(two.labels.end(), rv.labels.begin(), rv.labels.end());

  const PlaneFrame plane = plane_from_affine(AffineHeader{}, "SAX0", 100, 100);
  const auto per_comp = slice_mesh_with_plane(two, plane);
  CHECK(per_comp.size() == 2);
  CHECK(per_comp.count(Component::LV) == 1);
  CHECK(per_comp.count(Component::RV) == 1);
}
