#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "heart4d/mesh.hpp"
#include "testutil.hpp"

using namespace heart4d;
using namespace heart4d::testutil;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

}  // namespace

TEST_CASE("load_mesh: minimal single-triangle file") {
  TempDir dir;
  write_file(dir.file("tri.obj"),
             "v 0 0 0\n"
             "v 1 0 0\n"
             "v 0 1 0\n"
             "f 1 2 3\n");
  write_file(dir.file("tri.labels"), "LV\nLV\nLV\n");
  const LabeledMesh mesh = load_mesh(dir.file("tri.obj"));
  CHECK(mesh.vertex_count() == 3);
  CHECK(mesh.face_count() == 1);
  CHECK(mesh.labels[0] == Component::LV);
}

TEST_CASE("load_mesh: vertex index out of range is named") {
  TempDir dir;
  write_file(dir.file("bad.obj"),
             "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
             "f 1 2 8\n");
  write_file(dir.file("bad.labels"), "LV\nLV\nLV\n");
  CHECK_THROWS_WITH_AS(load_mesh(dir.file("bad.obj")),
                       doctest::Contains("out of range"), ValidationError);
}

TEST_CASE("load_mesh: degenerate face rejected, not repaired") {
  TempDir dir;
  write_file(dir.file("degen.obj"), "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 2\n");
  write_file(dir.file("degen.labels"), "LV\nLV\nLV\n");
  CHECK_THROWS_WITH_AS(load_mesh(dir.file("degen.obj")),
                       doctest::Contains("degenerate"), ValidationError);
}

TEST_CASE("load_mesh: unsupported OBJ records fail with line number") {
  TempDir dir;
  write_file(dir.file("vn.obj"), "v 0 0 0\nvn 0 0 1\n");
  write_file(dir.file("vn.labels"), "LV\n");
  CHECK_THROWS_WITH_AS(load_mesh(dir.file("vn.obj")), doctest::Contains(":2:"),
                       ValidationError);
}

TEST_CASE("load_mesh: label mismatches") {
  TempDir dir;
  write_file(dir.file("m.obj"), "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  SUBCASE("count mismatch") {
    write_file(dir.file("m.labels"), "LV\nLV\n");
    CHECK_THROWS_AS(load_mesh(dir.file("m.obj")), ValidationError);
  }
  SUBCASE("unknown tag") {
    write_file(dir.file("m.labels"), "LV\nLV\nAORTA\n");
    CHECK_THROWS_WITH_AS(load_mesh(dir.file("m.obj")),
                         doctest::Contains("AORTA"), ValidationError);
  }
  SUBCASE("mixed labels within one face") {
    write_file(dir.file("m.labels"), "LV\nLV\nRV\n");
    CHECK_THROWS_WITH_AS(load_mesh(dir.file("m.obj")),
                         doctest::Contains("mixes component labels"),
                         ValidationError);
  }
}

TEST_CASE("icosphere subdivision 3 counts: V=642, F=1280, E=1920") {
  const LabeledMesh sphere = icosphere_mesh(3, 1.0);
  CHECK(sphere.vertex_count() == 642);
  CHECK(sphere.face_count() == 1280);
  // Euler characteristic 2: E = V + F - 2
  CHECK(build_edge_list(sphere).edges.size() == 1920);
}

TEST_CASE("face_normals: canonical triangle and winding flip") {
  LabeledMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  mesh.faces = {{0, 1, 2}};
  mesh.labels.assign(3, Component::LV);
  CHECK((face_normals(mesh)[0] - Vec3(0, 0, 1)).norm() == 0.0);
  mesh.faces = {{0, 2, 1}};
  CHECK((face_normals(mesh)[0] - Vec3(0, 0, -1)).norm() == 0.0);
}

TEST_CASE("face_normals: orthogonal to both edges on random triangles") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    LabeledMesh mesh;
    mesh.vertices = {random_vec(rng, 10), random_vec(rng, 10),
                     random_vec(rng, 10)};
    mesh.faces = {{0, 1, 2}};
    mesh.labels.assign(3, Component::LV);
    const Vec3 n = face_normals(mesh)[0];
    CHECK(std::abs(n.norm() - 1.0) < 1e-12);
    CHECK(std::abs(n.dot(mesh.vertices[1] - mesh.vertices[0])) < 1e-12 * 20);
    CHECK(std::abs(n.dot(mesh.vertices[2] - mesh.vertices[0])) < 1e-12 * 20);
  }
}

TEST_CASE("face_normals: zero-area face reported with index") {
  LabeledMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 1, 0}};
  mesh.faces = {{0, 1, 3}, {0, 1, 2}};  // second face is collinear
  mesh.labels.assign(4, Component::LV);
  CHECK_THROWS_WITH_AS(face_normals(mesh), doctest::Contains("face 1"),
                       NumericalError);
}

TEST_CASE("signed_volume: unit cube is 0.001 mL") {
  const LabeledMesh cube = unit_cube();
  const VolumeResult r = signed_volume(cube, Component::LV);
  CHECK(r.milliliters == doctest::Approx(0.001).epsilon(1e-12));
  CHECK_FALSE(r.orientation_flipped);
}

TEST_CASE("signed_volume: reversed cube flags orientation, returns |V|") {
  LabeledMesh cube = unit_cube();
  for (Face& f : cube.faces) std::swap(f[1], f[2]);
  const VolumeResult r = signed_volume(cube, Component::LV);
  CHECK(r.milliliters == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(r.orientation_flipped);
}

TEST_CASE("signed_volume: icosphere r=10mm within 2% of sphere volume") {
  const LabeledMesh sphere = icosphere_mesh(3, 10.0);
  const double analytic = 4.0 * M_PI * 1000.0 / 3.0 / 1000.0;  // 4.18879 mL
  const double got = signed_volume(sphere, Component::LV).milliliters;
  CHECK(got < analytic);  // inscribed polyhedron
  CHECK(got == doctest::Approx(analytic).epsilon(0.02));
}

TEST_CASE("signed_volume: open surface detected before computing") {
  LabeledMesh cube = unit_cube();
  cube.faces.pop_back();
  CHECK_THROWS_WITH_AS(signed_volume(cube, Component::LV),
                       doctest::Contains("not closed"), ValidationError);
}

TEST_CASE("build_edge_list: dedup and rest lengths") {
  LabeledMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  mesh.faces = {{0, 1, 2}};
  mesh.labels.assign(3, Component::LV);
  SUBCASE("single triangle has 3 edges") {
    const EdgeList list = build_edge_list(mesh);
    CHECK(list.edges.size() == 3);
    for (double r : list.rest_lengths) CHECK(r > 0.0);
  }
  SUBCASE("two triangles sharing an edge have 5 edges") {
    mesh.vertices.push_back({1, 1, 0});
    mesh.labels.push_back(Component::LV);
    mesh.faces.push_back({1, 3, 2});
    CHECK(build_edge_list(mesh).edges.size() == 5);
  }
}

TEST_CASE("volume properties: translation invariance and cubic scaling") {
  std::mt19937_64 rng(11);
  const LabeledMesh sphere = icosphere_mesh(2, 7.5, {1.0, -2.0, 0.5});
  const double base = signed_volume(sphere, Component::LV).milliliters;
  for (int trial = 0; trial < 20; ++trial) {
    LabeledMesh moved = sphere;
    const Vec3 t = random_vec(rng, 100.0);
    for (Vec3& v : moved.vertices) v += t;
    CHECK(std::abs(signed_volume(moved, Component::LV).milliliters - base) <
          1e-9);

    LabeledMesh scaled = sphere;
    std::uniform_real_distribution<double> u(0.5, 2.0);
    const double s = u(rng);
    for (Vec3& v : scaled.vertices) v *= s;
    const double expect = s * s * s * base;
    CHECK(std::abs(signed_volume(scaled, Component::LV).milliliters - expect) <
          1e-9 * expect);
  }
}

TEST_CASE("normals are rotation-equivariant") {
  std::mt19937_64 rng(13);
  const LabeledMesh sphere = icosphere_mesh(2, 3.0);
  const std::vector<Vec3> base = face_normals(sphere);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3d rot = random_rotation(rng);
    LabeledMesh rotated = sphere;
    for (Vec3& v : rotated.vertices) v = rot * v;
    const std::vector<Vec3> got = face_normals(rotated);
    for (size_t f = 0; f < base.size(); ++f)
      CHECK((got[f] - rot * base[f]).norm() < 1e-12);
  }
}

TEST_CASE("save/load round-trip reproduces vertices bit-exactly") {
  TempDir dir;
  std::mt19937_64 rng(17);
  LabeledMesh mesh = icosphere_mesh(2, 12.345678901234567);
  for (Vec3& v : mesh.vertices) v += random_vec(rng, 1e-7);
  save_mesh(mesh, dir.file("sphere.obj"));
  const LabeledMesh loaded = load_mesh(dir.file("sphere.obj"));
  REQUIRE(loaded.vertex_count() == mesh.vertex_count());
  for (int i = 0; i < mesh.vertex_count(); ++i)
    for (int k = 0; k < 3; ++k)
      CHECK(loaded.vertices[i][k] == mesh.vertices[i][k]);
  CHECK(loaded.faces == mesh.faces);
  CHECK(loaded.labels == mesh.labels);
}
