#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "heart4d/raster.hpp"
#include "testutil.hpp"

using namespace heart4d;
using namespace heart4d::testutil;

namespace {

MaskGrid disk_mask(int rows, int cols, double cr, double cc, double radius) {
  MaskGrid mask(rows, cols, 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if ((r - cr) * (r - cr) + (c - cc) * (c - cc) <= radius * radius)
        mask.at(r, c) = 1;
  return mask;
}

// O(P * B) oracle: exact distance to the nearest inner-boundary pixel.
RealGrid brute_sdm(const MaskGrid& mask) {
  std::vector<std::pair<int, int>> boundary;
  auto inside = [&](int r, int c) {
    return mask.in_bounds(r, c) && mask.at(r, c) != 0;
  };
  for (int r = 0; r < mask.rows; ++r)
    for (int c = 0; c < mask.cols; ++c)
      if (inside(r, c) && (!inside(r - 1, c) || !inside(r + 1, c) ||
                           !inside(r, c - 1) || !inside(r, c + 1)))
        boundary.emplace_back(r, c);
  RealGrid out(mask.rows, mask.cols, std::hypot(mask.rows, mask.cols));
  if (boundary.empty()) return out;
  for (int r = 0; r < mask.rows; ++r)
    for (int c = 0; c < mask.cols; ++c) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [br, bc] : boundary) {
        const double d = static_cast<double>((r - br) * (r - br) +
                                             (c - bc) * (c - bc));
        best = std::min(best, d);
      }
      const double dist = std::sqrt(best);
      out.at(r, c) = mask.at(r, c) ? -dist : dist;
    }
  return out;
}

}  // namespace

TEST_CASE("PGM round trip") {
  TempDir dir;
  std::mt19937_64 rng(41);
  MaskGrid mask(37, 53, 0);
  std::uniform_int_distribution<int> coin(0, 1);
  for (auto& p : mask.data) p = static_cast<uint8_t>(coin(rng));
  write_pgm(mask, dir.file("m.pgm"));
  const MaskGrid loaded = read_pgm(dir.file("m.pgm"));
  CHECK(loaded.rows == mask.rows);
  CHECK(loaded.cols == mask.cols);
  CHECK(loaded.data == mask.data);
}

TEST_CASE("read_pgm rejects malformed input") {
  TempDir dir;
  std::ofstream(dir.file("bad.pgm")) << "P5\n10 10\n255\nshort";
  CHECK_THROWS_WITH_AS(read_pgm(dir.file("bad.pgm")),
                       doctest::Contains("truncated"), ValidationError);
  std::ofstream(dir.file("notpgm.pgm")) << "P2\n2 2\n255\n0 0 0 0\n";
  CHECK_THROWS_AS(read_pgm(dir.file("notpgm.pgm")), ValidationError);
}

TEST_CASE("signed_distance_map equals brute force on random masks") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> pos(4.0, 28.0);
  std::uniform_real_distribution<double> rad(2.0, 9.0);
  for (int trial = 0; trial < 10; ++trial) {
    MaskGrid mask(32, 32, 0);
    const int blobs = 1 + (trial % 3);
    for (int b = 0; b < blobs; ++b)
      mask_or(mask, disk_mask(32, 32, pos(rng), pos(rng), rad(rng)));
    const RealGrid got = signed_distance_map(mask);
    const RealGrid want = brute_sdm(mask);
    for (size_t i = 0; i < got.size(); ++i) CHECK(got.data[i] == want.data[i]);
  }
}

TEST_CASE("sdm sign convention: zero exactly on boundary pixels") {
  const MaskGrid mask = disk_mask(40, 40, 20, 20, 9.0);
  const RealGrid sdm = signed_distance_map(mask);
  auto inside = [&](int r, int c) {
    return mask.in_bounds(r, c) && mask.at(r, c) != 0;
  };
  for (int r = 0; r < 40; ++r)
    for (int c = 0; c < 40; ++c) {
      const bool boundary = inside(r, c) && (!inside(r - 1, c) ||
                                             !inside(r + 1, c) ||
                                             !inside(r, c - 1) ||
                                             !inside(r, c + 1));
      if (boundary)
        CHECK(sdm.at(r, c) == 0.0);
      else if (mask.at(r, c))
        CHECK(sdm.at(r, c) < 0.0);
      else
        CHECK(sdm.at(r, c) > 0.0);
    }
}

TEST_CASE("sdm of an empty mask is the +hypot cap everywhere") {
  const MaskGrid mask(20, 30, 0);
  const RealGrid sdm = signed_distance_map(mask);
  const double cap = std::hypot(20, 30);
  for (double v : sdm.data) CHECK(v == cap);
}

TEST_CASE("marching squares: isolated pixel gives a 4-point diamond") {
  MaskGrid mask(10, 10, 0);
  mask.at(5, 5) = 1;
  const auto loops = marching_squares(mask);
  REQUIRE(loops.size() == 1);
  CHECK(loops[0].size() == 4);
  for (const PixelCoord& p : loops[0])
    CHECK(std::abs(p.row - 5.0) + std::abs(p.col - 5.0) ==
          doctest::Approx(0.5));
}

TEST_CASE("marching squares: disk contour length approximates 2 pi r") {
  const double radius = 12.0;
  const MaskGrid mask = disk_mask(64, 64, 32, 32, radius);
  const auto loops = marching_squares(mask);
  REQUIRE(loops.size() == 1);
  // The midpoint contour of a rasterized disk tracks the circle at
  // pixel resolution; allow a few percent.
  CHECK(polyline_perimeter(loops[0]) ==
        doctest::Approx(2.0 * M_PI * radius).epsilon(0.06));
  CHECK(polyline_area(loops[0]) ==
        doctest::Approx(M_PI * radius * radius).epsilon(0.05));
}

TEST_CASE("marching squares loops close around region touching border") {
  MaskGrid mask(8, 8, 1);  // all inside
  const auto loops = marching_squares(mask);
  REQUIRE(loops.size() == 1);
  CHECK(polyline_area(loops[0]) == doctest::Approx(64.0).epsilon(0.1));
}

TEST_CASE("rasterize_even_odd: disk and annulus") {
  // Circle polyline around (20, 20), radius 9.
  auto circle = [](double cr, double cc, double radius) {
    Polyline2 loop;
    for (int k = 0; k < 256; ++k) {
      const double a = 2.0 * M_PI * k / 256;
      loop.push_back({cr + radius * std::sin(a), cc + radius * std::cos(a)});
    }
    return loop;
  };

  SUBCASE("disk area within 3%") {
    const MaskGrid mask = rasterize_even_odd({circle(20, 20, 9)}, 40, 40);
    int area = 0;
    for (auto v : mask.data) area += v;
    CHECK(area == doctest::Approx(M_PI * 81.0).epsilon(0.03));
  }

  SUBCASE("nested loops produce a ring") {
    const MaskGrid mask =
        rasterize_even_odd({circle(20, 20, 12), circle(20, 20, 6)}, 40, 40);
    int area = 0;
    for (auto v : mask.data) area += v;
    CHECK(area == doctest::Approx(M_PI * (144.0 - 36.0)).epsilon(0.05));
    CHECK(mask.at(20, 20) == 0);  // hole
    CHECK(mask.at(20, 29) == 1);  // ring body
  }
}

TEST_CASE("fill and marching squares are consistent") {
  const MaskGrid mask = disk_mask(48, 48, 24, 24, 10.0);
  const auto loops = marching_squares(mask);
  const MaskGrid refilled = rasterize_even_odd(loops, 48, 48);
  // Midpoint contours pass between pixel centres, so refilling
  // reproduces the original mask exactly.
  CHECK(refilled.data == mask.data);
}
