#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "heart4d/plane.hpp"

namespace heart4d {

template <typename T>
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int r, int c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

  T& at(int r, int c) { return data[r * cols + c]; }
  const T& at(int r, int c) const { return data[r * cols + c]; }
  bool in_bounds(int r, int c) const {
    return r >= 0 && r < rows && c >= 0 && c < cols;
  }
  size_t size() const { return data.size(); }
};

using MaskGrid = Grid<uint8_t>;  // 0 = background, 1 = inside
using RealGrid = Grid<double>;

/// Binary PGM (P5). 0 maps to background, 255 to inside.
MaskGrid read_pgm(const std::string& path);
void write_pgm(const MaskGrid& mask, const std::string& path);

/// Exact two-pass Euclidean distance transform to the inner boundary
/// of `mask` (mask pixels with a 4-neighbour outside the region or the
/// image). Negative strictly inside, zero on boundary pixels, positive
/// outside, pixel units. A mask with no boundary at all (empty mask)
/// yields +hypot(rows, cols) everywhere.
RealGrid signed_distance_map(const MaskGrid& mask);

/// Marching squares at the 0.5 level between pixel centres. The image
/// border is treated as background, so every contour is a closed loop.
/// Points lie on half-integer pixel coordinates.
std::vector<Polyline2> marching_squares(const MaskGrid& mask);

/// Scanline even-odd fill of closed polylines into a fresh mask.
/// A pixel is inside when its centre is enclosed by an odd number of
/// loop crossings (loops from the same component may nest).
MaskGrid rasterize_even_odd(const std::vector<Polyline2>& loops, int rows,
                            int cols);

/// a |= b, elementwise. Extents must match.
void mask_or(MaskGrid& a, const MaskGrid& b);

}  // namespace heart4d
