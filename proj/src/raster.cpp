#include "heart4d/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace heart4d {

MaskGrid read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open PGM file: " + path);

  auto next_token = [&]() -> std::string {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {  // comment to end of line
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(static_cast<char>(ch));
    }
    return tok;
  };

  if (next_token() != "P5")
    throw ValidationError(path + ": not a binary PGM (missing P5 magic)");
  int cols, rows, maxval;
  try {
    cols = std::stoi(next_token());
    rows = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw ValidationError(path + ": malformed PGM header");
  }
  if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 255)
    throw ValidationError(path + ": unsupported PGM dimensions or maxval");

  MaskGrid mask(rows, cols);
  std::vector<char> raw(static_cast<size_t>(rows) * cols);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw ValidationError(path + ": truncated PGM pixel data");
  for (size_t i = 0; i < raw.size(); ++i)
    mask.data[i] = static_cast<uint8_t>(raw[i]) != 0 ? 1 : 0;
  return mask;
}

void write_pgm(const MaskGrid& mask, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write PGM file: " + path);
  out << "P5\n" << mask.cols << ' ' << mask.rows << "\n255\n";
  std::vector<char> raw(mask.size());
  for (size_t i = 0; i < mask.size(); ++i)
    raw[i] = mask.data[i] ? static_cast<char>(255) : 0;
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) throw ValidationError("write failed: " + path);
}

namespace {

constexpr double kFar = 1e20;

// Felzenszwalb-Huttenlocher 1D squared distance transform. Exact for
// integer sample positions.
void dt1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
          std::vector<double>& z, int n) {
  int k = 0;
  v[0] = 0;
  z[0] = -kFar;
  z[1] = kFar;
  for (int q = 1; q < n; ++q) {
    double s =
        ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kFar;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

RealGrid signed_distance_map(const MaskGrid& mask) {
  const int rows = mask.rows, cols = mask.cols;
  RealGrid sq(rows, cols, kFar);

  bool any_boundary = false;
  auto inside = [&](int r, int c) {
    return mask.in_bounds(r, c) && mask.at(r, c) != 0;
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!inside(r, c)) continue;
      if (!inside(r - 1, c) || !inside(r + 1, c) || !inside(r, c - 1) ||
          !inside(r, c + 1)) {
        sq.at(r, c) = 0.0;
        any_boundary = true;
      }
    }

  const double cap = std::hypot(rows, cols);
  RealGrid out(rows, cols, cap);
  if (!any_boundary) return out;

  const int n = std::max(rows, cols);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) f[r] = sq.at(r, c);
    dt1d(f, d, v, z, rows);
    for (int r = 0; r < rows; ++r) sq.at(r, c) = d[r];
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) f[c] = sq.at(r, c);
    dt1d(f, d, v, z, cols);
    for (int c = 0; c < cols; ++c) sq.at(r, c) = d[c];
  }

  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double dist = std::sqrt(sq.at(r, c));
      out.at(r, c) = mask.at(r, c) ? -dist : dist;
    }
  return out;
}

namespace {

// Endpoint keys on doubled coordinates so half-integer midpoints are
// exact integers: edge midpoint (r + 0.5, c) -> (2r + 1, 2c).
using MidKey = std::pair<int, int>;

struct MsSegment {
  MidKey a, b;
};

PixelCoord key_to_point(const MidKey& k) {
  return {k.first / 2.0, k.second / 2.0};
}

}  // namespace

std::vector<Polyline2> marching_squares(const MaskGrid& mask) {
  const int rows = mask.rows, cols = mask.cols;
  auto sample = [&](int r, int c) -> int {
    return mask.in_bounds(r, c) ? (mask.at(r, c) != 0) : 0;
  };

  std::vector<MsSegment> segments;
  for (int r = -1; r < rows; ++r) {
    for (int c = -1; c < cols; ++c) {
      const int tl = sample(r, c), tr = sample(r, c + 1);
      const int br = sample(r + 1, c + 1), bl = sample(r + 1, c);
      const int code = tl * 8 + tr * 4 + br * 2 + bl;
      if (code == 0 || code == 15) continue;

      const MidKey top{2 * r, 2 * c + 1};
      const MidKey bottom{2 * r + 2, 2 * c + 1};
      const MidKey left{2 * r + 1, 2 * c};
      const MidKey right{2 * r + 1, 2 * c + 2};

      switch (code) {
        case 1: segments.push_back({left, bottom}); break;
        case 2: segments.push_back({bottom, right}); break;
        case 3: segments.push_back({left, right}); break;
        case 4: segments.push_back({top, right}); break;
        case 5:  // saddle: fixed split
          segments.push_back({top, left});
          segments.push_back({bottom, right});
          break;
        case 6: segments.push_back({top, bottom}); break;
        case 7: segments.push_back({top, left}); break;
        case 8: segments.push_back({top, left}); break;
        case 9: segments.push_back({top, bottom}); break;
        case 10:
          segments.push_back({top, right});
          segments.push_back({left, bottom});
          break;
        case 11: segments.push_back({top, right}); break;
        case 12: segments.push_back({left, right}); break;
        case 13: segments.push_back({bottom, right}); break;
        case 14: segments.push_back({left, bottom}); break;
        default: break;
      }
    }
  }
  if (segments.empty()) return {};

  std::map<MidKey, std::vector<int>> by_key;
  for (size_t s = 0; s < segments.size(); ++s) {
    by_key[segments[s].a].push_back(static_cast<int>(s));
    by_key[segments[s].b].push_back(static_cast<int>(s));
  }

  std::vector<Polyline2> loops;
  std::vector<bool> used(segments.size(), false);
  for (size_t start = 0; start < segments.size(); ++start) {
    if (used[start]) continue;
    Polyline2 loop;
    int cur = static_cast<int>(start);
    MidKey entry = segments[start].a;
    while (!used[cur]) {
      used[cur] = true;
      const MsSegment& s = segments[cur];
      const bool forward = (entry == s.a);
      loop.push_back(key_to_point(forward ? s.a : s.b));
      const MidKey exit = forward ? s.b : s.a;
      const auto& pair = by_key.at(exit);
      cur = (pair[0] == cur) ? pair[1] : pair[0];
      entry = exit;
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

MaskGrid rasterize_even_odd(const std::vector<Polyline2>& loops, int rows,
                            int cols) {
  MaskGrid mask(rows, cols, 0);
  std::vector<double> crossings;
  for (int r = 0; r < rows; ++r) {
    crossings.clear();
    const double y = r;
    for (const Polyline2& loop : loops) {
      const size_t n = loop.size();
      for (size_t i = 0; i < n; ++i) {
        const PixelCoord& p = loop[i];
        const PixelCoord& q = loop[(i + 1) % n];
        // Half-open span so a vertex on the scanline counts once.
        if ((p.row <= y && q.row > y) || (q.row <= y && p.row > y)) {
          const double t = (y - p.row) / (q.row - p.row);
          crossings.push_back(p.col + t * (q.col - p.col));
        }
      }
    }
    if (crossings.empty()) continue;
    std::sort(crossings.begin(), crossings.end());
    for (size_t k = 0; k + 1 < crossings.size(); k += 2) {
      const int c0 = static_cast<int>(std::ceil(crossings[k]));
      const int c1 = static_cast<int>(std::ceil(crossings[k + 1]) - 1);
      for (int c = std::max(c0, 0); c <= std::min(c1, cols - 1); ++c)
        mask.at(r, c) = 1;
    }
  }
  return mask;
}

void mask_or(MaskGrid& a, const MaskGrid& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw ValidationError("mask extent mismatch in OR");
  for (size_t i = 0; i < a.size(); ++i) a.data[i] |= b.data[i];
}

}  // namespace heart4d
