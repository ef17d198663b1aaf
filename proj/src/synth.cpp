#include "heart4d/synth.hpp"

#include <cmath>
#include <map>

#include "heart4d/raster.hpp"

namespace heart4d {

void SynthConfig::validate() const {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0))
      throw ValidationError(std::string("synth config: ") + name +
                            " must be > 0");
  };
  positive(radius_lv, "radius_lv");
  positive(radius_rv, "radius_rv");
  positive(radius_la, "radius_la");
  positive(radius_ra, "radius_ra");
  positive(myo_gap, "myo_gap");
  positive(myo_thickness, "myo_thickness");
  positive(sax_gap, "sax_gap");
  positive(spacing, "spacing");
  if (!(elongation >= 1.0))
    throw ValidationError("synth config: elongation must be >= 1");
  for (double a : {amp_lv, amp_rv, amp_la, amp_ra})
    if (!(a >= 0.0 && a < 0.5))
      throw ValidationError(
          "synth config: contraction amplitudes must lie in [0, 0.5)");
  if (frames < 4)
    throw ValidationError("synth config: frames must be >= 4");
  if (sax_slices < 1)
    throw ValidationError("synth config: sax_slices must be >= 1");
  if (rows < 8 || cols < 8)
    throw ValidationError("synth config: image extent too small");
}

void icosphere(int subdivisions, std::vector<Vec3>& vertices,
               std::vector<Face>& faces) {
  if (subdivisions < 0 || subdivisions > 7)
    throw ValidationError("icosphere subdivisions must be in [0, 7]");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  vertices = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
              {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
              {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : vertices) v.normalize();
  faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
           {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
           {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
           {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const Vec3 m = (vertices[a] + vertices[b]).normalized();
      vertices.push_back(m);
      const int idx = static_cast<int>(vertices.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
}

namespace {

struct ChamberSpec {
  Component component;
  Vec3 center;
  Vec3 semi_axes;
  double amplitude;
  double phase;
  bool inward = false;  // reversed winding (shell inner surface)
};

int subdivision_for(double max_semi_axis, double spacing) {
  // Base icosahedron edge for a unit sphere is ~1.0515; subdivision
  // halves it. Target max edge <= 2 px so slice contours stay covered.
  const double target = 2.0 * spacing;
  int s = 2;
  while (s < 5 && 1.0515 * max_semi_axis / (1 << s) > target) ++s;
  return s;
}

std::vector<ChamberSpec> chamber_layout(const SynthConfig& cfg) {
  const double inner = cfg.radius_lv + cfg.myo_gap;
  const double outer = inner + cfg.myo_thickness;
  const double e = cfg.elongation;

  auto prolate = [&](double r) { return Vec3(r, r, r * e); };
  const double z_top = outer * e;  // top of the ventricular block

  // Atria sit above the base with small clearances; each is close to
  // one long-axis plane (azimuths 0 and 60 degrees below).
  const Vec3 la_dir(std::cos(M_PI / 3.0), std::sin(M_PI / 3.0), 0.0);
  const Vec3 la_center =
      14.0 * la_dir + Vec3(0, 0, z_top + cfg.radius_la + 1.0);
  const Vec3 ra_center(-(inner + cfg.radius_ra * 0.6), 2.0,
                       z_top + cfg.radius_ra + 1.0);
  const Vec3 rv_center(-(outer + cfg.radius_rv + 1.0), 0.0, 3.0);

  return {
      {Component::LV, Vec3::Zero(), prolate(cfg.radius_lv), cfg.amp_lv, 0.0},
      {Component::LV_MYO, Vec3::Zero(), prolate(outer), cfg.amp_lv, 0.0},
      {Component::LV_MYO, Vec3::Zero(), prolate(inner), cfg.amp_lv, 0.0,
       true},
      {Component::RV, rv_center, prolate(cfg.radius_rv), cfg.amp_rv, 0.0},
      {Component::LA, la_center, Vec3::Constant(cfg.radius_la), cfg.amp_la,
       M_PI},
      {Component::RA, ra_center, Vec3::Constant(cfg.radius_ra), cfg.amp_ra,
       M_PI},
  };
}

}  // namespace

LabeledMesh generate_template(const SynthConfig& config) {
  config.validate();
  LabeledMesh mesh;
  for (const ChamberSpec& spec : chamber_layout(config)) {
    std::vector<Vec3> unit;
    std::vector<Face> faces;
    icosphere(subdivision_for(spec.semi_axes.maxCoeff(), config.spacing),
              unit, faces);
    const int offset = mesh.vertex_count();
    for (const Vec3& u : unit)
      mesh.vertices.push_back(spec.center + spec.semi_axes.cwiseProduct(u));
    for (const Face& f : faces) {
      Face g = {f[0] + offset, f[1] + offset, f[2] + offset};
      if (spec.inward) std::swap(g[1], g[2]);
      mesh.faces.push_back(g);
    }
    mesh.labels.insert(mesh.labels.end(), unit.size(), spec.component);
  }
  validate_mesh(mesh);
  return mesh;
}

MeshSequence generate_heart(const SynthConfig& config) {
  config.validate();
  const LabeledMesh tmpl = generate_template(config);
  const auto layout = chamber_layout(config);

  MeshSequence seq;
  seq.faces = tmpl.faces;
  seq.labels = tmpl.labels;
  seq.frames.reserve(config.frames);
  for (int t = 0; t < config.frames; ++t) {
    std::vector<Vec3> frame;
    frame.reserve(tmpl.vertices.size());
    int cursor = 0;
    for (const ChamberSpec& spec : layout) {
      std::vector<Vec3> unit;
      std::vector<Face> faces;
      icosphere(subdivision_for(spec.semi_axes.maxCoeff(), config.spacing),
                unit, faces);
      const double angle =
          2.0 * M_PI * static_cast<double>(t) / config.frames + spec.phase;
      const double scale =
          1.0 - spec.amplitude * (1.0 - std::cos(angle)) / 2.0;
      for (size_t i = 0; i < unit.size(); ++i) {
        const Vec3& rest = tmpl.vertices[cursor + static_cast<int>(i)];
        frame.push_back(spec.center + scale * (rest - spec.center));
      }
      cursor += static_cast<int>(unit.size());
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

std::vector<PlaneSpec> generate_plane_specs(const SynthConfig& config) {
  config.validate();
  const LabeledMesh tmpl = generate_template(config);

  auto make_spec = [&](const std::string& view, const Vec3& u, const Vec3& v,
                       const Vec3& n, const Vec3& pixel00) {
    PlaneSpec spec;
    spec.view = view;
    spec.rows = config.rows;
    spec.cols = config.cols;
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<3, 1>(0, 0) = u * config.spacing;
    m.block<3, 1>(0, 1) = v * config.spacing;
    m.block<3, 1>(0, 2) = n;
    m.block<3, 1>(0, 3) = pixel00;
    spec.header.matrix = m;
    return spec;
  };

  auto midrange = [&](const Vec3& dir) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Vec3& p : tmpl.vertices) {
      const double x = p.dot(dir);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    return (lo + hi) / 2.0;
  };

  std::vector<PlaneSpec> specs;

  // Long-axis planes contain the LV long axis (the z axis through the
  // LV centre) at 60-degree azimuth increments. The azimuth-0 plane
  // cuts LV, RV and RA (four-chamber-like); 60 degrees passes through
  // the LA; 120 degrees is the remaining oblique cut.
  const std::array<std::pair<std::string, double>, 3> lax = {
      std::make_pair(std::string("4CH"), 0.0),
      std::make_pair(std::string("2CH"), M_PI / 3.0),
      std::make_pair(std::string("3CH"), 2.0 * M_PI / 3.0)};
  for (const auto& [view, azimuth] : lax) {
    const Vec3 u(std::cos(azimuth), std::sin(azimuth), 0.0);
    const Vec3 v(0.0, 0.0, -1.0);
    const Vec3 n = u.cross(v);
    const Vec3 center = midrange(u) * u + midrange(v) * v;
    const Vec3 pixel00 = center -
                         u * config.spacing * (config.cols - 1) / 2.0 -
                         v * config.spacing * (config.rows - 1) / 2.0;
    specs.push_back(make_spec(view, u, v, n, pixel00));
  }

  // Short-axis stack, orthogonal to the long axis, centred on the
  // template footprint and spaced exactly sax_gap apart.
  const Vec3 u = Vec3::UnitX();
  const Vec3 v = Vec3::UnitY();
  const Vec3 n = Vec3::UnitZ();
  const double mid_x = midrange(u);
  const double mid_y = midrange(v);
  const double z0 = -(config.sax_slices - 1) * config.sax_gap / 2.0;
  for (int k = 0; k < config.sax_slices; ++k) {
    const Vec3 pixel00(mid_x - config.spacing * (config.cols - 1) / 2.0,
                       mid_y - config.spacing * (config.rows - 1) / 2.0,
                       z0 + k * config.sax_gap);
    specs.push_back(make_spec("SAX" + std::to_string(k), u, v, n, pixel00));
  }
  return specs;
}

std::vector<PlaneFrame> generate_planes(const SynthConfig& config) {
  std::vector<PlaneFrame> planes;
  for (const PlaneSpec& spec : generate_plane_specs(config))
    planes.push_back(
        plane_from_affine(spec.header, spec.view, spec.rows, spec.cols));
  return planes;
}

ObservationSet render_ground_truth(const MeshSequence& seq,
                                   const std::vector<PlaneFrame>& planes) {
  ObservationSet set;
  for (const PlaneFrame& plane : planes) {
    for (int t = 0; t < seq.frame_count(); ++t) {
      MaskGrid mask(plane.rows, plane.cols, 0);
      const LabeledMesh frame = seq.frame_mesh(t);
      for (const auto& [component, loops] :
           slice_mesh_with_plane(frame, plane)) {
        const MaskGrid filled =
            rasterize_even_odd(loops, plane.rows, plane.cols);
        mask_or(mask, filled);
      }
      set.insert(make_observation(plane.view, t, std::move(mask)));
    }
  }
  return set;
}

namespace {

// Point-in-mesh by casting a +x ray (Moller-Trumbore, d = (1,0,0)).
bool inside_mesh(const Vec3& p, const std::vector<Vec3>& vertices,
                 const std::vector<Face>& faces) {
  int crossings = 0;
  for (const Face& f : faces) {
    const Vec3& a = vertices[f[0]];
    const Vec3 e1 = vertices[f[1]] - a;
    const Vec3 e2 = vertices[f[2]] - a;
    const Vec3 h(0.0, -e2.z(), e2.y());  // d x e2
    const double det = e1.dot(h);
    if (std::abs(det) < 1e-14) continue;
    const double inv = 1.0 / det;
    const Vec3 s = p - a;
    const double u = s.dot(h) * inv;
    if (u < 0.0 || u > 1.0) continue;
    const Vec3 q = s.cross(e1);
    const double v = q.x() * inv;  // d . q
    if (v < 0.0 || u + v > 1.0) continue;
    const double t = e2.dot(q) * inv;
    if (t > 1e-12) ++crossings;
  }
  return (crossings % 2) == 1;
}

}  // namespace

std::vector<std::pair<Component, Component>> component_overlaps(
    const LabeledMesh& mesh) {
  std::vector<std::pair<Component, Component>> overlaps;
  for (Component a : kComponents) {
    const auto a_verts = component_vertices(mesh.labels, a);
    if (a_verts.empty()) continue;
    for (Component b : kComponents) {
      if (a == b) continue;
      if (a == Component::LV && b == Component::LV_MYO) continue;  // nested
      const auto b_faces = component_faces(mesh, b);
      if (b_faces.empty()) continue;
      const int stride =
          std::max<int>(1, static_cast<int>(a_verts.size()) / 200);
      bool hit = false;
      for (size_t i = 0; i < a_verts.size() && !hit; i += stride)
        hit = inside_mesh(mesh.vertices[a_verts[i]], mesh.vertices, b_faces);
      if (hit) overlaps.emplace_back(a, b);
    }
  }
  return overlaps;
}

}  // namespace heart4d
