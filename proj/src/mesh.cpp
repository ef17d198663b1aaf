#include "heart4d/mesh.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace heart4d {

std::string to_string(Component c) {
  switch (c) {
    case Component::LV: return "LV";
    case Component::LV_MYO: return "LV_MYO";
    case Component::RV: return "RV";
    case Component::LA: return "LA";
    case Component::RA: return "RA";
  }
  return "?";
}

std::optional<Component> component_from_string(const std::string& s) {
  for (Component c : kComponents)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

MeshSequence sequence_from_mesh(const LabeledMesh& mesh, int n_frames) {
  if (n_frames < 1) throw ValidationError("sequence needs N >= 1 frames");
  MeshSequence seq;
  seq.faces = mesh.faces;
  seq.labels = mesh.labels;
  seq.frames.assign(n_frames, mesh.vertices);
  return seq;
}

void validate_mesh(const LabeledMesh& mesh) {
  const int v = mesh.vertex_count();
  if (mesh.labels.size() != mesh.vertices.size())
    throw ValidationError("label count " + std::to_string(mesh.labels.size()) +
                          " does not match vertex count " + std::to_string(v));
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& face = mesh.faces[f];
    for (int k = 0; k < 3; ++k)
      if (face[k] < 0 || face[k] >= v)
        throw ValidationError("face " + std::to_string(f) + ": vertex index " +
                              std::to_string(face[k]) + " out of range [0, " +
                              std::to_string(v) + ")");
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2])
      throw ValidationError("face " + std::to_string(f) +
                            " is degenerate (repeated vertex index)");
    if (mesh.labels[face[0]] != mesh.labels[face[1]] ||
        mesh.labels[face[1]] != mesh.labels[face[2]])
      throw ValidationError("face " + std::to_string(f) +
                            " mixes component labels; components must be "
                            "disjoint closed surfaces");
  }
  for (const Vec3& p : mesh.vertices)
    if (!p.allFinite())
      throw ValidationError("non-finite vertex coordinate");
}

namespace {

std::string labels_path_for(const std::string& mesh_path) {
  size_t dot = mesh_path.find_last_of('.');
  size_t slash = mesh_path.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return mesh_path + ".labels";
  return mesh_path.substr(0, dot) + ".labels";
}

[[noreturn]] void parse_fail(const std::string& path, int line,
                             const std::string& what) {
  throw ValidationError(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

LabeledMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open mesh file: " + path);

  LabeledMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;  // blank line
    if (tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z()))
        parse_fail(path, lineno, "malformed vertex record");
      mesh.vertices.push_back(p);
    } else if (tag == "f") {
      long a, b, c;
      if (!(ls >> a >> b >> c))
        parse_fail(path, lineno, "malformed face record (need 3 indices)");
      std::string extra;
      if (ls >> extra)
        parse_fail(path, lineno, "face record is not a triangle");
      if (a < 1 || b < 1 || c < 1)
        parse_fail(path, lineno, "face indices must be positive (1-based)");
      mesh.faces.push_back({static_cast<int>(a - 1), static_cast<int>(b - 1),
                            static_cast<int>(c - 1)});
    } else {
      parse_fail(path, lineno,
                 "unsupported record '" + tag + "' (only v and f allowed)");
    }
  }

  const std::string lpath = labels_path_for(path);
  std::ifstream lin(lpath);
  if (!lin) throw ValidationError("cannot open label sidecar: " + lpath);
  int llineno = 0;
  while (std::getline(lin, line)) {
    ++llineno;
    std::string tag;
    std::istringstream(line) >> tag;
    if (tag.empty()) continue;
    auto c = component_from_string(tag);
    if (!c) parse_fail(lpath, llineno, "unknown component tag '" + tag + "'");
    mesh.labels.push_back(*c);
  }

  validate_mesh(mesh);
  return mesh;
}

void save_mesh(const LabeledMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write mesh file: " + path);
  char buf[128];
  for (const Vec3& p : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", p.x(), p.y(),
                  p.z());
    out << buf;
  }
  for (const Face& f : mesh.faces)
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) throw ValidationError("write failed: " + path);

  std::ofstream lout(labels_path_for(path));
  if (!lout) throw ValidationError("cannot write label sidecar for " + path);
  for (Component c : mesh.labels) lout << to_string(c) << '\n';
}

std::vector<Vec3> face_normals(const std::vector<Vec3>& vertices,
                               const std::vector<Face>& faces) {
  std::vector<Vec3> normals(faces.size());
  for (size_t f = 0; f < faces.size(); ++f) {
    const Vec3 e1 = vertices[faces[f][1]] - vertices[faces[f][0]];
    const Vec3 e2 = vertices[faces[f][2]] - vertices[faces[f][0]];
    const Vec3 n = e1.cross(e2);
    const double len = n.norm();
    if (len < 1e-14)
      throw NumericalError("zero-area face " + std::to_string(f));
    normals[f] = n / len;
  }
  return normals;
}

std::vector<Vec3> face_normals(const LabeledMesh& mesh) {
  return face_normals(mesh.vertices, mesh.faces);
}

namespace {

// Closed + consistently oriented: every undirected edge in exactly two
// faces, every directed edge in exactly one.
void require_closed(const std::vector<Face>& faces) {
  std::map<std::pair<int, int>, int> undirected;
  std::map<std::pair<int, int>, int> directed;
  for (const Face& f : faces) {
    for (int k = 0; k < 3; ++k) {
      int a = f[k], b = f[(k + 1) % 3];
      ++directed[{a, b}];
      ++undirected[{std::min(a, b), std::max(a, b)}];
    }
  }
  for (const auto& [e, n] : undirected)
    if (n != 2)
      throw ValidationError(
          "surface not closed: edge (" + std::to_string(e.first) + ", " +
          std::to_string(e.second) + ") belongs to " + std::to_string(n) +
          " faces (expected 2)");
  for (const auto& [e, n] : directed)
    if (n != 1)
      throw ValidationError("surface not consistently oriented at edge (" +
                            std::to_string(e.first) + ", " +
                            std::to_string(e.second) + ")");
}

}  // namespace

VolumeResult signed_volume(const std::vector<Vec3>& vertices,
                           const std::vector<Face>& faces) {
  require_closed(faces);
  double six_vol = 0.0;  // mm^3 * 6
  for (const Face& f : faces)
    six_vol += vertices[f[0]].dot(vertices[f[1]].cross(vertices[f[2]]));
  const double ml = six_vol / 6.0 / 1000.0;  // 1 mL = 1000 mm^3
  VolumeResult r;
  r.milliliters = std::abs(ml);
  r.orientation_flipped = ml < 0.0;
  return r;
}

VolumeResult signed_volume(const LabeledMesh& mesh,
                           std::optional<Component> component) {
  if (!component) {
    // Whole heart: sum of the five component volumes.
    VolumeResult total;
    for (Component c : kComponents) {
      auto faces = component_faces(mesh, c);
      if (faces.empty()) continue;
      VolumeResult r = signed_volume(mesh.vertices, faces);
      total.milliliters += r.milliliters;
      total.orientation_flipped |= r.orientation_flipped;
    }
    return total;
  }
  auto faces = component_faces(mesh, *component);
  if (faces.empty())
    throw ValidationError("mesh has no faces labeled " +
                          to_string(*component));
  return signed_volume(mesh.vertices, faces);
}

EdgeList build_edge_list(const std::vector<Vec3>& vertices,
                         const std::vector<Face>& faces) {
  std::map<std::pair<int, int>, bool> seen;
  EdgeList list;
  for (const Face& f : faces) {
    for (int k = 0; k < 3; ++k) {
      int a = f[k], b = f[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      if (seen.emplace(std::make_pair(a, b), true).second)
        list.edges.push_back({a, b});
    }
  }
  list.rest_lengths.reserve(list.edges.size());
  for (const auto& e : list.edges) {
    const double len = (vertices[e[0]] - vertices[e[1]]).norm();
    if (len <= 0.0)
      throw ValidationError("template edge (" + std::to_string(e[0]) + ", " +
                            std::to_string(e[1]) + ") has zero length");
    list.rest_lengths.push_back(len);
  }
  return list;
}

EdgeList build_edge_list(const LabeledMesh& mesh) {
  return build_edge_list(mesh.vertices, mesh.faces);
}

std::vector<Face> component_faces(const LabeledMesh& mesh,
                                  Component component) {
  std::vector<Face> out;
  for (const Face& f : mesh.faces)
    if (mesh.labels[f[0]] == component) out.push_back(f);
  return out;
}

std::vector<int> component_vertices(const std::vector<Component>& labels,
                                    Component component) {
  std::vector<int> out;
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == component) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace heart4d
