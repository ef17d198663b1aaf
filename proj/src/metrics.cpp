#include "heart4d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace heart4d {

namespace {

void require_correspondence(const MeshSequence& pred, const MeshSequence& ref) {
  if (pred.frame_count() != ref.frame_count() ||
      pred.vertex_count() != ref.vertex_count())
    throw ValidationError(
        "sequence shape mismatch: pred " + std::to_string(pred.frame_count()) +
        "x" + std::to_string(pred.vertex_count()) + ", ref " +
        std::to_string(ref.frame_count()) + "x" +
        std::to_string(ref.vertex_count()));
}

std::vector<int> all_indices(int n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

VertexErrors vertexwise_errors(const MeshSequence& pred,
                               const MeshSequence& ref,
                               const std::vector<int>& subset) {
  require_correspondence(pred, ref);
  const std::vector<int> idx =
      subset.empty() ? all_indices(pred.vertex_count()) : subset;
  if (idx.empty()) throw ValidationError("empty vertex subset");
  double abs_acc = 0.0, sq_acc = 0.0;
  for (int t = 0; t < pred.frame_count(); ++t)
    for (int i : idx) {
      const double d = (pred.frames[t][i] - ref.frames[t][i]).norm();
      abs_acc += d;
      sq_acc += d * d;
    }
  const double count = static_cast<double>(pred.frame_count()) * idx.size();
  return {abs_acc / count, sq_acc / count};
}

namespace {

// Exact nearest neighbours. Distances are computed with the same
// expression as a plain O(n^2) scan and the pruning bound carries a
// small slack, so the reported minima are bit-identical to brute force.
class KdTree3 {
 public:
  explicit KdTree3(const std::vector<Vec3>& points) : points_(points) {
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(points.size());
    root_ = build(0, static_cast<int>(points.size()));
  }

  double nearest_sq(const Vec3& q) const {
    double best = std::numeric_limits<double>::infinity();
    search(root_, q, best);
    return best;
  }

 private:
  struct Node {
    int begin = 0, end = 0;  // leaf range in order_
    int axis = -1;
    double split = 0.0;
    int left = -1, right = -1;
  };

  static double sq_dist(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
  }

  int build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= 8) {
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    Vec3 lo = points_[order_[begin]], hi = lo;
    for (int i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](int a, int b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    node.axis = axis;
    node.split = points_[order_[mid]][axis];
    nodes_.push_back(node);
    const int self = static_cast<int>(nodes_.size()) - 1;
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void search(int idx, const Vec3& q, double& best) const {
    const Node& node = nodes_[idx];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i)
        best = std::min(best, sq_dist(q, points_[order_[i]]));
      return;
    }
    const double d = q[node.axis] - node.split;
    const int near = d < 0.0 ? node.left : node.right;
    const int far = d < 0.0 ? node.right : node.left;
    search(near, q, best);
    if (d * d <= best * (1.0 + 1e-12) + 1e-300) search(far, q, best);
  }

  const std::vector<Vec3>& points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace

std::vector<double> nearest_distances(const std::vector<Vec3>& queries,
                                      const std::vector<Vec3>& targets) {
  if (targets.empty()) throw ValidationError("empty target point set");
  KdTree3 tree(targets);
  std::vector<double> out(queries.size());
  for (size_t i = 0; i < queries.size(); ++i)
    out[i] = std::sqrt(tree.nearest_sq(queries[i]));
  return out;
}

ChamferHausdorff chamfer_hausdorff(const std::vector<Vec3>& a,
                                   const std::vector<Vec3>& b) {
  if (a.empty() || b.empty())
    throw ValidationError("chamfer_hausdorff requires nonempty point sets");
  const std::vector<double> d_ab = nearest_distances(a, b);
  const std::vector<double> d_ba = nearest_distances(b, a);
  double mean_ab = 0.0, max_ab = 0.0;
  for (double d : d_ab) {
    mean_ab += d;
    max_ab = std::max(max_ab, d);
  }
  mean_ab /= static_cast<double>(d_ab.size());
  double mean_ba = 0.0, max_ba = 0.0;
  for (double d : d_ba) {
    mean_ba += d;
    max_ba = std::max(max_ba, d);
  }
  mean_ba /= static_cast<double>(d_ba.size());
  return {(mean_ab + mean_ba) / 2.0, std::max(max_ab, max_ba)};
}

Polyline2 resample_closed(const Polyline2& poly, double max_step) {
  if (poly.size() < 2 || !(max_step > 0.0)) return poly;
  const double perimeter = polyline_perimeter(poly);
  if (perimeter <= 0.0) return {poly.front()};
  const int n_samples =
      std::max(static_cast<int>(std::ceil(perimeter / max_step)), 3);
  const double step = perimeter / n_samples;

  Polyline2 out;
  out.reserve(n_samples);
  const size_t n = poly.size();
  size_t seg = 0;
  double seg_start = 0.0;  // arc length at start of segment `seg`
  auto seg_len = [&](size_t s) {
    const PixelCoord& p = poly[s];
    const PixelCoord& q = poly[(s + 1) % n];
    return std::hypot(q.row - p.row, q.col - p.col);
  };
  double cur_len = seg_len(0);
  for (int k = 0; k < n_samples; ++k) {
    const double target = k * step;
    while (seg_start + cur_len < target && seg + 1 < n) {
      seg_start += cur_len;
      ++seg;
      cur_len = seg_len(seg);
    }
    const double t = cur_len > 0.0 ? (target - seg_start) / cur_len : 0.0;
    const PixelCoord& p = poly[seg];
    const PixelCoord& q = poly[(seg + 1) % n];
    out.push_back({p.row + t * (q.row - p.row), p.col + t * (q.col - p.col)});
  }
  return out;
}

std::optional<ContourMetrics> contour_metrics(
    const std::vector<Polyline2>& pred, const std::vector<Polyline2>& ref,
    double spacing_u, double spacing_v, double threshold_px) {
  std::vector<PixelCoord> p_pts, r_pts;
  for (const Polyline2& poly : pred)
    for (const PixelCoord& pt : resample_closed(poly, 0.5)) p_pts.push_back(pt);
  for (const Polyline2& poly : ref)
    for (const PixelCoord& pt : resample_closed(poly, 0.5)) r_pts.push_back(pt);
  if (p_pts.empty() || r_pts.empty()) return std::nullopt;

  auto directed = [&](const std::vector<PixelCoord>& from,
                      const std::vector<PixelCoord>& to,
                      std::vector<double>& px, std::vector<double>& mm) {
    px.resize(from.size());
    mm.resize(from.size());
    for (size_t i = 0; i < from.size(); ++i) {
      double best_px = std::numeric_limits<double>::infinity();
      double best_mm = std::numeric_limits<double>::infinity();
      for (const PixelCoord& q : to) {
        const double dr = from[i].row - q.row;
        const double dc = from[i].col - q.col;
        best_px = std::min(best_px, dr * dr + dc * dc);
        const double dr_mm = dr * spacing_v;
        const double dc_mm = dc * spacing_u;
        best_mm = std::min(best_mm, dr_mm * dr_mm + dc_mm * dc_mm);
      }
      px[i] = std::sqrt(best_px);
      mm[i] = std::sqrt(best_mm);
    }
  };

  std::vector<double> pr_px, pr_mm, rp_px, rp_mm;
  directed(p_pts, r_pts, pr_px, pr_mm);
  directed(r_pts, p_pts, rp_px, rp_mm);

  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) /
           static_cast<double>(v.size());
  };
  auto within = [&](const std::vector<double>& v) {
    size_t n = 0;
    for (double d : v)
      if (d <= threshold_px) ++n;
    return static_cast<double>(n) / static_cast<double>(v.size());
  };

  ContourMetrics out;
  out.mcd_mm = (mean(pr_mm) + mean(rp_mm)) / 2.0;
  const double precision = within(pr_px);
  const double recall = within(rp_px);
  out.bf_percent = (precision + recall) > 0.0
                       ? 200.0 * precision * recall / (precision + recall)
                       : 0.0;
  return out;
}

double volume_error(const MeshSequence& pred, const MeshSequence& ref) {
  require_correspondence(pred, ref);
  double acc = 0.0;
  for (int t = 0; t < pred.frame_count(); ++t) {
    const double vp = signed_volume(pred.frame_mesh(t)).milliliters;
    const double vr = signed_volume(ref.frame_mesh(t)).milliliters;
    acc += std::abs(vp - vr);
  }
  return acc / pred.frame_count();
}

double mesh_jitter(const MeshSequence& seq, const std::vector<int>& subset,
                   bool cyclic) {
  const int n = seq.frame_count();
  if (n < 4)
    throw ValidationError("mesh jitter needs N >= 4 frames, got " +
                          std::to_string(n));
  const std::vector<int> idx =
      subset.empty() ? all_indices(seq.vertex_count()) : subset;
  if (idx.empty()) throw ValidationError("empty vertex subset");

  const int t_begin = cyclic ? 0 : 2;
  const int t_end = cyclic ? n : n - 2;
  auto frame = [&](int t) -> const std::vector<Vec3>& {
    return seq.frames[((t % n) + n) % n];
  };
  double acc = 0.0;
  for (int t = t_begin; t < t_end; ++t)
    for (int i : idx) {
      const Vec3 d = 0.5 * (frame(t + 2)[i] - 2.0 * frame(t + 1)[i] +
                            2.0 * frame(t - 1)[i] - frame(t - 2)[i]);
      acc += d.norm();
    }
  return acc / (static_cast<double>(t_end - t_begin) * idx.size());
}

MetricReport evaluate(const MeshSequence& pred, const MeshSequence& ref,
                      const std::vector<PlaneFrame>& planes,
                      const ObservationSet& observations,
                      double contour_threshold_px) {
  require_correspondence(pred, ref);
  MetricReport report;

  auto add_structure = [&](const std::string& name,
                           const std::vector<int>& subset) {
    MetricReport::StructureRow row;
    row.structure = name;
    const VertexErrors ve = vertexwise_errors(pred, ref, subset);
    row.mae = ve.mae;
    row.mse = ve.mse;
    double cd = 0.0, hd = 0.0;
    for (int t = 0; t < pred.frame_count(); ++t) {
      std::vector<Vec3> p_pts, r_pts;
      if (subset.empty()) {
        p_pts = pred.frames[t];
        r_pts = ref.frames[t];
      } else {
        for (int i : subset) {
          p_pts.push_back(pred.frames[t][i]);
          r_pts.push_back(ref.frames[t][i]);
        }
      }
      const ChamferHausdorff ch = chamfer_hausdorff(p_pts, r_pts);
      cd += ch.chamfer;
      hd += ch.hausdorff;
    }
    row.chamfer = cd / pred.frame_count();
    row.hausdorff = hd / pred.frame_count();
    row.jitter = pred.frame_count() >= 4 ? mesh_jitter(pred, subset) : 0.0;
    report.structures.push_back(row);
  };

  add_structure("FullMesh", {});
  for (Component c : kComponents) {
    const std::vector<int> subset = component_vertices(pred.labels, c);
    if (!subset.empty()) add_structure(to_string(c), subset);
  }

  report.e_vol = volume_error(pred, ref);

  for (const PlaneFrame& plane : planes) {
    MetricReport::ViewRow row;
    row.view = plane.view;
    double mcd_acc = 0.0, bf_acc = 0.0;
    int n_present = 0;
    for (int t = 0; t < pred.frame_count(); ++t) {
      const ViewObservation* obs = observations.find(plane.view, t);
      if (!obs) continue;
      std::vector<Polyline2> pred_contours;
      for (auto& [comp, loops] : slice_mesh_with_plane(pred.frame_mesh(t),
                                                       plane))
        for (auto& loop : loops) pred_contours.push_back(std::move(loop));
      const std::vector<Polyline2> ref_contours = marching_squares(obs->mask);
      const auto cm = contour_metrics(pred_contours, ref_contours,
                                      plane.spacing_u, plane.spacing_v,
                                      contour_threshold_px);
      if (!cm) continue;
      mcd_acc += cm->mcd_mm;
      bf_acc += cm->bf_percent;
      ++n_present;
    }
    if (n_present > 0) {
      row.mcd_mm = mcd_acc / n_present;
      row.bf_percent = bf_acc / n_present;
    }
    report.views.push_back(row);
  }
  return report;
}

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_metric_csv(const MetricReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write metrics CSV: " + path);
  out << "kind,name,metric,value\n";
  for (const auto& s : report.structures) {
    out << "structure," << s.structure << ",MAE_mm," << fmt(s.mae) << '\n';
    out << "structure," << s.structure << ",MSE_mm2," << fmt(s.mse) << '\n';
    out << "structure," << s.structure << ",CD_mm," << fmt(s.chamfer) << '\n';
    out << "structure," << s.structure << ",HD_mm," << fmt(s.hausdorff)
        << '\n';
    out << "structure," << s.structure << ",Jm_mm_per_frame3,"
        << fmt(s.jitter) << '\n';
  }
  out << "overall,WholeHeart,Evol_mL," << fmt(report.e_vol) << '\n';
  for (const auto& v : report.views) {
    out << "view," << v.view << ",MCD_mm,"
        << (v.mcd_mm ? fmt(*v.mcd_mm) : "absent") << '\n';
    out << "view," << v.view << ",BF_percent,"
        << (v.bf_percent ? fmt(*v.bf_percent) : "absent") << '\n';
  }
}

void write_volume_csv(const MeshSequence& pred, const MeshSequence& ref,
                      const std::string& path) {
  require_correspondence(pred, ref);
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write volume CSV: " + path);
  out << "frame,structure,pred_mL,ref_mL\n";
  for (int t = 0; t < pred.frame_count(); ++t) {
    const LabeledMesh pm = pred.frame_mesh(t);
    const LabeledMesh rm = ref.frame_mesh(t);
    for (Component c : kComponents) {
      if (component_vertices(pred.labels, c).empty()) continue;
      out << t << ',' << to_string(c) << ','
          << fmt(signed_volume(pm, c).milliliters) << ','
          << fmt(signed_volume(rm, c).milliliters) << '\n';
    }
    out << t << ",WholeHeart," << fmt(signed_volume(pm).milliliters) << ','
        << fmt(signed_volume(rm).milliliters) << '\n';
  }
}

}  // namespace heart4d
