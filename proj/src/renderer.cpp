#include "heart4d/renderer.hpp"

#include <cmath>

#include "heart4d/parallel.hpp"

namespace heart4d {

void RendererConfig::validate() const {
  if (!(mu > 0.0)) throw ValidationError("renderer config requires mu > 0");
  if (!(window_halfwidth > 0.0))
    throw ValidationError("renderer config requires window_halfwidth > 0");
  if (!(window_softness > 0.0))
    throw ValidationError("renderer config requires window_softness > 0");
}

ViewObservation make_observation(const std::string& view, int frame,
                                 MaskGrid mask) {
  ViewObservation obs;
  obs.view = view;
  obs.frame = frame;
  obs.sdm = signed_distance_map(mask);
  obs.mask = std::move(mask);
  return obs;
}

void ObservationSet::insert(ViewObservation obs) {
  items[{obs.view, obs.frame}] = std::move(obs);
}

const ViewObservation* ObservationSet::find(const std::string& view,
                                            int frame) const {
  auto it = items.find({view, frame});
  return it == items.end() ? nullptr : &it->second;
}

const ViewObservation& ObservationSet::require(const std::string& view,
                                               int frame) const {
  const ViewObservation* obs = find(view, frame);
  if (!obs)
    throw ValidationError("missing observation for view " + view + ", frame " +
                          std::to_string(frame));
  return *obs;
}

double sigmoid_window(double distance, const RendererConfig& config) {
  const double z =
      std::clamp((distance - config.window_halfwidth) / config.window_softness,
                 -500.0, 500.0);
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

double association_probability(double distance, const RendererConfig& config) {
  return 1.0 - std::exp(-config.mu * sigmoid_window(distance, config));
}

double association_cutoff_radius(const RendererConfig& config) {
  // q <= cutoff  <=>  l <= -log(1 - cutoff) / mu
  const double l_min = -std::log1p(-kAssociationCutoff) / config.mu;
  return config.window_halfwidth +
         config.window_softness * std::log(1.0 / l_min - 1.0);
}

namespace {

struct Splat {
  bool active = false;
  double q = 0.0;
  double dq_dR = 0.0;
  double sign = 0.0;  // sign of n . (v - c)
  double row = 0.0;
  double col = 0.0;
  int r0 = 0;
  int c0 = 0;
  // corner order: (r0,c0), (r0,c0+1), (r0+1,c0), (r0+1,c0+1)
  std::array<double, 4> w{};
};

Splat compute_splat(const Vec3& v, const PlaneFrame& plane,
                    const RendererConfig& config, double cutoff_radius) {
  Splat s;
  const double signed_dist = plane.normal.dot(v - plane.origin);
  const double R = std::abs(signed_dist);
  if (R >= cutoff_radius) return s;

  const double l = sigmoid_window(R, config);
  const double q = 1.0 - std::exp(-config.mu * l);
  if (q <= kAssociationCutoff) return s;

  s.active = true;
  s.q = q;
  // dq/dR = mu exp(-mu l) * dl/dR,  dl/dR = -l (1 - l) / tau
  s.dq_dR = config.mu * std::exp(-config.mu * l) *
            (-l * (1.0 - l) / config.window_softness);
  s.sign = signed_dist > 0.0 ? 1.0 : (signed_dist < 0.0 ? -1.0 : 0.0);

  const PixelCoord pc = world_to_pixel(v, plane);
  s.row = pc.row;
  s.col = pc.col;
  s.r0 = static_cast<int>(std::floor(pc.row));
  s.c0 = static_cast<int>(std::floor(pc.col));
  const double fr = pc.row - s.r0;
  const double fc = pc.col - s.c0;
  s.w = {(1.0 - fr) * (1.0 - fc), (1.0 - fr) * fc, fr * (1.0 - fc), fr * fc};
  return s;
}

inline void corner_index(const Splat& s, int corner, int& r, int& c) {
  r = s.r0 + (corner >> 1);
  c = s.c0 + (corner & 1);
}

// d(corner weight)/d(row), d(corner weight)/d(col)
inline void corner_weight_grad(const Splat& s, int corner, double& dw_drow,
                               double& dw_dcol) {
  const double fr = s.row - s.r0;
  const double fc = s.col - s.c0;
  switch (corner) {
    case 0: dw_drow = -(1.0 - fc); dw_dcol = -(1.0 - fr); break;
    case 1: dw_drow = -fc;         dw_dcol = (1.0 - fr);  break;
    case 2: dw_drow = (1.0 - fc);  dw_dcol = -fr;         break;
    default: dw_drow = fc;         dw_dcol = fr;          break;
  }
}

}  // namespace

ProbabilityMap splat_probability_map(const std::vector<Vec3>& vertices,
                                     const PlaneFrame& plane,
                                     const RendererConfig& config) {
  config.validate();
  const double cutoff_radius = association_cutoff_radius(config);
  RealGrid survival(plane.rows, plane.cols, 1.0);  // prod_i (1 - w_i q_i)
  for (const Vec3& v : vertices) {
    const Splat s = compute_splat(v, plane, config, cutoff_radius);
    if (!s.active) continue;
    for (int corner = 0; corner < 4; ++corner) {
      int r, c;
      corner_index(s, corner, r, c);
      if (!survival.in_bounds(r, c)) continue;
      survival.at(r, c) *= 1.0 - s.w[corner] * s.q;
    }
  }
  ProbabilityMap map;
  map.view = plane.view;
  map.values = RealGrid(plane.rows, plane.cols, 0.0);
  for (size_t i = 0; i < survival.size(); ++i)
    map.values.data[i] = 1.0 - survival.data[i];
  return map;
}

double boundary_loss(const ProbabilityMap& q, const ViewObservation& obs) {
  if (q.values.rows != obs.sdm.rows || q.values.cols != obs.sdm.cols)
    throw ValidationError("probability map / observation extent mismatch");
  const double n_pixels = static_cast<double>(q.values.size());
  double acc = 0.0;
  for (size_t i = 0; i < q.values.size(); ++i)
    acc += obs.sdm.data[i] * q.values.data[i];
  return acc / n_pixels;
}

double boundary_loss_with_gradient(const std::vector<Vec3>& vertices,
                                   const PlaneFrame& plane,
                                   const ViewObservation& obs,
                                   const RendererConfig& config,
                                   std::vector<Vec3>& grad) {
  config.validate();
  if (plane.rows != obs.sdm.rows || plane.cols != obs.sdm.cols)
    throw ValidationError("plane extent does not match observation " +
                          obs.view);
  const double cutoff_radius = association_cutoff_radius(config);
  const double n_pixels = static_cast<double>(plane.rows) * plane.cols;

  // Pass 1: per-pixel survival products.
  RealGrid survival(plane.rows, plane.cols, 1.0);
  for (const Vec3& v : vertices) {
    const Splat s = compute_splat(v, plane, config, cutoff_radius);
    if (!s.active) continue;
    for (int corner = 0; corner < 4; ++corner) {
      int r, c;
      corner_index(s, corner, r, c);
      if (!survival.in_bounds(r, c)) continue;
      survival.at(r, c) *= 1.0 - s.w[corner] * s.q;
    }
  }

  double loss = 0.0;
  for (int r = 0; r < plane.rows; ++r)
    for (int c = 0; c < plane.cols; ++c)
      loss += obs.sdm.at(r, c) * (1.0 - survival.at(r, c));
  loss /= n_pixels;

  // Pass 2: chain dL/dQ(p) = sdm(p)/P through the splat of each vertex.
  const Vec3 du = plane.axis_u / plane.spacing_u;  // d(col)/dv
  const Vec3 dv = plane.axis_v / plane.spacing_v;  // d(row)/dv
  for (size_t i = 0; i < vertices.size(); ++i) {
    const Splat s = compute_splat(vertices[i], plane, config, cutoff_radius);
    if (!s.active) continue;
    Vec3 g = Vec3::Zero();
    for (int corner = 0; corner < 4; ++corner) {
      int r, c;
      corner_index(s, corner, r, c);
      if (!survival.in_bounds(r, c)) continue;
      const double a = s.w[corner] * s.q;
      // dQ/da = prod of the other factors
      const double dQ_da = survival.at(r, c) / (1.0 - a);
      const double dL_da = obs.sdm.at(r, c) / n_pixels * dQ_da;
      double dw_drow, dw_dcol;
      corner_weight_grad(s, corner, dw_drow, dw_dcol);
      // a = w(row, col) * q(R)
      g += dL_da * (s.w[corner] * s.dq_dR * s.sign * plane.normal +
                    s.q * (dw_drow * dv + dw_dcol * du));
    }
    grad[i] += g;
  }
  return loss;
}

double frame_render_loss(const std::vector<Vec3>& vertices, int frame,
                         const std::vector<PlaneFrame>& planes,
                         const ObservationSet& observations,
                         const RendererConfig& config,
                         std::vector<Vec3>* grad) {
  double loss = 0.0;
  for (const PlaneFrame& plane : planes) {
    const ViewObservation& obs = observations.require(plane.view, frame);
    if (grad) {
      loss += boundary_loss_with_gradient(vertices, plane, obs, config, *grad);
    } else {
      loss += boundary_loss(splat_probability_map(vertices, plane, config),
                            obs);
    }
  }
  return loss;
}

RenderLossResult render_loss(const MeshSequence& sequence,
                             const std::vector<PlaneFrame>& planes,
                             const ObservationSet& observations,
                             const RendererConfig& config, int threads) {
  config.validate();
  const int n_frames = sequence.frame_count();
  const int n_vertices = sequence.vertex_count();
  // Fail fast on any missing (plane, frame) pair.
  for (const PlaneFrame& plane : planes)
    for (int t = 0; t < n_frames; ++t) observations.require(plane.view, t);

  RenderLossResult result;
  result.gradient.assign(n_frames,
                         std::vector<Vec3>(n_vertices, Vec3::Zero()));
  std::vector<double> frame_losses(n_frames, 0.0);

  parallel_indexed(n_frames, threads, [&](int t) {
    frame_losses[t] = frame_render_loss(sequence.frames[t], t, planes,
                                        observations, config,
                                        &result.gradient[t]);
  });

  // Fixed-order reduction: mean over frames.
  double total = 0.0;
  for (int t = 0; t < n_frames; ++t) total += frame_losses[t];
  result.loss = total / n_frames;
  const double scale = 1.0 / n_frames;
  for (auto& frame_grad : result.gradient)
    for (Vec3& g : frame_grad) g *= scale;
  return result;
}

}  // namespace heart4d
