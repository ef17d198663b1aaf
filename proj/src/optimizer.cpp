#include "heart4d/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "heart4d/parallel.hpp"

namespace heart4d {

void FitConfig::validate() const {
  if (lambda_mse < 0.0 || lambda_dr < 0.0)
    throw ValidationError("loss weights must be nonnegative");
  regularizers.validate();
  if (steps < 1) throw ValidationError("fit requires steps >= 1");
  if (!(learning_rate > 0.0))
    throw ValidationError("fit requires learning_rate > 0");
  if (optimizer != "adam")
    throw ValidationError("unknown optimizer '" + optimizer +
                          "' (supported: adam)");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw ValidationError("adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ValidationError("adam epsilon must be > 0");
  renderer.validate();
}

FitProblem make_fit_problem(const LabeledMesh& tmpl, int n_frames,
                            std::vector<PlaneFrame> planes,
                            ObservationSet observations) {
  validate_mesh(tmpl);
  FitProblem problem;
  problem.init = sequence_from_mesh(tmpl, n_frames);
  problem.edges = build_edge_list(tmpl);
  problem.face_pairs = adjacent_face_pairs(tmpl.faces);
  problem.planes = std::move(planes);
  problem.observations = std::move(observations);
  return problem;
}

SeqLossGrad mse_loss(const MeshSequence& pred, const MeshSequence& ref) {
  const int n = pred.frame_count();
  const int v = pred.vertex_count();
  if (n != ref.frame_count() || v != ref.vertex_count())
    throw ValidationError("mse_loss shape mismatch: pred " +
                          std::to_string(n) + "x" + std::to_string(v) +
                          ", ref " + std::to_string(ref.frame_count()) + "x" +
                          std::to_string(ref.vertex_count()));
  SeqLossGrad out;
  out.gradient.assign(n, std::vector<Vec3>(v, Vec3::Zero()));
  const double inv_count = 1.0 / (static_cast<double>(n) * v * 3.0);
  double acc = 0.0;
  for (int t = 0; t < n; ++t)
    for (int i = 0; i < v; ++i) {
      const Vec3 d = pred.frames[t][i] - ref.frames[t][i];
      acc += d.squaredNorm();
      out.gradient[t][i] = 2.0 * inv_count * d;
    }
  out.loss = acc * inv_count;
  return out;
}

double LossBreakdown::weighted_total(const FitConfig& config) const {
  double total = config.lambda_dr * dr +
                 config.regularizers.lambda_edge * edge +
                 config.regularizers.lambda_norm * norm +
                 config.regularizers.lambda_temp * temp;
  if (mse) total += config.lambda_mse * *mse;
  return total;
}

TotalLossResult total_loss(const MeshSequence& pred, const FitProblem& problem,
                           const FitConfig& config) {
  config.validate();
  const int n = pred.frame_count();
  const int v = pred.vertex_count();

  TotalLossResult result;
  result.gradient.assign(n, std::vector<Vec3>(v, Vec3::Zero()));

  // Per-frame terms (DR, edge, normal) in one deterministic parallel
  // pass; each frame owns its slots.
  struct FrameTerms {
    double dr = 0.0;
    std::vector<Vec3> dr_grad;
    LossGrad edge;
    LossGrad norm;
  };
  std::vector<FrameTerms> per_frame(n);
  parallel_indexed(n, config.threads, [&](int t) {
    FrameTerms& ft = per_frame[t];
    ft.dr_grad.assign(v, Vec3::Zero());
    ft.dr = frame_render_loss(pred.frames[t], t, problem.planes,
                              problem.observations, config.renderer,
                              &ft.dr_grad);
    ft.edge = edge_loss(pred.frames[t], problem.edges);
    ft.norm = normal_loss(pred.frames[t], pred.faces, problem.face_pairs);
  });

  LossBreakdown& bd = result.breakdown;
  const double inv_n = 1.0 / n;
  for (int t = 0; t < n; ++t) {
    bd.dr += per_frame[t].dr * inv_n;
    bd.edge += per_frame[t].edge.loss * inv_n;
    bd.norm += per_frame[t].norm.loss * inv_n;
  }

  const double w_dr = config.lambda_dr * inv_n;
  const double w_edge = config.regularizers.lambda_edge * inv_n;
  const double w_norm = config.regularizers.lambda_norm * inv_n;
  for (int t = 0; t < n; ++t)
    for (int i = 0; i < v; ++i)
      result.gradient[t][i] = w_dr * per_frame[t].dr_grad[i] +
                              w_edge * per_frame[t].edge.gradient[i] +
                              w_norm * per_frame[t].norm.gradient[i];

  if (n >= 4) {
    SeqLossGrad temp = temporal_jerk_loss(pred, config.cyclic_temporal);
    bd.temp = temp.loss;
    const double w = config.regularizers.lambda_temp;
    for (int t = 0; t < n; ++t)
      for (int i = 0; i < v; ++i)
        result.gradient[t][i] += w * temp.gradient[t][i];
  }

  if (problem.reference) {
    SeqLossGrad mse = mse_loss(pred, *problem.reference);
    bd.mse = mse.loss;
    for (int t = 0; t < n; ++t)
      for (int i = 0; i < v; ++i)
        result.gradient[t][i] += config.lambda_mse * mse.gradient[t][i];
  }

  result.total = bd.weighted_total(config);
  return result;
}

namespace {

void require_finite(const LossBreakdown& bd, int step) {
  auto check = [&](double x, const char* term) {
    if (!std::isfinite(x))
      throw NumericalError("non-finite " + std::string(term) +
                           " loss at step " + std::to_string(step));
  };
  if (bd.mse) check(*bd.mse, "mse");
  check(bd.dr, "dr");
  check(bd.edge, "edge");
  check(bd.norm, "norm");
  check(bd.temp, "temp");
}

void require_finite_gradient(const std::vector<std::vector<Vec3>>& grad,
                             int step) {
  for (const auto& frame : grad)
    for (const Vec3& g : frame)
      if (!g.allFinite())
        throw NumericalError("non-finite gradient at step " +
                             std::to_string(step));
}

TraceRow make_row(int step, const TotalLossResult& r) {
  TraceRow row;
  row.step = step;
  row.total = r.total;
  row.mse = r.breakdown.mse;
  row.dr = r.breakdown.dr;
  row.edge = r.breakdown.edge;
  row.norm = r.breakdown.norm;
  row.temp = r.breakdown.temp;
  return row;
}

}  // namespace

FitReport fit(const FitProblem& problem, const FitConfig& config) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const int n = problem.init.frame_count();
  const int v = problem.init.vertex_count();

  MeshSequence current = problem.init;
  std::vector<std::vector<Vec3>> delta(n, std::vector<Vec3>(v, Vec3::Zero()));
  std::vector<std::vector<Vec3>> m(n, std::vector<Vec3>(v, Vec3::Zero()));
  std::vector<std::vector<Vec3>> s(n, std::vector<Vec3>(v, Vec3::Zero()));

  FitReport report;
  report.trace.reserve(config.steps);

  double beta1_pow = 1.0, beta2_pow = 1.0;
  for (int step = 0; step < config.steps; ++step) {
    TotalLossResult eval = total_loss(current, problem, config);
    require_finite(eval.breakdown, step);
    require_finite_gradient(eval.gradient, step);
    report.trace.push_back(make_row(step, eval));

    beta1_pow *= config.beta1;
    beta2_pow *= config.beta2;
    const double m_corr = 1.0 / (1.0 - beta1_pow);
    const double s_corr = 1.0 / (1.0 - beta2_pow);
    for (int t = 0; t < n; ++t)
      for (int i = 0; i < v; ++i) {
        const Vec3& g = eval.gradient[t][i];
        m[t][i] = config.beta1 * m[t][i] + (1.0 - config.beta1) * g;
        s[t][i] = config.beta2 * s[t][i] +
                  (1.0 - config.beta2) * g.cwiseProduct(g);
        const Vec3 m_hat = m[t][i] * m_corr;
        const Vec3 s_hat = s[t][i] * s_corr;
        delta[t][i] -= config.learning_rate *
                       (m_hat.array() / (s_hat.array().sqrt() + config.epsilon))
                           .matrix();
        current.frames[t][i] = problem.init.frames[t][i] + delta[t][i];
      }
  }

  TotalLossResult final_eval = total_loss(current, problem, config);
  require_finite(final_eval.breakdown, config.steps);
  report.final_loss = final_eval.total;
  report.fitted = std::move(current);
  report.loss_decreased = report.final_loss < report.trace.front().total;

  if (config.steps >= 50) {
    const double prev = report.trace[config.steps - 50].total;
    report.converged = std::abs(report.final_loss - prev) <
                       1e-6 * std::max(std::abs(prev), 1e-12);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

bool GradCheckReport::passed(double rel_tol, double abs_tol) const {
  for (const TermCheck& t : terms)
    if (t.max_rel_error >= rel_tol || t.max_abs_error >= abs_tol) return false;
  return true;
}

namespace {

// Central differences are valid only where the objective is C1 within
// the probe step. The rendering loss has kinks at R = 0 (absolute
// value), at the association cutoff radius, and on bilinear cell
// boundaries; a sampled coordinate whose vertex sits within `margin`
// of any of them is redrawn.
bool dr_smooth_at(const Vec3& vertex, const std::vector<PlaneFrame>& planes,
                  const RendererConfig& config, double margin) {
  const double cutoff = association_cutoff_radius(config);
  for (const PlaneFrame& plane : planes) {
    const double signed_dist = plane.normal.dot(vertex - plane.origin);
    if (std::abs(signed_dist) < margin) return false;
    const double r = std::abs(signed_dist);
    if (std::abs(r - cutoff) < margin) return false;
    if (r < cutoff) {
      const PixelCoord pc = world_to_pixel(vertex, plane);
      const double fr = pc.row - std::floor(pc.row);
      const double fc = pc.col - std::floor(pc.col);
      const double m_px =
          margin / std::min(plane.spacing_u, plane.spacing_v);
      if (fr < m_px || fr > 1.0 - m_px || fc < m_px || fc > 1.0 - m_px)
        return false;
    }
  }
  return true;
}

}  // namespace

GradCheckReport gradcheck(const FitProblem& problem, const FitConfig& config,
                          int n_coords, double step) {
  config.validate();
  if (!(step > 0.0)) throw ValidationError("gradcheck requires step > 0");
  if (n_coords < 1) throw ValidationError("gradcheck requires n_coords >= 1");

  const MeshSequence& seq = problem.init;
  const int n = seq.frame_count();
  const int v = seq.vertex_count();
  const double inv_n = 1.0 / n;

  // Analytic per-term gradients at the evaluation point.
  struct Term {
    std::string name;
    std::vector<std::vector<Vec3>> grad;
    // Loss contribution that can change when frame t moves. Per-frame
    // terms evaluate only frame t (the untouched frames cancel in the
    // central difference); the temporal term recomputes the sequence.
    std::function<double(const MeshSequence&, int)> frame_loss;
  };
  std::vector<Term> terms;

  {
    Term dr;
    dr.name = "dr";
    RenderLossResult r = render_loss(seq, problem.planes, problem.observations,
                                     config.renderer, config.threads);
    dr.grad = std::move(r.gradient);
    dr.frame_loss = [&](const MeshSequence& s, int t) {
      return frame_render_loss(s.frames[t], t, problem.planes,
                               problem.observations, config.renderer) *
             inv_n;
    };
    terms.push_back(std::move(dr));
  }
  {
    Term edge;
    edge.name = "edge";
    edge.grad.assign(n, std::vector<Vec3>(v, Vec3::Zero()));
    for (int t = 0; t < n; ++t) {
      LossGrad lg = edge_loss(seq.frames[t], problem.edges);
      for (int i = 0; i < v; ++i) edge.grad[t][i] = lg.gradient[i] * inv_n;
    }
    edge.frame_loss = [&](const MeshSequence& s, int t) {
      return edge_loss(s.frames[t], problem.edges).loss * inv_n;
    };
    terms.push_back(std::move(edge));
  }
  {
    Term norm;
    norm.name = "norm";
    norm.grad.assign(n, std::vector<Vec3>(v, Vec3::Zero()));
    for (int t = 0; t < n; ++t) {
      LossGrad lg = normal_loss(seq.frames[t], seq.faces, problem.face_pairs);
      for (int i = 0; i < v; ++i) norm.grad[t][i] = lg.gradient[i] * inv_n;
    }
    norm.frame_loss = [&](const MeshSequence& s, int t) {
      return normal_loss(s.frames[t], s.faces, problem.face_pairs).loss *
             inv_n;
    };
    terms.push_back(std::move(norm));
  }
  if (n >= 4) {
    Term temp;
    temp.name = "temp";
    SeqLossGrad lg = temporal_jerk_loss(seq, config.cyclic_temporal);
    temp.grad = std::move(lg.gradient);
    temp.frame_loss = [&](const MeshSequence& s, int) {
      return temporal_jerk_loss(s, config.cyclic_temporal).loss;
    };
    terms.push_back(std::move(temp));
  }
  if (problem.reference) {
    Term mse;
    mse.name = "mse";
    SeqLossGrad lg = mse_loss(seq, *problem.reference);
    mse.grad = std::move(lg.gradient);
    const MeshSequence* ref = &*problem.reference;
    mse.frame_loss = [ref, inv_n, v](const MeshSequence& s, int t) {
      double acc = 0.0;
      for (int i = 0; i < v; ++i)
        acc += (s.frames[t][i] - ref->frames[t][i]).squaredNorm();
      return acc * inv_n / (v * 3.0);
    };
    terms.push_back(std::move(mse));
  }

  GradCheckReport report;
  for (const Term& t : terms) report.terms.push_back({t.name, 0, 0, 0.0, 0.0});

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> pick_frame(0, n - 1);
  std::uniform_int_distribution<int> pick_vertex(0, v - 1);
  std::uniform_int_distribution<int> pick_coord(0, 2);

  MeshSequence probe = seq;
  const double smooth_margin = 50.0 * step;
  int accepted = 0;
  int skipped = 0;
  const long attempt_cap = 100L * n_coords;
  for (long attempt = 0; accepted < n_coords && attempt < attempt_cap;
       ++attempt) {
    const int t = pick_frame(rng);
    const int i = pick_vertex(rng);
    const int k = pick_coord(rng);
    if (!problem.planes.empty() &&
        !dr_smooth_at(seq.frames[t][i], problem.planes, config.renderer,
                      smooth_margin)) {
      ++skipped;
      continue;
    }
    ++accepted;

    const double saved = probe.frames[t][i][k];
    for (size_t term_idx = 0; term_idx < terms.size(); ++term_idx) {
      const Term& term = terms[term_idx];
      probe.frames[t][i][k] = saved + step;
      const double plus = term.frame_loss(probe, t);
      probe.frames[t][i][k] = saved - step;
      const double minus = term.frame_loss(probe, t);
      probe.frames[t][i][k] = saved;

      const double fd = (plus - minus) / (2.0 * step);
      const double analytic = term.grad[t][i][k];
      const double err = std::abs(fd - analytic);
      TermCheck& tc = report.terms[term_idx];
      ++tc.n_checked;
      if (std::abs(analytic) >= 1e-10) {
        const double rel = err / std::max(std::abs(analytic), std::abs(fd));
        tc.max_rel_error = std::max(tc.max_rel_error, rel);
      } else {
        tc.max_abs_error = std::max(tc.max_abs_error, err);
      }
    }
  }
  for (TermCheck& tc : report.terms) tc.n_skipped = skipped;
  if (accepted < n_coords)
    throw NumericalError(
        "gradcheck could not find enough smooth sample coordinates (" +
        std::to_string(accepted) + " of " + std::to_string(n_coords) + ")");
  return report;
}

}  // namespace heart4d
