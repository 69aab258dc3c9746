#include "lfr/loss.hpp"

#include <array>

#include "lfr/error.hpp"

namespace lfr {

std::vector<AngularOffset> unit_offsets() { return {{1, 0}, {-1, 0}, {0, 1}, {0, -1}}; }

double loss_rec(const LightField& rendered, const LightField& reference, double eps) {
  if (!rendered.same_extents(reference)) throw ExtentError("light field extents do not match");
  const auto& a = rendered.storage();
  const auto& b = reference.storage();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += charbonnier(a[i] - b[i], eps);
  return acc / static_cast<double>(a.size());
}

namespace {

void check_center(const Image& center, const DisparityField& dfield) {
  if (center.height() != dfield.height() || center.width() != dfield.width()) {
    throw ExtentError("centerview extents do not match disparity field");
  }
}

void check_measurements(const Image& center, std::span<const Measurement> measurements,
                        const AngularGrid& grid) {
  if (measurements.empty()) throw ConfigError("at least one measurement is required");
  for (const Measurement& m : measurements) {
    if (m.model.grid() != grid || m.model.height() != center.height() ||
        m.model.width() != center.width()) {
      throw ExtentError("coded model extents do not match disparity field");
    }
    if (!m.observed.same_shape(center)) {
      throw ExtentError("observed coded image extents do not match centerview");
    }
  }
}

// Data term against a reference light field. Adds scale * gradient to grad.
double supervised_term(const Image& center, const DisparityField& dfield, const LightField& ref,
                       double eps, DisparityField* grad, double scale) {
  if (!dfield.matches(ref) || ref.channels() != center.channels()) {
    throw ExtentError("reference light field extents do not match disparity field");
  }
  const int h = center.height();
  const int w = center.width();
  const int ch = center.channels();
  const double n = static_cast<double>(ref.storage().size());
  double acc = 0.0;
  for (const AngularOffset q : dfield.grid().offsets()) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double d = dfield.at(q, y, x);
        const Bilinear cell = bilinear_cell(y + q.u * d, x + q.v * d, h, w);
        double g = 0.0;
        for (int c = 0; c < ch; ++c) {
          const double r = sample(center, cell, c) - ref.at(q, y, x, c);
          acc += charbonnier(r, eps);
          if (grad != nullptr) {
            const SampleGrad sg = sample_grad(center, cell, c);
            g += charbonnier_grad(r, eps) * (q.u * sg.dy + q.v * sg.dx);
          }
        }
        if (grad != nullptr) grad->at(q, y, x) += scale * g / n;
      }
    }
  }
  return acc / n;
}

double measurement_term(const Image& center, const DisparityField& dfield,
                        std::span<const Measurement> measurements, double eps,
                        DisparityField* grad, double scale) {
  check_measurements(center, measurements, dfield.grid());
  const int h = center.height();
  const int w = center.width();
  const int ch = center.channels();
  const std::vector<AngularOffset> offsets = dfield.grid().offsets();
  const std::size_t views = offsets.size();
  const std::size_t plane = dfield.plane_size();
  const double n = static_cast<double>(h) * w * ch;

  // Rendered samples and, when needed, their directional derivative
  // q_u dI/dy + q_v dI/dx, laid out (view, pixel, channel).
  std::vector<double> rendered(views * plane * ch);
  std::vector<double> slope(grad != nullptr ? views * plane * ch : 0);
  for (std::size_t v = 0; v < views; ++v) {
    const AngularOffset q = offsets[v];
    const double* dv = dfield.values().data() + v * plane;
    double* out = rendered.data() + v * plane * ch;
    double* sl = grad != nullptr ? slope.data() + v * plane * ch : nullptr;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        const double d = dv[p];
        const Bilinear cell = bilinear_cell(y + q.u * d, x + q.v * d, h, w);
        for (int c = 0; c < ch; ++c) {
          out[p * ch + c] = sample(center, cell, c);
          if (sl != nullptr) {
            const SampleGrad sg = sample_grad(center, cell, c);
            sl[p * ch + c] = q.u * sg.dy + q.v * sg.dx;
          }
        }
      }
    }
  }

  std::vector<double> inv_sum(plane);
  std::vector<double> upstream(plane * ch);
  double acc = 0.0;
  for (const Measurement& m : measurements) {
    const float* wts = m.model.weights().data();
    for (std::size_t p = 0; p < plane; ++p) {
      double s = 0.0;
      if (m.model.normalize()) {
        for (std::size_t v = 0; v < views; ++v) s += wts[v * plane + p];
        if (!(s > 0.0)) throw ExtentError("zero weight sum with normalization enabled");
        inv_sum[p] = 1.0 / s;
      } else {
        inv_sum[p] = 1.0;
      }
    }
    std::vector<double> sim(plane * ch, 0.0);
    for (std::size_t v = 0; v < views; ++v) {
      const float* wv = wts + v * plane;
      const double* rv = rendered.data() + v * plane * ch;
      for (std::size_t p = 0; p < plane; ++p) {
        const double wp = wv[p];
        for (int c = 0; c < ch; ++c) sim[p * ch + c] += wp * rv[p * ch + c];
      }
    }
    const std::span<const double> obs = m.observed.data();
    double local = 0.0;
    for (std::size_t p = 0; p < plane; ++p) {
      for (int c = 0; c < ch; ++c) {
        const std::size_t i = p * ch + c;
        const RobustValue rv = charbonnier_with_grad(sim[i] * inv_sum[p] - obs[i], eps);
        local += rv.value;
        upstream[i] = rv.slope * inv_sum[p] / n;
      }
    }
    acc += local / n;
    if (grad == nullptr) continue;
    for (std::size_t v = 0; v < views; ++v) {
      const AngularOffset q = offsets[v];
      if (q.u == 0 && q.v == 0) continue;
      const float* wv = wts + v * plane;
      const double* sl = slope.data() + v * plane * ch;
      double* gv = grad->values().data() + v * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        double g = 0.0;
        for (int c = 0; c < ch; ++c) g += upstream[p * ch + c] * sl[p * ch + c];
        gv[p] += scale * wv[p] * g;
      }
    }
  }
  return acc;
}

double dc_term(const DisparityField& dfield, std::span<const AngularOffset> q_set, double eps,
               DisparityField* grad, double scale) {
  if (q_set.empty()) throw ConfigError("consistency offset set must be non-empty");
  const AngularGrid& g = dfield.grid();
  const int h = dfield.height();
  const int w = dfield.width();
  std::size_t pairs = 0;
  for (const AngularOffset v : g.offsets()) {
    for (const AngularOffset q : q_set) pairs += g.contains({v.u + q.u, v.v + q.v}) ? 1 : 0;
  }
  if (pairs == 0) return 0.0;
  const double n = static_cast<double>(pairs) * h * w;

  double acc = 0.0;
  for (const AngularOffset v : g.offsets()) {
    for (const AngularOffset q : q_set) {
      const AngularOffset t{v.u + q.u, v.v + q.v};
      if (!g.contains(t)) continue;
      const std::size_t base = static_cast<std::size_t>(g.storage_index(t)) * dfield.plane_size();
      const double* target = dfield.values().data() + base;
      const double* source = dfield.values().data() +
                             static_cast<std::size_t>(g.storage_index(v)) * dfield.plane_size();
      double* source_grad = grad != nullptr ? grad->values().data() +
                                                  static_cast<std::size_t>(g.storage_index(v)) * dfield.plane_size()
                                            : nullptr;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double d = source[static_cast<std::size_t>(y) * w + x];
          const Bilinear cell = bilinear_cell(y - q.u * d, x - q.v * d, h, w);
          const int y0 = cell.y.i0;
          const int x0 = cell.x.i0;
          const double fy = cell.y.f;
          const double fx = cell.x.f;
          const double v00 = target[static_cast<std::size_t>(y0) * w + x0];
          const double v01 = target[static_cast<std::size_t>(y0) * w + x0 + 1];
          const double v10 = target[static_cast<std::size_t>(y0 + 1) * w + x0];
          const double v11 = target[static_cast<std::size_t>(y0 + 1) * w + x0 + 1];
          const double s = (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * ((1.0 - fx) * v10 + fx * v11);
          if (grad == nullptr) {
            acc += charbonnier(d - s, eps);
            continue;
          }
          const RobustValue rv = charbonnier_with_grad(d - s, eps);
          acc += rv.value;
          const double gr = scale * rv.slope / n;
          const double sdy = cell.y.interior ? (1.0 - fx) * (v10 - v00) + fx * (v11 - v01) : 0.0;
          const double sdx = cell.x.interior ? (1.0 - fy) * (v01 - v00) + fy * (v11 - v10) : 0.0;
          // r = d - s(y - q_u d, x - q_v d)  =>  dr/dd = 1 + q_u s_y + q_v s_x
          source_grad[static_cast<std::size_t>(y) * w + x] += gr * (1.0 + q.u * sdy + q.v * sdx);
          double* tg = grad->values().data() + base;
          tg[static_cast<std::size_t>(y0) * w + x0] -= gr * (1.0 - fy) * (1.0 - fx);
          tg[static_cast<std::size_t>(y0) * w + x0 + 1] -= gr * (1.0 - fy) * fx;
          tg[static_cast<std::size_t>(y0 + 1) * w + x0] -= gr * fy * (1.0 - fx);
          tg[static_cast<std::size_t>(y0 + 1) * w + x0 + 1] -= gr * fy * fx;
        }
      }
    }
  }
  return acc / n;
}

double tv_term(const DisparityField& dfield, double eps, DisparityField* grad, double scale) {
  const int h = dfield.height();
  const int w = dfield.width();
  const double n = static_cast<double>(dfield.values().size());
  const std::size_t plane = dfield.plane_size();
  double acc = 0.0;
  for (int view = 0; view < dfield.grid().count(); ++view) {
    const double* m = dfield.values().data() + view * plane;
    double* gm = grad != nullptr ? grad->values().data() + view * plane : nullptr;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (x + 1 < w) {
          const double r = m[i + 1] - m[i];
          acc += charbonnier(r, eps);
          if (gm != nullptr) {
            const double gr = scale * charbonnier_grad(r, eps) / n;
            gm[i + 1] += gr;
            gm[i] -= gr;
          }
        }
        if (y + 1 < h) {
          const double r = m[i + w] - m[i];
          acc += charbonnier(r, eps);
          if (gm != nullptr) {
            const double gr = scale * charbonnier_grad(r, eps) / n;
            gm[i + w] += gr;
            gm[i] -= gr;
          }
        }
      }
    }
  }
  return acc / n;
}

LossTerms evaluate(const Image& center, const DisparityField& dfield, const SolverConfig& cfg,
                   const References& refs, DisparityField* grad) {
  check_center(center, dfield);
  LossTerms t;
  if (cfg.mode == SolveMode::supervised) {
    const auto* ref = std::get_if<LightField>(&refs);
    if (ref == nullptr) throw ConfigError("supervised mode requires a reference light field");
    t.data = supervised_term(center, dfield, *ref, cfg.robust_eps, grad, 1.0);
  } else {
    const auto* ms = std::get_if<std::vector<Measurement>>(&refs);
    if (ms == nullptr) throw ConfigError("measurement mode requires coded observations");
    t.data = measurement_term(center, dfield, *ms, cfg.robust_eps, grad, 1.0);
  }
  const std::vector<AngularOffset> q_set = unit_offsets();
  t.dc = dc_term(dfield, q_set, cfg.robust_eps, grad, cfg.lambda_dc);
  t.tv = tv_term(dfield, cfg.robust_eps, grad, cfg.lambda_tv);
  t.total = t.data + cfg.lambda_dc * t.dc + cfg.lambda_tv * t.tv;
  return t;
}

}  // namespace

double loss_measurement(const Image& center, const DisparityField& dfield,
                        std::span<const Measurement> measurements, double eps) {
  check_center(center, dfield);
  return measurement_term(center, dfield, measurements, eps, nullptr, 1.0);
}

double loss_dc(const DisparityField& dfield, std::span<const AngularOffset> q_set, double eps) {
  return dc_term(dfield, q_set, eps, nullptr, 1.0);
}

double loss_dc(const DisparityField& dfield, double eps) {
  const std::vector<AngularOffset> q_set = unit_offsets();
  return dc_term(dfield, q_set, eps, nullptr, 1.0);
}

double loss_tv(const DisparityField& dfield, double eps) { return tv_term(dfield, eps, nullptr, 1.0); }

LossTerms total_loss(const Image& center, const DisparityField& dfield, const SolverConfig& cfg,
                     const References& refs) {
  return evaluate(center, dfield, cfg, refs, nullptr);
}

LossAndGrad total_loss_and_grad(const Image& center, const DisparityField& dfield,
                                const SolverConfig& cfg, const References& refs) {
  LossAndGrad out;
  out.grad = DisparityField(dfield.size_u(), dfield.size_v(), dfield.height(), dfield.width());
  out.terms = evaluate(center, dfield, cfg, refs, &out.grad);
  return out;
}

}  // namespace lfr
