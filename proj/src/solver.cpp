#include "lfr/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "lfr/error.hpp"

namespace lfr {

namespace {

constexpr double kStartMagnitude = 0.05;
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr int kMaxBacktracks = 10;
constexpr double kTieTolerance = 1e-3;

struct Level {
  Image center;
  References refs;
};

LightField downsample2(const LightField& lf) {
  LightField out(lf.size_u(), lf.size_v(), lf.height() / 2, lf.width() / 2, lf.channels());
  for (const AngularOffset q : lf.grid().offsets()) out.set_view(q, lfr::downsample2(lf.view(q)));
  return out;
}

References downsample2(const References& refs) {
  if (const auto* lf = std::get_if<LightField>(&refs)) return downsample2(*lf);
  std::vector<Measurement> out;
  for (const Measurement& m : std::get<std::vector<Measurement>>(refs)) {
    out.push_back({lfr::downsample2(m.model), lfr::downsample2(m.observed)});
  }
  return out;
}

DisparityField upsample(const DisparityField& coarse, int height, int width) {
  DisparityField fine(coarse.size_u(), coarse.size_v(), height, width);
  for (const AngularOffset q : coarse.grid().offsets()) {
    Image m = upsample2_to(coarse.map(q), height, width);
    for (double& v : m.storage()) v *= 2.0;
    fine.set_map(q, m);
  }
  return fine;
}

void check_finite(double loss, int level, int iteration) {
  if (!std::isfinite(loss)) {
    throw DivergenceError("non-finite objective at pyramid level " + std::to_string(level) +
                          ", iteration " + std::to_string(iteration));
  }
}

struct LevelResult {
  DisparityField dfield;
  LossTerms terms;
  LevelTrace trace;
  int iterations = 0;
};

// Replace every view's gradient by the per-pixel mean over views, so a field
// that starts view-constant stays view-constant.
void tie_views(DisparityField& grad) {
  auto& g = grad.values();
  const std::size_t plane = grad.plane_size();
  const std::size_t views = static_cast<std::size_t>(grad.grid().count());
  for (std::size_t p = 0; p < plane; ++p) {
    double acc = 0.0;
    for (std::size_t k = 0; k < views; ++k) acc += g[k * plane + p];
    acc /= static_cast<double>(views);
    for (std::size_t k = 0; k < views; ++k) g[k * plane + p] = acc;
  }
}

LevelResult optimize_level(const Level& lv, DisparityField d, const SolverConfig& cfg, int level,
                           int branch) {
  const bool tied = level > 0;
  LevelResult res;
  res.trace.level = level;
  res.trace.height = lv.center.height();
  res.trace.width = lv.center.width();
  res.trace.branch = branch;

  d.project(cfg.d_max);
  LossAndGrad cur = total_loss_and_grad(lv.center, d, cfg, lv.refs);
  check_finite(cur.terms.total, level, 0);
  res.trace.losses.push_back(cur.terms.total);

  const std::size_t n = d.values().size();
  std::vector<double> m(n, 0.0), v(n, 0.0), dir(n, 0.0);
  double g_rms = 0.0;
  for (double g : cur.grad.values()) g_rms += g * g;
  g_rms = std::sqrt(g_rms / static_cast<double>(n));
  const double adam_eps = std::max(1e-3 * g_rms, 1e-300);

  double alpha = cfg.step_size;
  int t = 0;
  bool just_reset = false;
  for (int it = 1; it <= cfg.iters_per_level; ++it) {
    ++t;
    const double c1 = 1.0 - std::pow(kBeta1, t);
    const double c2 = 1.0 - std::pow(kBeta2, t);
    if (tied) tie_views(cur.grad);
    const auto& g = cur.grad.values();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
      dir[i] = (m[i] / c1) / (std::sqrt(v[i] / c2) + adam_eps);
    }

    bool accepted = false;
    double step = alpha;
    for (int bt = 0; bt <= kMaxBacktracks; ++bt, step *= 0.5) {
      DisparityField cand = d;
      auto& cv = cand.values();
      for (std::size_t i = 0; i < n; ++i) cv[i] -= step * dir[i];
      cand.project(cfg.d_max);
      LossAndGrad next = total_loss_and_grad(lv.center, cand, cfg, lv.refs);
      check_finite(next.terms.total, level, it);
      if (next.terms.total <= cur.terms.total) {
        d = std::move(cand);
        cur = std::move(next);
        accepted = true;
        break;
      }
    }

    if (accepted) {
      alpha = std::min(cfg.step_size, step * 1.5);
      just_reset = false;
      res.trace.losses.push_back(cur.terms.total);
      res.iterations = it;
      continue;
    }
    // The momentum direction failed; restart from the raw gradient once
    // before declaring the level converged.
    if (just_reset) break;
    std::fill(m.begin(), m.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    t = 0;
    alpha = cfg.step_size;
    just_reset = true;
    res.iterations = it;
  }
  res.dfield = std::move(d);
  res.terms = cur.terms;
  return res;
}

}  // namespace

int effective_levels(int height, int width, int requested) {
  int levels = 1;
  int side = std::min(height, width);
  while (levels < requested && side / 2 >= 8) {
    side /= 2;
    ++levels;
  }
  return levels;
}

SolveResult solve_disparity(const Image& center, const References& refs, const SolverConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  AngularGrid grid;
  if (cfg.mode == SolveMode::supervised) {
    const auto* lf = std::get_if<LightField>(&refs);
    if (lf == nullptr) throw ConfigError("supervised mode requires a reference light field");
    if (lf->height() != center.height() || lf->width() != center.width() ||
        lf->channels() != center.channels()) {
      throw ExtentError("reference light field extents do not match centerview");
    }
    grid = lf->grid();
  } else {
    const auto* ms = std::get_if<std::vector<Measurement>>(&refs);
    if (ms == nullptr) throw ConfigError("measurement mode requires coded observations");
    if (ms->empty()) throw ConfigError("at least one measurement is required");
    grid = ms->front().model.grid();
  }

  const int levels = effective_levels(center.height(), center.width(), cfg.pyramid_levels);
  std::vector<Level> pyramid;
  pyramid.push_back({center, refs});
  for (int l = 1; l < levels; ++l) {
    pyramid.push_back({downsample2(pyramid.back().center), downsample2(pyramid.back().refs)});
  }

  SolveReport report;
  const int coarsest = levels - 1;
  const Level& top = pyramid[static_cast<std::size_t>(coarsest)];
  auto start = [&](double sign) {
    return DisparityField(grid.size_u, grid.size_v, top.center.height(), top.center.width(),
                          sign * kStartMagnitude);
  };

  LevelResult best = optimize_level(top, start(1.0), cfg, coarsest, cfg.multi_start_signs ? 1 : 0);
  report.iterations += best.iterations;
  report.levels.push_back(best.trace);
  if (cfg.multi_start_signs) {
    LevelResult neg = optimize_level(top, start(-1.0), cfg, coarsest, -1);
    report.iterations += neg.iterations;
    report.levels.push_back(neg.trace);
    report.branch_loss_positive = best.terms.total;
    report.branch_loss_negative = neg.terms.total;
    const double scale = std::max(std::abs(best.terms.total), std::abs(neg.terms.total));
    report.sign_tie = std::abs(best.terms.total - neg.terms.total) <= kTieTolerance * scale;
    report.sign_branch = 1;
    if (!report.sign_tie && neg.terms.total < best.terms.total) {
      best = std::move(neg);
      report.sign_branch = -1;
    }
  }

  DisparityField d = std::move(best.dfield);
  for (int l = coarsest - 1; l >= 0; --l) {
    const Level& lv = pyramid[static_cast<std::size_t>(l)];
    LevelResult r = optimize_level(lv, upsample(d, lv.center.height(), lv.center.width()), cfg, l, 0);
    report.iterations += r.iterations;
    report.levels.push_back(r.trace);
    d = std::move(r.dfield);
  }

  for (double& v : d.values()) {
    float f = static_cast<float>(v);
    if (std::abs(static_cast<double>(f)) > cfg.d_max) f = std::nextafter(f, 0.0f);
    v = f;
  }
  report.final_terms = total_loss(center, d, cfg, refs);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(d), std::move(report)};
}

std::string to_json(const SolveReport& report, bool include_timing) {
  nlohmann::ordered_json j;
  j["schema_version"] = "1.0";
  j["iterations"] = report.iterations;
  if (include_timing) j["wall_seconds"] = report.wall_seconds;
  j["sign_branch"] = report.sign_branch;
  j["sign_tie"] = report.sign_tie;
  j["branch_loss_positive"] = report.branch_loss_positive;
  j["branch_loss_negative"] = report.branch_loss_negative;
  j["final"] = {{"data", report.final_terms.data},
                {"dc", report.final_terms.dc},
                {"tv", report.final_terms.tv},
                {"total", report.final_terms.total}};
  auto& levels = j["levels"] = nlohmann::ordered_json::array();
  for (const LevelTrace& t : report.levels) {
    levels.push_back({{"level", t.level},
                      {"height", t.height},
                      {"width", t.width},
                      {"branch", t.branch},
                      {"losses", t.losses}});
  }
  return j.dump();
}

}  // namespace lfr
