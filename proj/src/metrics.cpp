#include "lfr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "lfr/error.hpp"

namespace lfr {

double psnr(const Image& a, const Image& b, double peak) {
  if (!a.same_shape(b)) throw ExtentError("psnr: image shapes differ");
  if (a.empty()) throw ExtentError("psnr: empty images");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrInfSentinel;
  return std::min(kPsnrInfSentinel, 10.0 * std::log10(peak * peak / mse));
}

namespace {

std::vector<double> gaussian_window() {
  std::vector<double> k(kSsimWindow);
  const int r = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    k[i] = std::exp(-0.5 * (i - r) * (i - r) / (kSsimSigma * kSsimSigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable "valid" filtering of one channel.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int oh = h - n + 1;
  const int ow = w - n + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ExtentError("ssim: image shapes differ");
  if (a.height() < kSsimWindow || a.width() < kSsimWindow) {
    throw ExtentError("ssim: images must be at least " + std::to_string(kSsimWindow) + "x" +
                      std::to_string(kSsimWindow));
  }
  const int h = a.height();
  const int w = a.width();
  const std::vector<double> k = gaussian_window();
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  const std::size_t plane = static_cast<std::size_t>(h) * w;

  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    std::vector<double> pa(plane), pb(plane), paa(plane), pbb(plane), pab(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      pa[i] = a.data()[i * a.channels() + c];
      pb[i] = b.data()[i * b.channels() + c];
      paa[i] = pa[i] * pa[i];
      pbb[i] = pb[i] * pb[i];
      pab[i] = pa[i] * pb[i];
    }
    const auto mu_a = filter_valid(pa, h, w, k);
    const auto mu_b = filter_valid(pb, h, w, k);
    const auto e_aa = filter_valid(paa, h, w, k);
    const auto e_bb = filter_valid(pbb, h, w, k);
    const auto e_ab = filter_valid(pab, h, w, k);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i];
      const double mb = mu_b[i];
      const double va = e_aa[i] - ma * ma;
      const double vb = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total += acc / static_cast<double>(mu_a.size());
  }
  return total / a.channels();
}

std::vector<ViewErrorPoint> per_view_error(const LightField& test, const LightField& reference,
                                           const std::set<AngularOffset>& exclude) {
  if (!test.same_extents(reference)) throw ExtentError("per_view_error: light field extents differ");
  std::map<int, std::pair<double, int>> columns;
  const std::size_t n = test.view_size();
  for (const AngularOffset q : test.grid().offsets()) {
    if (exclude.contains(q)) continue;
    const std::size_t base = static_cast<std::size_t>(test.grid().storage_index(q)) * n;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(test.storage()[base + i] - reference.storage()[base + i]);
    auto& col = columns[q.v];
    col.first += acc / static_cast<double>(n);
    col.second += 1;
  }
  std::vector<ViewErrorPoint> out;
  for (const auto& [qv, col] : columns) out.push_back({qv, col.first / col.second, col.second});
  return out;
}

EvalReport evaluate(const LightField& test, const LightField& reference,
                    const std::set<AngularOffset>& exclude) {
  if (!test.same_extents(reference)) throw ExtentError("evaluate: light field extents differ");
  EvalReport report;
  for (const AngularOffset q : exclude) {
    reference.grid().check(q);
    report.excluded.push_back(q);
  }
  for (const AngularOffset q : test.grid().offsets()) {
    if (exclude.contains(q)) continue;
    const Image a = test.view(q);
    const Image b = reference.view(q);
    report.views.push_back({q, psnr(a, b), ssim(a, b)});
  }
  if (report.views.empty()) throw ConfigError("evaluate: every view is excluded");
  for (const ViewScore& s : report.views) {
    report.mean_psnr += s.psnr;
    report.mean_ssim += s.ssim;
  }
  report.mean_psnr /= static_cast<double>(report.views.size());
  report.mean_ssim /= static_cast<double>(report.views.size());
  report.l1_curve = per_view_error(test, reference, exclude);
  return report;
}

std::string to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = "1.0";
  j["psnr_inf_sentinel"] = kPsnrInfSentinel;
  j["ssim"] = {{"window", kSsimWindow}, {"sigma", kSsimSigma}, {"k1", kSsimK1}, {"k2", kSsimK2}};
  j["mean_psnr"] = report.mean_psnr;
  j["mean_ssim"] = report.mean_ssim;
  auto& views = j["views"] = nlohmann::ordered_json::array();
  for (const ViewScore& s : report.views) {
    views.push_back({{"q_u", s.q.u}, {"q_v", s.q.v}, {"psnr", s.psnr}, {"ssim", s.ssim}});
  }
  auto& excluded = j["excluded"] = nlohmann::ordered_json::array();
  for (const AngularOffset q : report.excluded) excluded.push_back({q.u, q.v});
  auto& curve = j["per_view_l1"] = nlohmann::ordered_json::array();
  for (const ViewErrorPoint& p : report.l1_curve) {
    curve.push_back({{"q_v", p.q_v}, {"mean_l1", p.mean_l1}, {"views", p.views}});
  }
  return j.dump(2);
}

}  // namespace lfr
