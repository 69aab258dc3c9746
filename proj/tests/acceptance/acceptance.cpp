#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "lfr/error.hpp"
#include "lfr/io.hpp"
#include "lfr/loss.hpp"
#include "lfr/metrics.hpp"
#include "lfr/rng.hpp"
#include "lfr/sensing.hpp"
#include "lfr/solver.hpp"
#include "support/gradcheck.hpp"
#include "support/scenes.hpp"

using namespace lfr;
using namespace lfr::testkit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Analytic gradient against central differences.
Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  int probes = 0, failures = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const GradInstance inst = random_grad_instance(seed, seed % 2 == 0);
    const GradCheckResult r = check_total_gradient(inst, 30, seed + 50, 1e-3, 1e-4);
    probes += r.probes;
    failures += r.failures;
    worst = std::max(worst, r.max_rel_error);
  }
  const double t = seconds_since(t0);
  return {probes >= 100 && failures == 0 && t < 30.0,
          fmt("%d probes on 5 instances, %d over 1e-4, max rel err %.2e, %.1f s", probes, failures, worst, t)};
}

// 2. simulate() against a direct triple loop, plus linearity and range.
Image brute_simulate(const LightField& lf, const CodedModel& m) {
  Image out(lf.height(), lf.width(), lf.channels());
  for (int y = 0; y < lf.height(); ++y) {
    for (int x = 0; x < lf.width(); ++x) {
      for (int c = 0; c < lf.channels(); ++c) {
        double num = 0.0, den = 0.0;
        for (int u = -lf.grid().half_u(); u <= lf.grid().half_u(); ++u) {
          for (int v = -lf.grid().half_v(); v <= lf.grid().half_v(); ++v) {
            const double w = m.weight(AngularOffset{u, v}, y, x);
            num += w * lf.at({u, v}, y, x, c);
            den += w;
          }
        }
        out.at(y, x, c) = m.normalize() ? num / den : num;
      }
    }
  }
  return out;
}

std::vector<CodedModel> all_generators(int a, int h, int w, std::uint64_t seed) {
  return {gen_clf_model(a, a, h, w, 5, seed),        gen_clf_model(a, a, h, w, 3, seed, 2, false),
          gen_aperture_model(a, a, h, w, seed),      gen_aperture_model(a, a, h, w, seed, false),
          gen_defocus_model(a, a, h, w),             gen_pinhole_model(a, a, h, w)};
}

Outcome forward_model_oracle() {
  double worst = 0.0;
  int linear_fail = 0, range_fail = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const LightField lf = random_lf(3, 3, 8, 8, seed % 2 ? 3 : 1, seed);
    for (const CodedModel& m : all_generators(3, 8, 8, seed + 1)) {
      const Image a = simulate(lf, m).data;
      const Image b = brute_simulate(lf, m);
      for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
  }
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const LightField l1 = random_lf(3, 3, 8, 8, 1, 100 + trial);
    const LightField l2 = random_lf(3, 3, 8, 8, 1, 300 + trial);
    const double alpha = 0.5 * rng.uniform(), beta = 0.5 * rng.uniform();
    LightField mix = l1;
    for (std::size_t i = 0; i < mix.storage().size(); ++i) {
      mix.storage()[i] = alpha * l1.storage()[i] + beta * l2.storage()[i];
    }
    const auto models = all_generators(3, 8, 8, 500 + trial);
    const CodedModel& m = models[trial % models.size()];
    const Image s1 = simulate(l1, m).data, s2 = simulate(l2, m).data, sm = simulate(mix, m).data;
    for (std::size_t i = 0; i < sm.size(); ++i) {
      if (std::abs(sm.data()[i] - (alpha * s1.data()[i] + beta * s2.data()[i])) > 1e-12) {
        ++linear_fail;
        break;
      }
    }
    if (m.normalize()) {
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          double lo = 1e300, hi = -1e300;
          for (const AngularOffset q : l1.grid().offsets()) {
            lo = std::min(lo, l1.at(q, y, x));
            hi = std::max(hi, l1.at(q, y, x));
          }
          if (s1.at(y, x) < lo - 1e-12 || s1.at(y, x) > hi + 1e-12) ++range_fail;
        }
      }
    }
  }
  return {worst <= 1e-6 && linear_fail == 0 && range_fail == 0,
          fmt("max |lib - brute| %.2e over 6 generators, linearity failures %d/100, range failures %d", worst,
              linear_fail, range_fail)};
}

// 3. Warp identity and exactness.
Outcome warp_exactness() {
  const Image center = random_image(16, 16, 3, 7);
  double identity = 0.0;
  for (const AngularOffset q : AngularGrid{7, 7}.offsets()) {
    const Image w = warp_view(center, Image(16, 16, 1, 0.0), q);
    for (std::size_t i = 0; i < w.size(); ++i) identity = std::max(identity, std::abs(w.data()[i] - center.data()[i]));
  }
  double ramp = 0.0;
  const double slope = 0.02, offset = 0.1;
  const Image r = ramp_x(24, 24, slope, offset);
  for (const double d : {-1.7, -0.5, 0.3, 1.0, 2.25}) {
    for (const AngularOffset q : AngularGrid{5, 5}.offsets()) {
      const Image w = warp_view(r, Image(24, 24, 1, d), q);
      for (int y = 0; y < 24; ++y) {
        const double sy = y + q.u * d;
        if (sy < 0 || sy > 23) continue;
        for (int x = 0; x < 24; ++x) {
          const double sx = x + q.v * d;
          if (sx < 0 || sx > 23) continue;
          ramp = std::max(ramp, std::abs(w.at(y, x) - (offset + slope * sx)));
        }
      }
    }
  }
  double shift = 0.0;
  const Image tex = random_image(20, 20, 1, 8);
  for (const int d : {-2, 1, 3}) {
    const Image w = warp_view(tex, Image(20, 20, 1, d), {1, -1});
    for (int y = 0; y < 20; ++y) {
      for (int x = 0; x < 20; ++x) {
        const int sy = y + d, sx = x - d;
        if (sy < 0 || sy > 19 || sx < 0 || sx > 19) continue;
        shift = std::max(shift, std::abs(w.at(y, x) - tex.at(sy, sx)));
      }
    }
  }
  return {identity <= 1e-7 && ramp <= 1e-6 && shift <= 1e-6,
          fmt("D=0 max err %.2e, ramp interior max err %.2e, integer shift max err %.2e", identity, ramp, shift)};
}

std::vector<Measurement> focdef_measurements(const LightField& lf) {
  return {{gen_defocus_model(lf.size_u(), lf.size_v(), lf.height(), lf.width()), capture_focus_defocus(lf).defocus.data}};
}

// 4. Constant-disparity planes through the focus-defocus pair.
Outcome plane_recovery() {
  const Image center = noise_texture(96, 96, 1, 11);
  const auto mask = textured_mask(center);
  bool ok = true;
  std::string detail;
  for (const double d : {-2.0, -1.0, 1.0, 2.0}) {
    const DisparityField truth(7, 7, 96, 96, d);
    const LightField lf = render_lf(center, truth);
    const FocusDefocusPair fd = capture_focus_defocus(lf);
    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult r = solve_disparity(fd.allinfocus, focdef_measurements(lf), SolverConfig{});
    const double t = seconds_since(t0);
    const double mae = masked_mae(r.dfield, truth, mask);
    const bool pass = mae <= 0.15 && t < 60.0;
    ok = ok && pass;
    detail += fmt("%sd=%+.0f MAE %.3f (%.0f s)", detail.empty() ? "" : ", ", d, mae, t);
    std::cerr << "  plane d=" << d << " mae=" << mae << " t=" << t << " s\n";
  }
  return {ok, detail};
}

// 5. Two planes of opposite sign.
Outcome sign_disambiguation() {
  const int n = 96;
  const Image front = noise_texture(n, n, 1, 21);
  const Image back = noise_texture(n, n, 1, 22);
  const auto disk = [n](double y, double x) {
    return (y - n / 2.0) * (y - n / 2.0) + (x - n / 2.0) * (x - n / 2.0) <= (n / 4.0) * (n / 4.0);
  };
  const LayeredScene s = layered_scene(front, back, disk, 2.0, -2.0, 7, 7);
  const auto mask = textured_mask(s.center);
  const auto sign_accuracy = [&](bool multi_start) {
    SolverConfig cfg;
    cfg.multi_start_signs = multi_start;
    const SolveResult r = solve_disparity(s.center, focdef_measurements(s.lf), cfg);
    std::size_t hit = 0, total = 0;
    for (const AngularOffset q : r.dfield.grid().offsets()) {
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          if (!mask[static_cast<std::size_t>(y) * n + x]) continue;
          ++total;
          hit += (r.dfield.at(q, y, x) > 0) == (s.truth.at(q, y, x) > 0);
        }
      }
    }
    return static_cast<double>(hit) / static_cast<double>(total);
  };
  const double with = sign_accuracy(true);
  const double without = sign_accuracy(false);
  return {with >= 0.95, fmt("correct sign %.1f%% with multi-start, %.1f%% without", 100 * with, 100 * without)};
}

// 6 and 7 share the procedural suite.
struct SuiteResult {
  double psnr = 0.0;
  double ssim = 0.0;
  std::map<int, double> curve;  // q_v -> mean l1 over scenes
  double mean_l1 = 0.0;
};

struct Suite {
  std::map<std::string, SuiteResult> schemes;
  bool ran = false;
};

Suite& suite() {
  static Suite s;
  if (s.ran) return s;
  s.ran = true;
  const int scenes = 10, a = 7, n = 64;
  for (int seed = 1; seed <= scenes; ++seed) {
    const ProceduralScene sc = procedural_scene(seed, a, a, n, n, 0.2, 2.0);
    const FocusDefocusPair fd = capture_focus_defocus(sc.lf);
    struct Run {
      std::string name;
      Image center;
      std::vector<Measurement> ms;
      std::set<AngularOffset> exclude;
    };
    std::vector<Run> runs;
    runs.push_back({"focdef", fd.allinfocus, focdef_measurements(sc.lf), {{0, 0}}});
    {
      const CodedModel m = gen_defocus_model(a, a, n, n);
      const CodedImage c = simulate(sc.lf, m);
      runs.push_back({"defocus-only", code_normalized_center(c, m), {{m, c.data}}, {}});
    }
    {
      const CodedModel m = gen_clf_model(a, a, n, n, 15, seed);
      const CodedImage c = simulate(sc.lf, m);
      runs.push_back({"clf", code_normalized_center(c, m), {{m, c.data}}, {}});
    }
    {
      const CodedModel m = gen_aperture_model(a, a, n, n, seed);
      const CodedImage c = simulate(sc.lf, m);
      runs.push_back({"ca", code_normalized_center(c, m), {{m, c.data}}, {}});
    }
    for (const Run& run : runs) {
      const SolveResult r = solve_disparity(run.center, run.ms, SolverConfig{});
      const LightField rec = render_lf(run.center, r.dfield);
      const EvalReport ev = evaluate(rec, sc.lf, run.exclude);
      SuiteResult& acc = s.schemes[run.name];
      acc.psnr += ev.mean_psnr / scenes;
      acc.ssim += ev.mean_ssim / scenes;
      double l1 = 0.0;
      int views = 0;
      for (const ViewErrorPoint& p : ev.l1_curve) {
        acc.curve[p.q_v] += p.mean_l1 / scenes;
        l1 += p.mean_l1 * p.views;
        views += p.views;
      }
      acc.mean_l1 += l1 / views / scenes;
      std::cerr << "  scene " << seed << " " << run.name << ": psnr " << ev.mean_psnr << " ssim " << ev.mean_ssim
                << "\n";
    }
  }
  return s;
}

Outcome reconstruction_quality() {
  const SuiteResult& f = suite().schemes.at("focdef");
  return {f.psnr >= 38.0 && f.ssim >= 0.95,
          fmt("focdef over 10 scenes: mean PSNR %.2f dB, mean SSIM %.4f", f.psnr, f.ssim)};
}

Outcome scheme_ordering() {
  const Suite& s = suite();
  bool ok = s.schemes.at("focdef").mean_l1 <= s.schemes.at("defocus-only").mean_l1;
  std::string detail = fmt("mean l1 focdef %.4f vs defocus-only %.4f", s.schemes.at("focdef").mean_l1,
                           s.schemes.at("defocus-only").mean_l1);
  for (const auto& [name, r] : s.schemes) {
    const double center = r.curve.at(0);
    const double edge = std::max(r.curve.begin()->second, r.curve.rbegin()->second);
    const double low = std::min(r.curve.begin()->second, r.curve.rbegin()->second);
    ok = ok && low >= center;
    detail += fmt("; %s edge %.4f/%.4f center %.4f", name.c_str(), low, edge, center);
  }
  return {ok, detail};
}

// 8. Loss composition.
Outcome loss_composition() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const GradInstance inst = random_grad_instance(seed, seed % 2 == 0);
    SolverConfig cfg = inst.cfg;
    cfg.lambda_dc = 0.008;
    cfg.lambda_tv = 0.01;
    const double total = total_loss(inst.center, inst.dfield, cfg, inst.refs).total;
    double data = 0.0;
    if (const auto* lf = std::get_if<LightField>(&inst.refs)) {
      data = loss_rec(render_lf(inst.center, inst.dfield), *lf);
    } else {
      data = loss_measurement(inst.center, inst.dfield, std::get<std::vector<Measurement>>(inst.refs));
    }
    const double expected = data + 0.008 * loss_dc(inst.dfield) + 0.01 * loss_tv(inst.dfield);
    worst = std::max(worst, std::abs(total - expected) / std::abs(expected));
  }
  return {worst <= 1e-9, fmt("max relative deviation %.2e over 10 instances", worst)};
}

// 9. Determinism and format round trips.
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool same_tree(const fs::path& a, const fs::path& b, int& files) {
  std::vector<fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  }
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  files = static_cast<int>(fa.size());
  if (fa != fb || fa.empty()) return false;
  return std::all_of(fa.begin(), fa.end(), [&](const fs::path& p) { return slurp(a / p) == slurp(b / p); });
}

Outcome determinism_and_io() {
  const fs::path root = fs::temp_directory_path() / "lfr_acceptance_io";
  fs::remove_all(root);
  fs::create_directories(root);
  const LightField lf = render_lf(noise_texture(32, 32, 3, 5), DisparityField(5, 5, 32, 32, 0.9));
  io::save_lf(lf, root / "lf");

  bool cli_ok = true;
  int files = 0;
  for (const std::string scheme : {"clf", "focdef"}) {
    for (const char* run : {"a", "b"}) {
      const std::string cmd = std::string("\"") + LFR_CLI_PATH + "\" simulate --pipeline --seed 17 --scheme " + scheme +
                              " --lf \"" + (root / "lf").string() + "\" --out \"" +
                              (root / (scheme + run)).string() + "\" > /dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      cli_ok = cli_ok && WIFEXITED(status) && WEXITSTATUS(status) == 0;
    }
    int n = 0;
    cli_ok = cli_ok && same_tree(root / (scheme + "a"), root / (scheme + "b"), n);
    files += n;
  }

  const LightField back = io::load_lf(root / "lf");
  double lf_err = 0.0;
  for (std::size_t i = 0; i < lf.storage().size(); ++i) lf_err = std::max(lf_err, std::abs(back.storage()[i] - lf.storage()[i]));

  DisparityField d = random_dfield(5, 5, 16, 16, 3, -5, 5);
  for (double& v : d.values()) v = static_cast<float>(v);
  io::save_disparity(d, root / "disp");
  const bool disp_ok = io::load_disparity(root / "disp") == d;

  const CodedModel m = gen_clf_model(5, 5, 32, 32, 15, 8);
  const CodedImage c = simulate(lf, m);
  io::save_coded(c, root / "c.pfm");
  io::save_model(m, root / "c.lfcm");
  const CodedImage cb = io::load_coded(root / "c.pfm");
  bool coded_ok = cb.provenance_known && cb.provenance == m.params() && io::load_model(root / "c.lfcm") == m;
  for (std::size_t i = 0; i < c.data.size(); ++i) {
    coded_ok = coded_ok && cb.data.data()[i] == static_cast<float>(c.data.data()[i]);
  }
  fs::remove_all(root);
  const bool ok = cli_ok && lf_err <= 0.5 / 65535 + 1e-12 && disp_ok && coded_ok;
  return {ok, fmt("CLI reruns byte-identical: %s (%d files); LF max quantization err %.2e (bound %.2e); disparity "
                  "bit-exact: %s; coded/model exact: %s",
                  cli_ok ? "yes" : "no", files, lf_err, 0.5 / 65535, disp_ok ? "yes" : "no", coded_ok ? "yes" : "no")};
}

// 10. Regularizer zeros.
Outcome regularizer_zeros() {
  Rng rng(99);
  double worst_dc = 0.0, worst_tv = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double v = -8.0 + 16.0 * rng.uniform();
    const DisparityField d(5, 5, 12, 12, v);
    worst_dc = std::max(worst_dc, loss_dc(d));
    DisparityField per_view(5, 5, 12, 12);
    for (const AngularOffset q : per_view.grid().offsets()) {
      per_view.set_map(q, Image(12, 12, 1, -8.0 + 16.0 * rng.uniform()));
    }
    worst_tv = std::max(worst_tv, loss_tv(per_view));
  }
  return {worst_dc <= 1e-9 && worst_tv <= 1e-9,
          fmt("50 constants: max loss_dc %.2e, max loss_tv %.2e", worst_dc, worst_tv)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"forward-model oracle", forward_model_oracle},
      {"warp identity and exactness", warp_exactness},
      {"synthetic disparity recovery", plane_recovery},
      {"sign disambiguation", sign_disambiguation},
      {"reconstruction quality", reconstruction_quality},
      {"scheme ordering", scheme_ordering},
      {"loss composition", loss_composition},
      {"determinism and I/O", determinism_and_io},
      {"regularizer zeros", regularizer_zeros},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
