#pragma once

#include <set>
#include <string>
#include <vector>

#include "lfr/image.hpp"
#include "lfr/light_field.hpp"

namespace lfr {

// Reported in place of +infinity when two images are identical; also the
// upper cap on every PSNR so reports stay finite.
inline constexpr double kPsnrInfSentinel = 99.0;

// 10 log10(peak^2 / MSE), MSE pooled over all channels.
double psnr(const Image& a, const Image& b, double peak = 1.0);

// SSIM constants: 11x11 Gaussian window with sigma 1.5, K1 = 0.01,
// K2 = 0.03, dynamic range 1.
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// Mean local SSIM over every position where the window fits entirely inside
// the image, averaged across channels.
double ssim(const Image& a, const Image& b);

struct ViewScore {
  AngularOffset q;
  double psnr = 0.0;
  double ssim = 0.0;
};

// Mean absolute error of one horizontal angular column, averaged over the
// vertical angular axis.
struct ViewErrorPoint {
  int q_v = 0;
  double mean_l1 = 0.0;
  int views = 0;
};

// One point per horizontal offset that has at least one included view.
std::vector<ViewErrorPoint> per_view_error(const LightField& test, const LightField& reference,
                                           const std::set<AngularOffset>& exclude = {});

struct EvalReport {
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::vector<ViewScore> views;
  std::vector<AngularOffset> excluded;
  std::vector<ViewErrorPoint> l1_curve;
};

// Scores every view not in `exclude` (the method's inputs). Throws
// ExtentError on mismatched light fields and ConfigError when nothing is
// left to score.
EvalReport evaluate(const LightField& test, const LightField& reference,
                    const std::set<AngularOffset>& exclude = {});

std::string to_json(const EvalReport& report);

}  // namespace lfr
