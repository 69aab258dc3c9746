#pragma once

#include <cmath>
#include <span>
#include <variant>
#include <vector>

#include "lfr/config.hpp"
#include "lfr/image.hpp"
#include "lfr/light_field.hpp"
#include "lfr/sensing.hpp"
#include "lfr/warp.hpp"

namespace lfr {

inline constexpr double kDefaultRobustEps = 1e-3;

// Charbonnier penalty sqrt(r^2 + eps^2) - eps and its derivative.
inline double charbonnier(double r, double eps) { return std::sqrt(r * r + eps * eps) - eps; }
inline double charbonnier_grad(double r, double eps) { return r / std::sqrt(r * r + eps * eps); }

struct RobustValue {
  double value;
  double slope;
};
inline RobustValue charbonnier_with_grad(double r, double eps) {
  const double s = std::sqrt(r * r + eps * eps);
  return {s - eps, r / s};
}

// One coded observation and the model that produced it.
struct Measurement {
  CodedModel model;
  Image observed;
};

// The 4-neighbourhood unit offsets used by the consistency term.
std::vector<AngularOffset> unit_offsets();

// Mean Charbonnier distance over every sample of two light fields.
double loss_rec(const LightField& rendered, const LightField& reference,
                double eps = kDefaultRobustEps);

// Sum over measurements of the mean Charbonnier residual between
// simulate(render_lf(center, dfield), model) and the observation.
double loss_measurement(const Image& center, const DisparityField& dfield,
                        std::span<const Measurement> measurements, double eps = kDefaultRobustEps);

// Mean Charbonnier of D(x, v) - D(x - q D(x, v), v + q) over all pixels and
// every (v, q) pair with v + q inside the angular grid.
double loss_dc(const DisparityField& dfield, std::span<const AngularOffset> q_set,
               double eps = kDefaultRobustEps);
double loss_dc(const DisparityField& dfield, double eps = kDefaultRobustEps);

// Anisotropic TV: Charbonnier of forward spatial differences, summed per view
// and divided by (views * H * W).
double loss_tv(const DisparityField& dfield, double eps = kDefaultRobustEps);

using References = std::variant<LightField, std::vector<Measurement>>;

struct LossTerms {
  double data = 0.0;  // reconstruction or measurement term
  double dc = 0.0;
  double tv = 0.0;
  double total = 0.0;
};

struct LossAndGrad {
  LossTerms terms;
  DisparityField grad;
};

// data + lambda_dc * dc + lambda_tv * tv. `refs` must hold a LightField in
// supervised mode and a non-empty measurement list in measurement mode.
LossTerms total_loss(const Image& center, const DisparityField& dfield, const SolverConfig& cfg,
                     const References& refs);
LossAndGrad total_loss_and_grad(const Image& center, const DisparityField& dfield,
                                const SolverConfig& cfg, const References& refs);

}  // namespace lfr
