#pragma once

#include <vector>

#include "lfr/image.hpp"
#include "lfr/light_field.hpp"

namespace lfr {

// Output clamp on disparity magnitude, in pixels per unit angular step.
inline constexpr double kDefaultDMax = 10.0;

// Per-view, per-pixel disparity D(x, v): pixels of displacement per unit
// angular step, relative to the immediate neighbouring view.
class DisparityField {
 public:
  DisparityField() = default;
  DisparityField(int size_u, int size_v, int height, int width, double fill = 0.0);
  DisparityField(int size_u, int size_v, int height, int width, std::vector<double> values);

  static DisparityField like(const LightField& lf, double fill = 0.0) {
    return DisparityField(lf.size_u(), lf.size_v(), lf.height(), lf.width(), fill);
  }

  const AngularGrid& grid() const { return grid_; }
  int size_u() const { return grid_.size_u; }
  int size_v() const { return grid_.size_v; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }

  double& at(AngularOffset q, int y, int x) { return values_[index(q, y, x)]; }
  double at(AngularOffset q, int y, int x) const { return values_[index(q, y, x)]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  // Single-channel image of the disparity map at q.
  Image map(AngularOffset q) const;
  void set_map(AngularOffset q, const Image& m);

  bool matches(const LightField& lf) const {
    return grid_ == lf.grid() && height_ == lf.height() && width_ == lf.width();
  }
  bool same_extents(const DisparityField& o) const {
    return grid_ == o.grid_ && height_ == o.height_ && width_ == o.width_;
  }

  // Finite and within [-d_max, d_max]; throws ExtentError.
  void validate(double d_max = kDefaultDMax) const;
  // Clamp every value into [-d_max, d_max].
  void project(double d_max);

  bool operator==(const DisparityField&) const = default;

 private:
  std::size_t index(AngularOffset q, int y, int x) const {
    return static_cast<std::size_t>(grid_.storage_index(q)) * plane_size() +
           static_cast<std::size_t>(y) * width_ + x;
  }

  AngularGrid grid_;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

// Backward warp of the centerview to viewpoint q: the output at (y, x) samples
// the center at (y + q_u * D(y, x), x + q_v * D(y, x)), bilinear, clamp-to-edge.
// Positive disparity therefore marks points in front of the focal plane: they
// move against the viewpoint offset.
Image warp_view(const Image& center, const Image& disp, AngularOffset q);

// Warp the center to every view using that view's disparity map.
LightField render_lf(const Image& center, const DisparityField& dfield);

// D(x - q * D(x, v), v + q): the map at view v + q resampled along the
// displacement predicted by view v.
Image warp_consistency_sample(const DisparityField& dfield, AngularOffset v, AngularOffset q);

// d/dD of sum(upstream .* warp_view(center, disp, q)), per pixel. Exact for
// the piecewise-bilinear interpolant away from integer sample coordinates.
Image warp_view_grad(const Image& center, const Image& disp, AngularOffset q, const Image& upstream);

}  // namespace lfr
