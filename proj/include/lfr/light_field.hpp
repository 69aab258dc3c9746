#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lfr/image.hpp"

namespace lfr {

// Viewpoint relative to the center view. `u` is the vertical angular axis and
// moves sampling along image rows (y); `v` is the horizontal angular axis and
// moves sampling along columns (x). (0, 0) is the center view.
struct AngularOffset {
  int u = 0;
  int v = 0;

  bool operator==(const AngularOffset&) const = default;
  auto operator<=>(const AngularOffset&) const = default;
};

std::string to_string(AngularOffset q);

// Angular extent bookkeeping shared by light fields, disparity fields and
// coded models. Storage index i maps to offset i - (extent - 1) / 2.
struct AngularGrid {
  int size_u = 1;
  int size_v = 1;

  int half_u() const { return (size_u - 1) / 2; }
  int half_v() const { return (size_v - 1) / 2; }
  int count() const { return size_u * size_v; }
  bool contains(AngularOffset q) const;
  // Throws IndexError naming the offending axis.
  void check(AngularOffset q) const;
  int storage_index(AngularOffset q) const { return (q.u + half_u()) * size_v + (q.v + half_v()); }
  AngularOffset offset_at(int storage) const {
    return {storage / size_v - half_u(), storage % size_v - half_v()};
  }
  // All offsets in storage order (row-major over u, then v).
  std::vector<AngularOffset> offsets() const;

  bool operator==(const AngularGrid&) const = default;
};

// 4D light field L(x, v) stored as (u, v, y, x, c), row-major.
// Invariants: odd angular extents, spatial extents >= 2, 1 or 3 channels,
// finite values in [0, 1] (checked by validate()).
class LightField {
 public:
  LightField() = default;
  LightField(int size_u, int size_v, int height, int width, int channels, double fill = 0.0);
  LightField(int size_u, int size_v, int height, int width, int channels, std::vector<double> data);

  const AngularGrid& grid() const { return grid_; }
  int size_u() const { return grid_.size_u; }
  int size_v() const { return grid_.size_v; }
  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t view_size() const { return static_cast<std::size_t>(height_) * width_ * channels_; }

  double& at(AngularOffset q, int y, int x, int c = 0) { return data_[index(q, y, x, c)]; }
  double at(AngularOffset q, int y, int x, int c = 0) const { return data_[index(q, y, x, c)]; }

  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  Image view(AngularOffset q) const;
  void set_view(AngularOffset q, const Image& img);

  bool same_extents(const LightField& other) const {
    return grid_ == other.grid_ && height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  // Range/finiteness check; throws ExtentError.
  void validate() const;

  bool operator==(const LightField&) const = default;

 private:
  std::size_t index(AngularOffset q, int y, int x, int c) const {
    return static_cast<std::size_t>(grid_.storage_index(q)) * view_size() +
           (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  void check_extents() const;

  AngularGrid grid_;
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

enum class SpatialAxis { x, y };

// Epipolar-plane image. Rows run over the varying angular axis in storage
// order, columns over the chosen spatial axis.
struct Epi {
  Image image;
  SpatialAxis axis = SpatialAxis::x;
  int fixed_spatial = 0;  // row y for an x-EPI, column x for a y-EPI
  int fixed_angular = 0;  // offset q_u for an x-EPI, q_v for a y-EPI
};

// Sub-aperture image at q; bit-identical to the stored slice.
Image get_view(const LightField& lf, AngularOffset q);

// For axis x the EPI is L(u = fixed_angular, v, y = fixed_spatial, x);
// for axis y it is L(u, v = fixed_angular, y, x = fixed_spatial).
Epi extract_epi(const LightField& lf, SpatialAxis axis, int fixed_spatial, int fixed_angular);

// Refocus: L'(x, q) = L(x + s*q, q). View q is resampled at
// (y + s*q_u, x + s*q_v) with bilinear interpolation and clamp-to-edge.
// A scene rendered at constant disparity d becomes angularly constant under
// shear(lf, -d).
LightField shear(const LightField& lf, double s);

}  // namespace lfr
