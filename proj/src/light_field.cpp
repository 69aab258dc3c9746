#include "lfr/light_field.hpp"

#include <cmath>

#include "lfr/error.hpp"

namespace lfr {

std::string to_string(AngularOffset q) {
  return "(" + std::to_string(q.u) + "," + std::to_string(q.v) + ")";
}

bool AngularGrid::contains(AngularOffset q) const {
  return std::abs(q.u) <= half_u() && std::abs(q.v) <= half_v();
}

void AngularGrid::check(AngularOffset q) const {
  if (std::abs(q.u) > half_u()) {
    throw IndexError("angular offset u=" + std::to_string(q.u) + " outside [" +
                     std::to_string(-half_u()) + ", " + std::to_string(half_u()) + "]");
  }
  if (std::abs(q.v) > half_v()) {
    throw IndexError("angular offset v=" + std::to_string(q.v) + " outside [" +
                     std::to_string(-half_v()) + ", " + std::to_string(half_v()) + "]");
  }
}

std::vector<AngularOffset> AngularGrid::offsets() const {
  std::vector<AngularOffset> out;
  out.reserve(count());
  for (int i = 0; i < count(); ++i) out.push_back(offset_at(i));
  return out;
}

LightField::LightField(int size_u, int size_v, int height, int width, int channels, double fill)
    : grid_{size_u, size_v}, height_(height), width_(width), channels_(channels) {
  check_extents();
  data_.assign(static_cast<std::size_t>(grid_.count()) * view_size(), fill);
}

LightField::LightField(int size_u, int size_v, int height, int width, int channels,
                       std::vector<double> data)
    : grid_{size_u, size_v}, height_(height), width_(width), channels_(channels),
      data_(std::move(data)) {
  check_extents();
  if (data_.size() != static_cast<std::size_t>(grid_.count()) * view_size()) {
    throw ExtentError("light field payload size does not match extents");
  }
  validate();
}

void LightField::check_extents() const {
  if (grid_.size_u < 1 || grid_.size_v < 1 || grid_.size_u % 2 == 0 || grid_.size_v % 2 == 0) {
    throw ExtentError("angular extents must be odd and >= 1, got " + std::to_string(grid_.size_u) +
                      "x" + std::to_string(grid_.size_v));
  }
  if (height_ < 2 || width_ < 2) {
    throw ExtentError("spatial extents must be >= 2, got " + std::to_string(height_) + "x" +
                      std::to_string(width_));
  }
  if (channels_ != 1 && channels_ != 3) {
    throw ExtentError("channels must be 1 or 3, got " + std::to_string(channels_));
  }
}

void LightField::validate() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const double v = data_[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ExtentError("light field sample " + std::to_string(i) + " = " + std::to_string(v) +
                        " outside [0, 1]");
    }
  }
}

Image LightField::view(AngularOffset q) const {
  grid_.check(q);
  const auto first = data_.begin() + static_cast<std::ptrdiff_t>(grid_.storage_index(q) * view_size());
  return Image(height_, width_, channels_,
               std::vector<double>(first, first + static_cast<std::ptrdiff_t>(view_size())));
}

void LightField::set_view(AngularOffset q, const Image& img) {
  grid_.check(q);
  if (img.height() != height_ || img.width() != width_ || img.channels() != channels_) {
    throw ExtentError("view extents do not match light field");
  }
  std::copy(img.data().begin(), img.data().end(),
            data_.begin() + static_cast<std::ptrdiff_t>(grid_.storage_index(q) * view_size()));
}

Image get_view(const LightField& lf, AngularOffset q) { return lf.view(q); }

Epi extract_epi(const LightField& lf, SpatialAxis axis, int fixed_spatial, int fixed_angular) {
  Epi epi;
  epi.axis = axis;
  epi.fixed_spatial = fixed_spatial;
  epi.fixed_angular = fixed_angular;
  const AngularGrid& g = lf.grid();
  if (axis == SpatialAxis::x) {
    if (fixed_spatial < 0 || fixed_spatial >= lf.height()) {
      throw IndexError("EPI row " + std::to_string(fixed_spatial) + " outside [0, " +
                       std::to_string(lf.height() - 1) + "]");
    }
    g.check({fixed_angular, 0});
    epi.image = Image(g.size_v, lf.width(), lf.channels());
    for (int j = 0; j < g.size_v; ++j) {
      const AngularOffset q{fixed_angular, j - g.half_v()};
      for (int x = 0; x < lf.width(); ++x) {
        for (int c = 0; c < lf.channels(); ++c) epi.image.at(j, x, c) = lf.at(q, fixed_spatial, x, c);
      }
    }
  } else {
    if (fixed_spatial < 0 || fixed_spatial >= lf.width()) {
      throw IndexError("EPI column " + std::to_string(fixed_spatial) + " outside [0, " +
                       std::to_string(lf.width() - 1) + "]");
    }
    g.check({0, fixed_angular});
    epi.image = Image(g.size_u, lf.height(), lf.channels());
    for (int i = 0; i < g.size_u; ++i) {
      const AngularOffset q{i - g.half_u(), fixed_angular};
      for (int y = 0; y < lf.height(); ++y) {
        for (int c = 0; c < lf.channels(); ++c) epi.image.at(i, y, c) = lf.at(q, y, fixed_spatial, c);
      }
    }
  }
  return epi;
}

LightField shear(const LightField& lf, double s) {
  if (!std::isfinite(s)) throw ConfigError("shear amount must be finite");
  if (s == 0.0) return lf;
  LightField out(lf.size_u(), lf.size_v(), lf.height(), lf.width(), lf.channels());
  for (const AngularOffset q : lf.grid().offsets()) {
    const Image src = lf.view(q);
    const double dy = s * q.u;
    const double dx = s * q.v;
    for (int y = 0; y < lf.height(); ++y) {
      for (int x = 0; x < lf.width(); ++x) {
        const Bilinear cell = bilinear_cell(y + dy, x + dx, lf.height(), lf.width());
        for (int c = 0; c < lf.channels(); ++c) out.at(q, y, x, c) = sample(src, cell, c);
      }
    }
  }
  return out;
}

}  // namespace lfr
