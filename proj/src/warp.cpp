#include "lfr/warp.hpp"

#include <algorithm>
#include <cmath>

#include "lfr/error.hpp"

namespace lfr {

DisparityField::DisparityField(int size_u, int size_v, int height, int width, double fill)
    : grid_{size_u, size_v}, height_(height), width_(width) {
  if (size_u < 1 || size_v < 1 || size_u % 2 == 0 || size_v % 2 == 0) {
    throw ExtentError("disparity field angular extents must be odd");
  }
  if (height < 2 || width < 2) throw ExtentError("disparity field spatial extents must be >= 2");
  values_.assign(static_cast<std::size_t>(grid_.count()) * plane_size(), fill);
}

DisparityField::DisparityField(int size_u, int size_v, int height, int width,
                               std::vector<double> values)
    : DisparityField(size_u, size_v, height, width) {
  if (values.size() != values_.size()) throw ExtentError("disparity payload size does not match extents");
  values_ = std::move(values);
}

Image DisparityField::map(AngularOffset q) const {
  grid_.check(q);
  const auto first = values_.begin() + static_cast<std::ptrdiff_t>(grid_.storage_index(q) * plane_size());
  return Image(height_, width_, 1,
               std::vector<double>(first, first + static_cast<std::ptrdiff_t>(plane_size())));
}

void DisparityField::set_map(AngularOffset q, const Image& m) {
  grid_.check(q);
  if (m.height() != height_ || m.width() != width_ || m.channels() != 1) {
    throw ExtentError("disparity map extents do not match field");
  }
  std::copy(m.data().begin(), m.data().end(),
            values_.begin() + static_cast<std::ptrdiff_t>(grid_.storage_index(q) * plane_size()));
}

void DisparityField::validate(double d_max) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || std::abs(values_[i]) > d_max) {
      throw ExtentError("disparity value " + std::to_string(values_[i]) + " at index " +
                        std::to_string(i) + " outside [-" + std::to_string(d_max) + ", " +
                        std::to_string(d_max) + "]");
    }
  }
}

void DisparityField::project(double d_max) {
  for (double& v : values_) v = std::clamp(v, -d_max, d_max);
}

namespace {

void check_map(const Image& center, const Image& disp) {
  if (disp.height() != center.height() || disp.width() != center.width() || disp.channels() != 1) {
    throw ExtentError("disparity map extents do not match image");
  }
  if (center.height() < 2 || center.width() < 2) throw ExtentError("image extents must be >= 2");
}

}  // namespace

Image warp_view(const Image& center, const Image& disp, AngularOffset q) {
  check_map(center, disp);
  const int h = center.height();
  const int w = center.width();
  Image out(h, w, center.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = disp.at(y, x);
      const Bilinear cell = bilinear_cell(y + q.u * d, x + q.v * d, h, w);
      for (int c = 0; c < center.channels(); ++c) out.at(y, x, c) = sample(center, cell, c);
    }
  }
  return out;
}

LightField render_lf(const Image& center, const DisparityField& dfield) {
  if (center.height() != dfield.height() || center.width() != dfield.width()) {
    throw ExtentError("disparity field extents do not match centerview");
  }
  LightField lf(dfield.size_u(), dfield.size_v(), center.height(), center.width(), center.channels());
  for (const AngularOffset q : dfield.grid().offsets()) {
    lf.set_view(q, warp_view(center, dfield.map(q), q));
  }
  return lf;
}

Image warp_consistency_sample(const DisparityField& dfield, AngularOffset v, AngularOffset q) {
  const AngularGrid& g = dfield.grid();
  g.check(v);
  const AngularOffset target{v.u + q.u, v.v + q.v};
  if (!g.contains(target)) {
    throw IndexError("consistency target view " + to_string(target) + " outside angular extents");
  }
  const Image src = dfield.map(target);
  const int h = dfield.height();
  const int w = dfield.width();
  Image out(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = dfield.at(v, y, x);
      out.at(y, x) = sample(src, y - q.u * d, x - q.v * d);
    }
  }
  return out;
}

Image warp_view_grad(const Image& center, const Image& disp, AngularOffset q, const Image& upstream) {
  check_map(center, disp);
  if (!upstream.same_shape(center)) throw ExtentError("upstream gradient extents do not match image");
  const int h = center.height();
  const int w = center.width();
  Image grad(h, w, 1);
  if (q.u == 0 && q.v == 0) return grad;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = disp.at(y, x);
      const Bilinear cell = bilinear_cell(y + q.u * d, x + q.v * d, h, w);
      double acc = 0.0;
      for (int c = 0; c < center.channels(); ++c) {
        const SampleGrad sg = sample_grad(center, cell, c);
        acc += upstream.at(y, x, c) * (q.u * sg.dy + q.v * sg.dx);
      }
      grad.at(y, x) = acc;
    }
  }
  return grad;
}

}  // namespace lfr
