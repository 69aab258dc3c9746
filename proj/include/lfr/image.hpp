#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lfr {

// Dense H x W x C raster of doubles, row-major with interleaved channels.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels = 1, double fill = 0.0);
  Image(int height, int width, int channels, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  std::size_t index(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  bool operator==(const Image&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Clamp-to-edge bilinear cell lookup shared by every resampling routine.
//
// For a coordinate inside [0, n-1] the cell is [i0, i0+1] with fraction
// f in (0, 1]; integer coordinates resolve to the cell on their low side.
// Outside the range the coordinate is clamped and `interior` is false, which
// zeroes the derivative along that axis.
struct AxisCell {
  int i0 = 0;
  double f = 0.0;
  bool interior = false;
};

inline AxisCell axis_cell(double s, int n) {
  if (s <= 0.0) return {0, 0.0, false};
  if (s > static_cast<double>(n - 1)) return {n - 2, 1.0, false};
  int i0 = static_cast<int>(s);
  if (static_cast<double>(i0) == s) --i0;
  return {i0, s - i0, true};
}

struct Bilinear {
  AxisCell y;
  AxisCell x;
};

inline Bilinear bilinear_cell(double sy, double sx, int height, int width) {
  return {axis_cell(sy, height), axis_cell(sx, width)};
}

inline double sample(const Image& img, const Bilinear& cell, int c = 0) {
  const double fy = cell.y.f;
  const double fx = cell.x.f;
  const double v00 = img.at(cell.y.i0, cell.x.i0, c);
  const double v01 = img.at(cell.y.i0, cell.x.i0 + 1, c);
  const double v10 = img.at(cell.y.i0 + 1, cell.x.i0, c);
  const double v11 = img.at(cell.y.i0 + 1, cell.x.i0 + 1, c);
  return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * ((1.0 - fx) * v10 + fx * v11);
}

// Sample channel c of img at (sy, sx).
inline double sample(const Image& img, double sy, double sx, int c = 0) {
  return sample(img, bilinear_cell(sy, sx, img.height(), img.width()), c);
}

// Partial derivatives of the bilinear interpolant at the cell position.
// Zero along an axis where the coordinate was clamped.
struct SampleGrad {
  double dy = 0.0;
  double dx = 0.0;
};
inline SampleGrad sample_grad(const Image& img, const Bilinear& cell, int c = 0) {
  const double fy = cell.y.f;
  const double fx = cell.x.f;
  const double v00 = img.at(cell.y.i0, cell.x.i0, c);
  const double v01 = img.at(cell.y.i0, cell.x.i0 + 1, c);
  const double v10 = img.at(cell.y.i0 + 1, cell.x.i0, c);
  const double v11 = img.at(cell.y.i0 + 1, cell.x.i0 + 1, c);
  SampleGrad g;
  if (cell.y.interior) g.dy = (1.0 - fx) * (v10 - v00) + fx * (v11 - v01);
  if (cell.x.interior) g.dx = (1.0 - fy) * (v01 - v00) + fy * (v11 - v10);
  return g;
}

// 2x2 box-filter downsampling; odd trailing rows/columns are dropped.
Image downsample2(const Image& img);

// Bilinear resize of a single-channel map to (height, width), treating the
// source as the 2x box-downsampled version of the target grid.
Image upsample2_to(const Image& img, int height, int width);

// Central-difference gradient magnitude, clamp-to-edge, averaged over channels.
Image gradient_magnitude(const Image& img);

}  // namespace lfr
