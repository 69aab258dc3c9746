#include "lfr/image.hpp"

#include <algorithm>
#include <cmath>

#include "lfr/error.hpp"

namespace lfr {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || channels < 0) throw ExtentError("negative image extent");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Image::Image(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw ExtentError("image payload size does not match extents");
  }
}

Image downsample2(const Image& img) {
  const int h = img.height() / 2;
  const int w = img.width() / 2;
  Image out(h, w, img.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        out.at(y, x, c) = 0.25 * (img.at(2 * y, 2 * x, c) + img.at(2 * y, 2 * x + 1, c) +
                                  img.at(2 * y + 1, 2 * x, c) + img.at(2 * y + 1, 2 * x + 1, c));
      }
    }
  }
  return out;
}

Image upsample2_to(const Image& img, int height, int width) {
  Image out(height, width, img.channels());
  for (int y = 0; y < height; ++y) {
    const double sy = (y - 0.5) / 2.0;
    for (int x = 0; x < width; ++x) {
      const double sx = (x - 0.5) / 2.0;
      const Bilinear cell = bilinear_cell(sy, sx, img.height(), img.width());
      for (int c = 0; c < img.channels(); ++c) out.at(y, x, c) = sample(img, cell, c);
    }
  }
  return out;
}

Image gradient_magnitude(const Image& img) {
  const int h = img.height();
  const int w = img.width();
  Image out(h, w, 1);
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(0, y - 1);
    const int yp = std::min(h - 1, y + 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(0, x - 1);
      const int xp = std::min(w - 1, x + 1);
      double acc = 0.0;
      for (int c = 0; c < img.channels(); ++c) {
        const double gy = (img.at(yp, x, c) - img.at(ym, x, c)) / std::max(1, yp - ym);
        const double gx = (img.at(y, xp, c) - img.at(y, xm, c)) / std::max(1, xp - xm);
        acc += std::sqrt(gy * gy + gx * gx);
      }
      out.at(y, x) = acc / img.channels();
    }
  }
  return out;
}

}  // namespace lfr
