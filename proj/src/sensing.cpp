#include "lfr/sensing.hpp"

#include <algorithm>
#include <cmath>

#include "lfr/error.hpp"
#include "lfr/rng.hpp"

namespace lfr {

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::clf: return "clf";
    case Scheme::coded_aperture: return "coded_aperture";
    case Scheme::defocus: return "defocus";
    case Scheme::pinhole: return "pinhole";
  }
  return "unknown";
}

Scheme scheme_from_string(std::string_view s) {
  if (s == "clf") return Scheme::clf;
  if (s == "coded_aperture") return Scheme::coded_aperture;
  if (s == "defocus") return Scheme::defocus;
  if (s == "pinhole") return Scheme::pinhole;
  throw FormatError("unknown coding scheme '" + std::string(s) + "'");
}

CodedModel::CodedModel(ModelParams params, std::vector<float> weights)
    : params_(std::move(params)), weights_(std::move(weights)) {
  const AngularGrid g = grid();
  if (g.size_u < 1 || g.size_v < 1 || g.size_u % 2 == 0 || g.size_v % 2 == 0) {
    throw ExtentError("coded model angular extents must be odd");
  }
  if (params_.height < 2 || params_.width < 2) throw ExtentError("coded model spatial extents must be >= 2");
  const std::size_t expected = static_cast<std::size_t>(g.count()) * params_.height * params_.width;
  if (weights_.size() != expected) throw ExtentError("coded model payload size does not match extents");
  for (float w : weights_) {
    if (!(w >= 0.0f && w <= 1.0f)) throw ExtentError("coded model weight outside [0, 1]");
  }
}

bool CodedModel::matches(const LightField& lf) const {
  return params_.size_u == lf.size_u() && params_.size_v == lf.size_v() &&
         params_.height == lf.height() && params_.width == lf.width();
}

namespace {

void check_angular(int size_u, int size_v) {
  if (size_u < 1 || size_v < 1 || size_u % 2 == 0 || size_v % 2 == 0) {
    throw ConfigError("angular extents must be odd and >= 1");
  }
}

CodedModel constant_per_view(ModelParams params, const std::vector<float>& per_view) {
  const std::size_t plane = static_cast<std::size_t>(params.height) * params.width;
  std::vector<float> weights(per_view.size() * plane);
  for (std::size_t v = 0; v < per_view.size(); ++v) {
    std::fill_n(weights.begin() + static_cast<std::ptrdiff_t>(v * plane), plane, per_view[v]);
  }
  return CodedModel(std::move(params), std::move(weights));
}

int positive_mod(int a, int m) {
  const int r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace

CodedModel gen_clf_model(int size_u, int size_v, int height, int width, int tile,
                         std::uint64_t seed, int shift_per_view, bool normalize) {
  check_angular(size_u, size_v);
  if (tile < 1) throw ConfigError("clf tile must be >= 1");
  if (tile > std::min(height, width)) {
    throw ConfigError("clf tile " + std::to_string(tile) + " exceeds sensor extent " +
                      std::to_string(std::min(height, width)));
  }
  Rng rng(seed);
  std::vector<float> code(static_cast<std::size_t>(tile) * tile);
  for (float& c : code) c = static_cast<float>(std::clamp(0.5 + 0.25 * rng.gaussian(), 0.0, 1.0));

  ModelParams p{Scheme::clf, size_u, size_v, height, width, tile, seed, shift_per_view, normalize,
                std::string(Rng::kVersion)};
  const AngularGrid g{size_u, size_v};
  std::vector<float> weights(static_cast<std::size_t>(g.count()) * height * width);
  std::size_t k = 0;
  for (const AngularOffset q : g.offsets()) {
    for (int y = 0; y < height; ++y) {
      const int ty = positive_mod(y + shift_per_view * q.u, tile);
      for (int x = 0; x < width; ++x) {
        weights[k++] = code[static_cast<std::size_t>(ty) * tile +
                            positive_mod(x + shift_per_view * q.v, tile)];
      }
    }
  }
  return CodedModel(std::move(p), std::move(weights));
}

CodedModel gen_aperture_model(int size_u, int size_v, int height, int width, std::uint64_t seed,
                              bool normalize) {
  check_angular(size_u, size_v);
  Rng rng(seed);
  std::vector<float> per_view(static_cast<std::size_t>(size_u) * size_v);
  for (float& w : per_view) w = static_cast<float>(rng.uniform());
  ModelParams p{Scheme::coded_aperture, size_u, size_v, height, width, 0, seed, 0, normalize,
                std::string(Rng::kVersion)};
  return constant_per_view(std::move(p), per_view);
}

CodedModel gen_defocus_model(int size_u, int size_v, int height, int width) {
  check_angular(size_u, size_v);
  const std::size_t n = static_cast<std::size_t>(size_u) * size_v;
  std::vector<float> per_view(n, static_cast<float>(1.0 / static_cast<double>(n)));
  ModelParams p{Scheme::defocus, size_u, size_v, height, width, 0, 0, 0, true, "fixed/1"};
  return constant_per_view(std::move(p), per_view);
}

CodedModel gen_pinhole_model(int size_u, int size_v, int height, int width) {
  check_angular(size_u, size_v);
  const AngularGrid g{size_u, size_v};
  std::vector<float> per_view(static_cast<std::size_t>(g.count()), 0.0f);
  per_view[static_cast<std::size_t>(g.storage_index({0, 0}))] = 1.0f;
  ModelParams p{Scheme::pinhole, size_u, size_v, height, width, 0, 0, 0, true, "fixed/1"};
  return constant_per_view(std::move(p), per_view);
}

CodedModel regenerate(const ModelParams& p) {
  CodedModel m;
  switch (p.scheme) {
    case Scheme::clf:
      m = gen_clf_model(p.size_u, p.size_v, p.height, p.width, p.tile, p.seed, p.shift_per_view,
                        p.normalize);
      break;
    case Scheme::coded_aperture:
      m = gen_aperture_model(p.size_u, p.size_v, p.height, p.width, p.seed, p.normalize);
      break;
    case Scheme::defocus: m = gen_defocus_model(p.size_u, p.size_v, p.height, p.width); break;
    case Scheme::pinhole: m = gen_pinhole_model(p.size_u, p.size_v, p.height, p.width); break;
  }
  if (!p.generator_version.empty() && m.params().generator_version != p.generator_version) {
    throw FormatError("model generator version '" + p.generator_version +
                      "' is not reproducible by this build ('" + m.params().generator_version + "')");
  }
  return m;
}

CodedModel downsample2(const CodedModel& model) {
  ModelParams p = model.params();
  p.height = model.height() / 2;
  p.width = model.width() / 2;
  const int views = model.grid().count();
  std::vector<float> weights(static_cast<std::size_t>(views) * p.height * p.width);
  std::size_t k = 0;
  for (int v = 0; v < views; ++v) {
    for (int y = 0; y < p.height; ++y) {
      for (int x = 0; x < p.width; ++x) {
        const double sum = static_cast<double>(model.weight(v, 2 * y, 2 * x)) +
                           model.weight(v, 2 * y, 2 * x + 1) + model.weight(v, 2 * y + 1, 2 * x) +
                           model.weight(v, 2 * y + 1, 2 * x + 1);
        weights[k++] = static_cast<float>(0.25 * sum);
      }
    }
  }
  return CodedModel(std::move(p), std::move(weights));
}

CodedImage simulate(const LightField& lf, const CodedModel& model) {
  if (!model.matches(lf)) {
    throw ExtentError("coded model extents do not match light field");
  }
  const int h = lf.height();
  const int w = lf.width();
  const int ch = lf.channels();
  const std::vector<AngularOffset> offsets = lf.grid().offsets();
  CodedImage out;
  out.data = Image(h, w, ch);
  out.provenance = model.params();
  out.normalized = model.normalize();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double weight_sum = 0.0;
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t v = 0; v < offsets.size(); ++v) {
          acc += static_cast<double>(model.weight(static_cast<int>(v), y, x)) * lf.at(offsets[v], y, x, c);
        }
        out.data.at(y, x, c) = acc;
      }
      if (!model.normalize()) continue;
      for (std::size_t v = 0; v < offsets.size(); ++v) weight_sum += model.weight(static_cast<int>(v), y, x);
      if (!(weight_sum > 0.0)) {
        throw ExtentError("zero weight sum at pixel (" + std::to_string(y) + "," + std::to_string(x) +
                          ") with normalization enabled");
      }
      for (int c = 0; c < ch; ++c) out.data.at(y, x, c) /= weight_sum;
    }
  }
  return out;
}

FocusDefocusPair capture_focus_defocus(const LightField& lf) {
  return {get_view(lf, {0, 0}),
          simulate(lf, gen_defocus_model(lf.size_u(), lf.size_v(), lf.height(), lf.width()))};
}

Image code_normalized_center(const CodedImage& coded, const CodedModel& model) {
  if (coded.data.height() != model.height() || coded.data.width() != model.width()) {
    throw ExtentError("coded image extents do not match model");
  }
  Image out = coded.data;
  if (coded.normalized) return out;
  const int views = model.grid().count();
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      double s = 0.0;
      for (int v = 0; v < views; ++v) s += model.weight(v, y, x);
      for (int c = 0; c < out.channels(); ++c) out.at(y, x, c) = s > 0.0 ? out.at(y, x, c) / s : 0.0;
    }
  }
  return out;
}

}  // namespace lfr
