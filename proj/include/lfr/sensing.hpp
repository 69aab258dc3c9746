#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lfr/image.hpp"
#include "lfr/light_field.hpp"

namespace lfr {

enum class Scheme { clf, coded_aperture, defocus, pinhole };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

// Everything needed to regenerate a model bit-for-bit.
struct ModelParams {
  Scheme scheme = Scheme::defocus;
  int size_u = 1;
  int size_v = 1;
  int height = 2;
  int width = 2;
  int tile = 0;             // clf only
  std::uint64_t seed = 0;   // clf and coded_aperture
  int shift_per_view = 0;   // clf only
  bool normalize = true;
  std::string generator_version;

  bool operator==(const ModelParams&) const = default;
};

// Per-view spatial weights f(x, v), stored (u, v, y, x) as 32-bit floats so
// the on-disk payload is lossless.
class CodedModel {
 public:
  CodedModel() = default;
  CodedModel(ModelParams params, std::vector<float> weights);

  const ModelParams& params() const { return params_; }
  AngularGrid grid() const { return {params_.size_u, params_.size_v}; }
  int height() const { return params_.height; }
  int width() const { return params_.width; }
  bool normalize() const { return params_.normalize; }

  float weight(AngularOffset q, int y, int x) const {
    return weights_[index(grid().storage_index(q), y, x)];
  }
  float weight(int view, int y, int x) const { return weights_[index(view, y, x)]; }
  const std::vector<float>& weights() const { return weights_; }

  bool matches(const LightField& lf) const;

  bool operator==(const CodedModel&) const = default;

 private:
  std::size_t index(int view, int y, int x) const {
    return (static_cast<std::size_t>(view) * params_.height + y) * params_.width + x;
  }

  ModelParams params_;
  std::vector<float> weights_;
};

// Heterodyne mask: a tile x tile code drawn from N(0.5, 0.25^2) and clipped to
// [0, 1] (row-major draws from Rng), repeated over the sensor. View q sees the
// tiled code cyclically shifted by shift_per_view * q:
//   f(y, x, q) = code[(y + s*q_u) mod tile][(x + s*q_v) mod tile].
CodedModel gen_clf_model(int size_u, int size_v, int height, int width, int tile = 15,
                         std::uint64_t seed = 0, int shift_per_view = 1, bool normalize = true);

// Coded aperture: one uniform [0, 1) draw per view in storage order, constant
// across the sensor.
CodedModel gen_aperture_model(int size_u, int size_v, int height, int width, std::uint64_t seed,
                              bool normalize = true);

// Wide aperture: every view weighted 1 / (A_u * A_v).
CodedModel gen_defocus_model(int size_u, int size_v, int height, int width);

// Narrow aperture: weight 1 at the center view, 0 elsewhere.
CodedModel gen_pinhole_model(int size_u, int size_v, int height, int width);

// Rebuild a model from recorded parameters.
CodedModel regenerate(const ModelParams& params);

// Box-filtered model for a half-resolution pyramid level.
CodedModel downsample2(const CodedModel& model);

struct CodedImage {
  Image data;
  ModelParams provenance;
  bool provenance_known = true;
  bool normalized = true;
};

// I_c(x) = sum_v f(x, v) L(x, v), divided by sum_v f(x, v) when the model
// normalizes. Views are accumulated in storage order.
CodedImage simulate(const LightField& lf, const CodedModel& model);

struct FocusDefocusPair {
  Image allinfocus;
  CodedImage defocus;
};

FocusDefocusPair capture_focus_defocus(const LightField& lf);

// Code-normalized centerview estimate: the coded image divided by the
// per-pixel weight sum (identity for normalized captures). Exact when the
// scene has zero disparity.
Image code_normalized_center(const CodedImage& coded, const CodedModel& model);

}  // namespace lfr
