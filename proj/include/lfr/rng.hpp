#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lfr {

// Seedable stream used by every code generator.
//
// Stream definition (version "mt19937_64/bm/1"):
//   * raw words come from std::mt19937_64 seeded with the 64-bit seed; the
//     standard fixes its output sequence, so the stream is portable;
//   * uniform(): (word >> 11) * 2^-53, a double in [0, 1);
//   * gaussian(): Box-Muller on consecutive uniforms u1, u2 with
//     r = sqrt(-2 ln(1 - u1)); the cosine branch r*cos(2 pi u2) is returned
//     first and the sine branch r*sin(2 pi u2) is cached for the next call.
class Rng {
 public:
  static constexpr std::string_view kVersion = "mt19937_64/bm/1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  double gaussian();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lfr
