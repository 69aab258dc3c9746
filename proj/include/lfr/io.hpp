#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lfr/image.hpp"
#include "lfr/light_field.hpp"
#include "lfr/sensing.hpp"
#include "lfr/warp.hpp"

namespace lfr::io {

// Major version accepted by every loader in this build.
inline constexpr int kFormatMajor = 1;
inline constexpr const char* kFormatVersion = "1.0";

// Write-to-temporary then rename, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<unsigned char> read_file(const std::filesystem::path& path);

// 16-bit PNG, values mapped linearly [0, 1] <-> [0, 65535] with rounding.
// 1-channel images are stored as grayscale, 3-channel as RGB. 8-bit files
// are accepted on load and scaled by 1/255.
void save_png16(const Image& img, const std::filesystem::path& path);
Image load_png(const std::filesystem::path& path);

// Portable float map: "Pf" (1 channel) or "PF" (3 channels), scale -1.0
// (little-endian), rows stored bottom to top.
void save_pfm(const Image& img, const std::filesystem::path& path);
Image load_pfm(const std::filesystem::path& path);

// Light field directory: manifest.json plus view_{row}_{col}.png per view,
// with 0-indexed storage rows/columns. The manifest is written last.
void save_lf(const LightField& lf, const std::filesystem::path& dir);
LightField load_lf(const std::filesystem::path& dir);

// Disparity directory: manifest.json plus disp_{row}_{col}.pfm per view.
// Values round-trip bit-exactly when they are representable as float.
void save_disparity(const DisparityField& dfield, const std::filesystem::path& dir);
DisparityField load_disparity(const std::filesystem::path& dir);

// Coded image: PFM payload at `path` and provenance sidecar at `path` + ".json".
// A missing sidecar is not an error; the result has provenance_known = false.
void save_coded(const CodedImage& coded, const std::filesystem::path& path);
CodedImage load_coded(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& path);

// Coded model container: "LFCM", little-endian u32 header length, JSON
// header, then the (u, v, y, x) weights as little-endian float32.
void save_model(const CodedModel& model, const std::filesystem::path& path);
CodedModel load_model(const std::filesystem::path& path);

}  // namespace lfr::io
