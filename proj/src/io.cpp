#include "lfr/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lfr/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace lfr::io {

namespace {

constexpr const char* kLfFormat = "lfr-lightfield";
constexpr const char* kDispFormat = "lfr-disparity";
constexpr const char* kCodedFormat = "lfr-coded";
constexpr const char* kModelMagic = "LFCM";

std::string view_name(const char* prefix, const char* ext, int row, int col) {
  return std::string(prefix) + "_" + std::to_string(row) + "_" + std::to_string(col) + ext;
}

// Unique suffix for temporary files so concurrent writers never share one.
std::string temp_suffix() {
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  std::ostringstream os;
  os << ".tmp-" << std::hex << gen();
  return os.str();
}

void check_major(const json& j, const std::string& what) {
  if (!j.contains("format_version") || !j["format_version"].is_string()) {
    throw FormatError(what + ": missing format_version");
  }
  const std::string v = j["format_version"].get<std::string>();
  int major = -1;
  try {
    major = std::stoi(v.substr(0, v.find('.')));
  } catch (const std::exception&) {
    throw FormatError(what + ": malformed format_version '" + v + "'");
  }
  if (major != kFormatMajor) {
    throw FormatError(what + ": unsupported format_version '" + v + "'");
  }
}

json parse_json_file(const fs::path& path) {
  const std::vector<unsigned char> bytes = read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw FormatError(what + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(what + ": field '" + key + "' has the wrong type");
  }
}

void check_odd_extents(int su, int sv, const std::string& what) {
  if (su < 1 || sv < 1 || su % 2 == 0 || sv % 2 == 0) {
    throw ExtentError(what + ": angular extents must be odd and positive, got " +
                      std::to_string(su) + "x" + std::to_string(sv));
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_f32(std::vector<unsigned char>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

float get_f32(const unsigned char* p, bool little) {
  std::uint32_t v = get_u32(p);
  if (!little) v = (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
  return std::bit_cast<float>(v);
}

float to_float_checked(double v, const std::string& what) {
  if (!std::isfinite(v)) throw ExtentError(what + ": non-finite value");
  return static_cast<float>(v);
}

// PNG codec via libpng memory callbacks.

struct PngReadState {
  const std::vector<unsigned char>* bytes;
  std::size_t pos;
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err != nullptr) *err = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void png_write_fn(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_flush_fn(png_structp) {}

void png_read_fn(png_structp png, png_bytep data, png_size_t len) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->pos + len > st->bytes->size()) png_error(png, "unexpected end of file");
  std::memcpy(data, st->bytes->data() + st->pos, len);
  st->pos += len;
}

std::vector<unsigned char> encode_png16(const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw ExtentError("PNG output supports 1 or 3 channels");
  }
  const int w = img.width(), h = img.height(), c = img.channels();
  std::vector<unsigned char> rows(static_cast<std::size_t>(h) * w * c * 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!std::isfinite(img.data()[i])) throw ExtentError("PNG output: non-finite value");
    const double v = std::clamp(img.data()[i], 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    rows[2 * i] = static_cast<unsigned char>(q >> 8);
    rows[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
  }

  std::vector<unsigned char> out;
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (png == nullptr) throw IoError("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng: " + err);
  }
  png_set_write_fn(png, &out, png_write_fn, png_flush_fn);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 16,
               c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(w) * c * 2;
  for (int y = 0; y < h; ++y) png_write_row(png, rows.data() + y * stride);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Image decode_png(const std::vector<unsigned char>& bytes, const std::string& what) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw FormatError(what + ": not a PNG file");
  }
  PngReadState st{&bytes, 0};
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (png == nullptr) throw IoError("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  std::vector<unsigned char> rows;
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(what + ": " + err);
  }
  png_set_read_fn(png, &st, png_read_fn);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int c = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  rows.resize(stride * h);
  for (int y = 0; y < h; ++y) png_read_row(png, rows.data() + y * stride, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (c != 1 && c != 3) throw FormatError(what + ": unsupported channel count " + std::to_string(c));
  Image img(h, w, c);
  auto data = img.data();
  const std::size_t n = static_cast<std::size_t>(w) * c;
  for (int y = 0; y < h; ++y) {
    const unsigned char* row = rows.data() + y * stride;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = depth == 16 ? ((row[2 * i] << 8) | row[2 * i + 1]) / 65535.0 : row[i] / 255.0;
      data[y * n + i] = v;
    }
  }
  return img;
}

std::vector<unsigned char> encode_pfm(const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw ExtentError("PFM output supports 1 or 3 channels");
  }
  const std::string header = std::string(img.channels() == 1 ? "Pf" : "PF") + "\n" +
                             std::to_string(img.width()) + " " + std::to_string(img.height()) +
                             "\n-1.0\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.reserve(out.size() + img.size() * 4);
  const int c = img.channels();
  for (int y = img.height() - 1; y >= 0; --y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int k = 0; k < c; ++k) put_f32(out, to_float_checked(img.at(y, x, k), "PFM output"));
    }
  }
  return out;
}

Image decode_pfm(const std::vector<unsigned char>& bytes, const std::string& what) {
  // Header: three whitespace-separated tokens, then exactly one whitespace byte.
  std::size_t pos = 0;
  std::string tokens[4];
  for (int t = 0; t < 4; ++t) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) tokens[t] += static_cast<char>(bytes[pos++]);
    if (tokens[t].empty()) throw FormatError(what + ": truncated PFM header");
  }
  ++pos;
  int c = 0;
  if (tokens[0] == "Pf") {
    c = 1;
  } else if (tokens[0] == "PF") {
    c = 3;
  } else {
    throw FormatError(what + ": bad PFM magic '" + tokens[0] + "'");
  }
  int w = 0, h = 0;
  double scale = 0.0;
  try {
    std::size_t used = 0;
    w = std::stoi(tokens[1], &used);
    if (used != tokens[1].size()) throw std::invalid_argument("width");
    h = std::stoi(tokens[2], &used);
    if (used != tokens[2].size()) throw std::invalid_argument("height");
    scale = std::stod(tokens[3], &used);
    if (used != tokens[3].size()) throw std::invalid_argument("scale");
  } catch (const std::exception&) {
    throw FormatError(what + ": malformed PFM header");
  }
  if (w <= 0 || h <= 0 || scale == 0.0 || !std::isfinite(scale)) {
    throw FormatError(what + ": malformed PFM header");
  }
  const std::size_t count = static_cast<std::size_t>(w) * h * c;
  if (bytes.size() - std::min(pos, bytes.size()) != count * 4) {
    throw FormatError(what + ": PFM payload size does not match header");
  }
  const bool little = scale < 0.0;
  Image img(h, w, c);
  const unsigned char* p = bytes.data() + pos;
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < c; ++k, p += 4) img.at(y, x, k) = get_f32(p, little);
    }
  }
  return img;
}

ordered_json params_to_json(const ModelParams& p) {
  ordered_json j;
  j["scheme"] = std::string(to_string(p.scheme));
  j["A_u"] = p.size_u;
  j["A_v"] = p.size_v;
  j["H"] = p.height;
  j["W"] = p.width;
  j["tile"] = p.tile;
  j["seed"] = p.seed;
  j["shift_per_view"] = p.shift_per_view;
  j["normalize"] = p.normalize;
  j["generator_version"] = p.generator_version;
  return j;
}

ModelParams params_from_json(const json& j, const std::string& what) {
  ModelParams p;
  p.scheme = scheme_from_string(get_field<std::string>(j, "scheme", what));
  p.size_u = get_field<int>(j, "A_u", what);
  p.size_v = get_field<int>(j, "A_v", what);
  p.height = get_field<int>(j, "H", what);
  p.width = get_field<int>(j, "W", what);
  p.tile = get_field<int>(j, "tile", what);
  p.seed = get_field<std::uint64_t>(j, "seed", what);
  p.shift_per_view = get_field<int>(j, "shift_per_view", what);
  p.normalize = get_field<bool>(j, "normalize", what);
  p.generator_version = get_field<std::string>(j, "generator_version", what);
  return p;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

void write_file_atomic(const fs::path& path, const std::vector<unsigned char>& bytes) {
  const fs::path tmp = fs::path(path).concat(temp_suffix());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string() + ": " + ec.message());
  }
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::vector<unsigned char>(text.begin(), text.end()));
}

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

void save_png16(const Image& img, const fs::path& path) { write_file_atomic(path, encode_png16(img)); }

Image load_png(const fs::path& path) { return decode_png(read_file(path), path.string()); }

void save_pfm(const Image& img, const fs::path& path) { write_file_atomic(path, encode_pfm(img)); }

Image load_pfm(const fs::path& path) { return decode_pfm(read_file(path), path.string()); }

void save_lf(const LightField& lf, const fs::path& dir) {
  ensure_dir(dir);
  const AngularGrid g = lf.grid();
  for (int r = 0; r < g.size_u; ++r) {
    for (int c = 0; c < g.size_v; ++c) {
      save_png16(lf.view(g.offset_at(r * g.size_v + c)), dir / view_name("view", ".png", r, c));
    }
  }
  ordered_json m;
  m["format"] = kLfFormat;
  m["format_version"] = kFormatVersion;
  m["angular"] = {{"size_u", g.size_u}, {"size_v", g.size_v}};
  m["spatial"] = {{"height", lf.height()}, {"width", lf.width()}};
  m["channels"] = lf.channels();
  m["value_range"] = {0.0, 1.0};
  m["encoding"] = "png16-linear";
  m["view_pattern"] = "view_{row}_{col}.png";
  m["gamma"] = "unspecified";
  write_file_atomic(dir / "manifest.json", dump(m));
}

LightField load_lf(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw IoError("missing light field manifest " + mpath.string());
  const json m = parse_json_file(mpath);
  const std::string what = mpath.string();
  check_major(m, what);
  if (get_field<std::string>(m, "format", what) != kLfFormat) {
    throw FormatError(what + ": not a light field manifest");
  }
  const json ang = get_field<json>(m, "angular", what);
  const json sp = get_field<json>(m, "spatial", what);
  const int su = get_field<int>(ang, "size_u", what);
  const int sv = get_field<int>(ang, "size_v", what);
  const int h = get_field<int>(sp, "height", what);
  const int w = get_field<int>(sp, "width", what);
  const int ch = get_field<int>(m, "channels", what);
  check_odd_extents(su, sv, what);

  std::vector<std::string> missing;
  for (int r = 0; r < su; ++r) {
    for (int c = 0; c < sv; ++c) {
      const std::string name = view_name("view", ".png", r, c);
      if (!fs::exists(dir / name)) {
        missing.push_back(name + " (index " + std::to_string(r) + "," + std::to_string(c) + ")");
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "light field " + dir.string() + " is missing " + std::to_string(missing.size()) +
                      " view file(s): ";
    for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", " : "") + missing[i];
    throw IoError(msg);
  }

  LightField lf(su, sv, h, w, ch);
  const AngularGrid g = lf.grid();
  for (int r = 0; r < su; ++r) {
    for (int c = 0; c < sv; ++c) {
      const fs::path p = dir / view_name("view", ".png", r, c);
      const Image img = load_png(p);
      if (img.height() != h || img.width() != w || img.channels() != ch) {
        throw ExtentError(p.string() + ": decoded " + std::to_string(img.height()) + "x" +
                          std::to_string(img.width()) + "x" + std::to_string(img.channels()) +
                          ", manifest declares " + std::to_string(h) + "x" + std::to_string(w) +
                          "x" + std::to_string(ch));
      }
      lf.set_view(g.offset_at(r * g.size_v + c), img);
    }
  }
  return lf;
}

void save_disparity(const DisparityField& dfield, const fs::path& dir) {
  ensure_dir(dir);
  const AngularGrid g = dfield.grid();
  for (int r = 0; r < g.size_u; ++r) {
    for (int c = 0; c < g.size_v; ++c) {
      save_pfm(dfield.map(g.offset_at(r * g.size_v + c)), dir / view_name("disp", ".pfm", r, c));
    }
  }
  ordered_json m;
  m["format"] = kDispFormat;
  m["format_version"] = kFormatVersion;
  m["angular"] = {{"size_u", g.size_u}, {"size_v", g.size_v}};
  m["spatial"] = {{"height", dfield.height()}, {"width", dfield.width()}};
  m["encoding"] = "pfm-f32-le";
  m["view_pattern"] = "disp_{row}_{col}.pfm";
  m["units"] = "pixels per unit angular offset";
  write_file_atomic(dir / "manifest.json", dump(m));
}

DisparityField load_disparity(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw IoError("missing disparity manifest " + mpath.string());
  const json m = parse_json_file(mpath);
  const std::string what = mpath.string();
  check_major(m, what);
  if (get_field<std::string>(m, "format", what) != kDispFormat) {
    throw FormatError(what + ": not a disparity manifest");
  }
  const json ang = get_field<json>(m, "angular", what);
  const json sp = get_field<json>(m, "spatial", what);
  const int su = get_field<int>(ang, "size_u", what);
  const int sv = get_field<int>(ang, "size_v", what);
  const int h = get_field<int>(sp, "height", what);
  const int w = get_field<int>(sp, "width", what);
  check_odd_extents(su, sv, what);

  DisparityField d(su, sv, h, w);
  const AngularGrid g = d.grid();
  for (int r = 0; r < su; ++r) {
    for (int c = 0; c < sv; ++c) {
      const fs::path p = dir / view_name("disp", ".pfm", r, c);
      if (!fs::exists(p)) {
        throw IoError("missing disparity file " + p.string() + " (index " + std::to_string(r) +
                      "," + std::to_string(c) + ")");
      }
      const Image img = load_pfm(p);
      if (img.height() != h || img.width() != w || img.channels() != 1) {
        throw ExtentError(p.string() + ": extents do not match manifest");
      }
      d.set_map(g.offset_at(r * g.size_v + c), img);
    }
  }
  return d;
}

fs::path sidecar_path(const fs::path& path) { return fs::path(path).concat(".json"); }

void save_coded(const CodedImage& coded, const fs::path& path) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  save_pfm(coded.data, path);
  ordered_json m;
  m["format"] = kCodedFormat;
  m["format_version"] = kFormatVersion;
  m["normalized"] = coded.normalized;
  if (coded.provenance_known) {
    m["provenance"] = params_to_json(coded.provenance);
  } else {
    m["provenance"] = nullptr;
  }
  write_file_atomic(sidecar_path(path), dump(m));
}

CodedImage load_coded(const fs::path& path) {
  CodedImage out;
  out.data = load_pfm(path);
  const fs::path side = sidecar_path(path);
  if (!fs::exists(side)) {
    out.provenance_known = false;
    return out;
  }
  const json m = parse_json_file(side);
  const std::string what = side.string();
  check_major(m, what);
  if (get_field<std::string>(m, "format", what) != kCodedFormat) {
    throw FormatError(what + ": not a coded image sidecar");
  }
  out.normalized = get_field<bool>(m, "normalized", what);
  const json prov = get_field<json>(m, "provenance", what);
  if (prov.is_null()) {
    out.provenance_known = false;
  } else {
    out.provenance = params_from_json(prov, what);
    if (out.provenance.height != out.data.height() || out.provenance.width != out.data.width()) {
      throw ExtentError(what + ": provenance extents do not match the image");
    }
  }
  return out;
}

void save_model(const CodedModel& model, const fs::path& path) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  ordered_json header;
  header["format_version"] = kFormatVersion;
  const ordered_json params = params_to_json(model.params());
  for (const auto& [k, v] : params.items()) header[k] = v;
  const std::string hs = header.dump();
  std::vector<unsigned char> out(kModelMagic, kModelMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(hs.size()));
  out.insert(out.end(), hs.begin(), hs.end());
  out.reserve(out.size() + model.weights().size() * 4);
  for (const float f : model.weights()) put_f32(out, f);
  write_file_atomic(path, out);
}

CodedModel load_model(const fs::path& path) {
  const std::vector<unsigned char> bytes = read_file(path);
  const std::string what = path.string();
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
    throw FormatError(what + ": not a coded model file");
  }
  const std::size_t hlen = get_u32(bytes.data() + 4);
  if (8 + hlen > bytes.size()) throw FormatError(what + ": truncated header");
  json header;
  try {
    header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(hlen));
  } catch (const json::exception& e) {
    throw FormatError(what + ": invalid header (" + e.what() + ")");
  }
  check_major(header, what);
  const ModelParams params = params_from_json(header, what);
  check_odd_extents(params.size_u, params.size_v, what);
  if (params.height < 1 || params.width < 1) throw FormatError(what + ": invalid spatial extents");
  const std::size_t n = static_cast<std::size_t>(params.size_u) * params.size_v * params.height * params.width;
  if (bytes.size() - 8 - hlen != n * 4) throw FormatError(what + ": payload size does not match header");
  std::vector<float> w(n);
  const unsigned char* p = bytes.data() + 8 + hlen;
  for (std::size_t i = 0; i < n; ++i, p += 4) w[i] = get_f32(p, true);
  try {
    return CodedModel(params, std::move(w));
  } catch (const ConfigError& e) {
    throw FormatError(what + ": " + e.what());
  }
}

}  // namespace lfr::io
