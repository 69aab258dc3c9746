#include "commands.hpp"

#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "lfr/config.hpp"
#include "lfr/error.hpp"
#include "lfr/io.hpp"
#include "lfr/light_field.hpp"
#include "lfr/metrics.hpp"
#include "lfr/sensing.hpp"
#include "lfr/solver.hpp"
#include "lfr/warp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace lfr::cli {

namespace {

constexpr const char* kRunRecordVersion = "1.0";
constexpr const char* kSimulateRecord = "simulate.json";
constexpr const char* kReconstructRecord = "reconstruct.json";

void require(const std::string& value, const char* flag, const std::string& cmd) {
  if (value.empty()) throw ConfigError(cmd + " requires " + flag);
}

void check_scheme(const std::string& s) {
  if (s != "clf" && s != "ca" && s != "focdef" && s != "defocus-only") {
    throw ConfigError("unknown scheme '" + s + "' (expected clf, ca, focdef or defocus-only)");
  }
}

// File stems of the captures each scheme produces, in measurement order.
std::vector<std::string> capture_stems(const std::string& scheme) {
  if (scheme == "focdef") return {"allinfocus", "defocus"};
  if (scheme == "defocus-only") return {"defocus"};
  return {"coded"};
}

std::string resolve_center_source(const RunSpec& spec) {
  if (!spec.center_source.empty()) {
    const std::string& s = spec.center_source;
    if (s == "baseline") return "code-normalized-baseline";
    if (s != "oracle" && s != "given-file" && s != "code-normalized-baseline") {
      throw ConfigError("unknown center source '" + s +
                        "' (expected oracle, given-file or code-normalized-baseline)");
    }
    return s;
  }
  if (!spec.center.empty()) return "given-file";
  if (!spec.lf.empty()) return "oracle";
  return "code-normalized-baseline";
}

std::set<AngularOffset> parse_exclude(const std::string& text) {
  std::set<AngularOffset> out;
  if (text == "none") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto comma = item.find(',');
    if (comma == std::string::npos) throw ConfigError("bad --exclude entry '" + item + "' (expected u,v)");
    try {
      std::size_t a = 0, b = 0;
      const std::string su = item.substr(0, comma), sv = item.substr(comma + 1);
      const int u = std::stoi(su, &a);
      const int v = std::stoi(sv, &b);
      if (a != su.size() || b != sv.size()) throw std::invalid_argument(item);
      out.insert({u, v});
    } catch (const std::logic_error&) {
      throw ConfigError("bad --exclude entry '" + item + "' (expected u,v)");
    }
  }
  return out;
}

ordered_json offsets_json(const std::set<AngularOffset>& s) {
  ordered_json a = ordered_json::array();
  for (const AngularOffset q : s) a.push_back({q.u, q.v});
  return a;
}

std::set<AngularOffset> offsets_from_json(const json& a) {
  std::set<AngularOffset> out;
  for (const auto& e : a) out.insert({e.at(0).get<int>(), e.at(1).get<int>()});
  return out;
}

json read_record(const fs::path& path) {
  const std::vector<unsigned char> bytes = io::read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

void write_json(const fs::path& path, const ordered_json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

Image load_image(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("centerview file not found: " + path.string());
  const std::string ext = path.extension().string();
  if (ext == ".png") return io::load_png(path);
  if (ext == ".pfm") return io::load_pfm(path);
  throw ConfigError("unsupported centerview format '" + ext + "' (expected .png or .pfm)");
}

std::vector<std::pair<std::string, CodedModel>> make_models(const RunSpec& spec, const LightField& lf,
                                                            std::uint64_t seed) {
  const int su = lf.size_u(), sv = lf.size_v(), h = lf.height(), w = lf.width();
  if (spec.scheme == "clf") return {{"coded", gen_clf_model(su, sv, h, w, spec.tile, seed, spec.shift)}};
  if (spec.scheme == "ca") return {{"coded", gen_aperture_model(su, sv, h, w, seed)}};
  if (spec.scheme == "focdef") {
    return {{"allinfocus", gen_pinhole_model(su, sv, h, w)}, {"defocus", gen_defocus_model(su, sv, h, w)}};
  }
  return {{"defocus", gen_defocus_model(su, sv, h, w)}};
}

ordered_json run_simulate(const RunSpec& spec) {
  require(spec.lf, "--lf", "simulate");
  require(spec.out, "--out", "simulate");
  const std::uint64_t seed = spec.seed.value_or(0);
  const LightField lf = io::load_lf(spec.lf);
  const fs::path out(spec.out);

  ordered_json record;
  record["format_version"] = kRunRecordVersion;
  record["scheme"] = spec.scheme;
  record["seed"] = seed;
  record["captures"] = ordered_json::array();
  ordered_json files = ordered_json::array();
  for (const auto& [stem, model] : make_models(spec, lf, seed)) {
    const CodedImage coded = simulate(lf, model);
    const fs::path image = out / (stem + ".pfm");
    const fs::path mfile = out / (stem + ".lfcm");
    io::save_coded(coded, image);
    io::save_model(model, mfile);
    record["captures"].push_back({{"image", stem + ".pfm"}, {"model", stem + ".lfcm"}});
    files.push_back(image.string());
    files.push_back(io::sidecar_path(image).string());
    files.push_back(mfile.string());
  }
  write_json(out / kSimulateRecord, record);

  ordered_json s;
  s["command"] = "simulate";
  s["scheme"] = spec.scheme;
  s["seed"] = seed;
  s["angular"] = {lf.size_u(), lf.size_v()};
  s["spatial"] = {lf.height(), lf.width()};
  s["outputs"] = files;
  return s;
}

struct Capture {
  CodedImage coded;
  CodedModel model;
};

std::vector<Capture> load_captures(const RunSpec& spec, const std::string& scheme) {
  const fs::path in(spec.in);
  std::vector<Capture> caps;
  for (const std::string& stem : capture_stems(scheme)) {
    const fs::path image = in / (stem + ".pfm");
    if (!fs::exists(image)) throw IoError("missing capture " + image.string());
    Capture c;
    c.coded = io::load_coded(image);
    fs::path mfile = in / (stem + ".lfcm");
    if (!spec.model.empty() && (scheme == "clf" || scheme == "ca")) mfile = spec.model;
    if (fs::exists(mfile)) {
      c.model = io::load_model(mfile);
    } else if (spec.model.empty() && c.coded.provenance_known) {
      c.model = regenerate(c.coded.provenance);
    } else {
      throw IoError("missing coded model " + mfile.string());
    }
    if (c.model.height() != c.coded.data.height() || c.model.width() != c.coded.data.width()) {
      throw ExtentError("coded model " + mfile.string() + " does not match capture " + image.string());
    }
    caps.push_back(std::move(c));
  }
  return caps;
}

ordered_json run_reconstruct(const RunSpec& spec) {
  require(spec.in, "--in", "reconstruct");
  require(spec.out, "--out", "reconstruct");
  const fs::path in(spec.in), out(spec.out);
  const std::string center_source = resolve_center_source(spec);

  std::string scheme = spec.scheme;
  if (scheme.empty()) {
    const fs::path rec = in / kSimulateRecord;
    if (!fs::exists(rec)) throw IoError("no --scheme given and no " + rec.string());
    scheme = read_record(rec).value("scheme", "");
    check_scheme(scheme);
  }

  SolverConfig cfg;
  if (!spec.config.empty()) cfg = load_solver_config(spec.config);
  if (spec.seed) cfg.seed = *spec.seed;
  cfg.validate();

  const std::vector<Capture> caps = load_captures(spec, scheme);

  std::optional<LightField> truth;
  if (!spec.lf.empty()) truth = io::load_lf(spec.lf);

  Image center;
  if (center_source == "oracle") {
    if (!truth) throw ConfigError("center source 'oracle' requires --lf");
    center = get_view(*truth, {0, 0});
  } else if (center_source == "given-file") {
    require(spec.center, "--center", "center source 'given-file'");
    center = load_image(spec.center);
  } else {
    center = code_normalized_center(caps.front().coded, caps.front().model);
  }
  const Image& probe = caps.front().coded.data;
  if (center.height() != probe.height() || center.width() != probe.width() ||
      center.channels() != probe.channels()) {
    throw ExtentError("centerview extents do not match the captures");
  }

  References refs;
  if (cfg.mode == SolveMode::supervised) {
    if (!truth) throw ConfigError("supervised mode requires --lf");
    refs = *truth;
  } else {
    // The all-in-focus capture of focdef serves as the centerview, not as a
    // measurement.
    std::vector<Measurement> ms;
    for (const Capture& c : caps) {
      if (c.model.params().scheme != Scheme::pinhole) ms.push_back({c.model, c.coded.data});
    }
    refs = std::move(ms);
  }

  // Views the method received directly; evaluation leaves them out.
  std::set<AngularOffset> inputs;
  if (center_source != "code-normalized-baseline" || scheme == "focdef") inputs.insert({0, 0});

  const SolveResult res = solve_disparity(center, refs, cfg);
  std::clog << "reconstruct: solved in " << res.report.wall_seconds << " s, " << res.report.iterations
            << " iterations\n";
  const LightField recon = render_lf(center, res.dfield);

  io::save_lf(recon, out / "lf");
  io::save_disparity(res.dfield, out / "disparity");
  io::write_file_atomic(out / "report.json", to_json(res.report, false) + "\n");
  ordered_json record;
  record["format_version"] = kRunRecordVersion;
  record["scheme"] = scheme;
  record["center_source"] = center_source;
  record["input_views"] = offsets_json(inputs);
  record["seed"] = cfg.seed;
  record["config"] = ordered_json::parse(to_json(cfg));
  write_json(out / kReconstructRecord, record);

  ordered_json s;
  s["command"] = "reconstruct";
  s["scheme"] = scheme;
  s["center_source"] = center_source;
  s["input_views"] = offsets_json(inputs);
  s["iterations"] = res.report.iterations;
  s["sign_branch"] = res.report.sign_branch;
  s["final_loss"] = res.report.final_terms.total;
  s["outputs"] = {{"lf", (out / "lf").string()},
                  {"disparity", (out / "disparity").string()},
                  {"report", (out / "report.json").string()}};
  return s;
}

ordered_json run_evaluate(const RunSpec& spec) {
  require(spec.lf, "--lf", "evaluate");
  require(spec.in, "--in", "evaluate");
  const fs::path in(spec.in);
  fs::path test_dir = in;
  std::set<AngularOffset> exclude;
  if (fs::exists(in / kReconstructRecord)) {
    test_dir = in / "lf";
    const json rec = read_record(in / kReconstructRecord);
    try {
      exclude = offsets_from_json(rec.at("input_views"));
    } catch (const json::exception&) {
      throw FormatError((in / kReconstructRecord).string() + ": malformed input_views");
    }
  }
  if (!spec.exclude.empty()) exclude = parse_exclude(spec.exclude);

  const LightField ref = io::load_lf(spec.lf);
  const LightField test = io::load_lf(test_dir);
  const EvalReport report = evaluate(test, ref, exclude);
  if (!spec.out.empty()) {
    const fs::path out(spec.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    io::write_file_atomic(out, to_json(report) + "\n");
  }

  ordered_json s;
  s["command"] = "evaluate";
  s["mean_psnr"] = report.mean_psnr;
  s["mean_ssim"] = report.mean_ssim;
  s["views_scored"] = report.views.size();
  s["excluded"] = offsets_json(exclude);
  if (!spec.out.empty()) s["report"] = spec.out;
  return s;
}

ordered_json run_epi(const RunSpec& spec) {
  require(spec.lf, "--lf", "epi");
  require(spec.out, "--out", "epi");
  if (spec.axis != "x" && spec.axis != "y") throw ConfigError("--axis must be x or y");
  const LightField lf = io::load_lf(spec.lf);
  const SpatialAxis axis = spec.axis == "x" ? SpatialAxis::x : SpatialAxis::y;
  const int index = spec.index.value_or(axis == SpatialAxis::x ? lf.height() / 2 : lf.width() / 2);
  const Epi epi = extract_epi(lf, axis, index, spec.angular);
  const fs::path out(spec.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  io::save_png16(epi.image, out);

  ordered_json s;
  s["command"] = "epi";
  s["axis"] = spec.axis;
  s["fixed_spatial"] = index;
  s["fixed_angular"] = spec.angular;
  s["size"] = {epi.image.height(), epi.image.width()};
  s["output"] = spec.out;
  return s;
}

ordered_json run_shear(const RunSpec& spec) {
  require(spec.lf, "--lf", "shear");
  require(spec.out, "--out", "shear");
  const LightField lf = io::load_lf(spec.lf);
  io::save_lf(shear(lf, spec.amount), spec.out);
  ordered_json s;
  s["command"] = "shear";
  s["amount"] = spec.amount;
  s["output"] = spec.out;
  return s;
}

RunSpec resolved(const RunSpec& spec) {
  RunSpec r = spec;
  if (!r.scheme.empty()) check_scheme(r.scheme);
  if (r.subcommand == "simulate") {
    if (r.scheme.empty()) throw ConfigError("simulate requires --scheme");
    if (!r.seed) r.seed = 0;
  }
  if (r.subcommand == "reconstruct" || (r.subcommand == "simulate" && r.pipeline)) {
    r.center_source = resolve_center_source(r);
  }
  if (!r.exclude.empty()) parse_exclude(r.exclude);
  return r;
}

int emit(const RunSpec& spec, ordered_json (*run)(const RunSpec&)) {
  const RunSpec r = resolved(spec);
  if (r.dry_run) {
    ordered_json j;
    j["dry_run"] = true;
    j["runspec"] = ordered_json::parse(to_json(r));
    std::cout << j.dump() << std::endl;
    return 0;
  }
  std::cout << run(r).dump() << std::endl;
  return 0;
}

ordered_json run_pipeline(const RunSpec& spec) {
  ordered_json s;
  s["command"] = "pipeline";
  s["simulate"] = run_simulate(spec);

  RunSpec rec = spec;
  rec.subcommand = "reconstruct";
  rec.in = spec.out;
  rec.out = (fs::path(spec.out) / "recon").string();
  s["reconstruct"] = run_reconstruct(rec);

  RunSpec ev = spec;
  ev.subcommand = "evaluate";
  ev.in = rec.out;
  ev.out = (fs::path(spec.out) / "eval.json").string();
  s["evaluate"] = run_evaluate(ev);
  return s;
}

ordered_json run_simulate_or_pipeline(const RunSpec& spec) {
  return spec.pipeline ? run_pipeline(spec) : run_simulate(spec);
}

}  // namespace

int cmd_simulate(const RunSpec& spec) { return emit(spec, run_simulate_or_pipeline); }
int cmd_reconstruct(const RunSpec& spec) { return emit(spec, run_reconstruct); }
int cmd_evaluate(const RunSpec& spec) { return emit(spec, run_evaluate); }
int cmd_epi(const RunSpec& spec) { return emit(spec, run_epi); }
int cmd_shear(const RunSpec& spec) { return emit(spec, run_shear); }

std::string to_json(const RunSpec& spec) {
  ordered_json j;
  j["subcommand"] = spec.subcommand;
  auto opt = [&](const char* key, const std::string& v) { j[key] = v.empty() ? ordered_json() : ordered_json(v); };
  opt("scheme", spec.scheme);
  opt("lf", spec.lf);
  opt("in", spec.in);
  opt("out", spec.out);
  opt("model", spec.model);
  opt("config", spec.config);
  opt("center_source", spec.center_source);
  opt("center", spec.center);
  opt("exclude", spec.exclude);
  j["seed"] = spec.seed ? ordered_json(*spec.seed) : ordered_json();
  j["pipeline"] = spec.pipeline;
  if (spec.subcommand == "simulate" && spec.scheme == "clf") {
    j["tile"] = spec.tile;
    j["shift_per_view"] = spec.shift;
  }
  if (spec.subcommand == "epi") {
    j["axis"] = spec.axis;
    j["index"] = spec.index ? ordered_json(*spec.index) : ordered_json();
    j["angular"] = spec.angular;
  }
  if (spec.subcommand == "shear") j["amount"] = spec.amount;
  return j.dump();
}

}  // namespace lfr::cli
