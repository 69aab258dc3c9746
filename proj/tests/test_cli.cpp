#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lfr/io.hpp"
#include "lfr/loss.hpp"
#include "lfr/metrics.hpp"
#include "lfr/sensing.hpp"
#include "support/scenes.hpp"

using namespace lfr;
using namespace lfr::testkit;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "lfr_test_cli";

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Result lfr_run(const std::string& args) {
  const fs::path o = kRoot / "stdout.txt", e = kRoot / "stderr.txt";
  const std::string cmd = std::string("\"") + LFR_CLI_PATH + "\" " + args + " >\"" + o.string() + "\" 2>\"" +
                          e.string() + "\"";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

json last_json_line(const std::string& text) {
  std::istringstream in(text);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  return json::parse(last);
}

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
  const fs::path p = kRoot / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

LightField plane_lf(int angular, int size, double d, int channels = 1, std::uint64_t seed = 11) {
  return render_lf(noise_texture(size, size, channels, seed), DisparityField(angular, angular, size, size, d));
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  }
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb || fa.empty()) return false;
  for (const fs::path& p : fa) {
    if (slurp(a / p) != slurp(b / p)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("simulate focdef: the pair differs only when the scene has disparity") {
  const fs::path t = scratch("focdef_pair");
  io::save_lf(plane_lf(5, 24, 0.0), t / "flat");
  io::save_lf(plane_lf(5, 24, 1.0), t / "slanted");

  const Result a = lfr_run("simulate --scheme focdef --lf " + q(t / "flat") + " --out " + q(t / "sa"));
  REQUIRE(a.code == 0);
  const json summary = last_json_line(a.out);
  CHECK(summary["command"] == "simulate");
  CHECK(summary["scheme"] == "focdef");
  CHECK(io::load_pfm(t / "sa" / "allinfocus.pfm") == io::load_pfm(t / "sa" / "defocus.pfm"));
  CHECK(fs::exists(t / "sa" / "allinfocus.lfcm"));
  CHECK(fs::exists(t / "sa" / "defocus.pfm.json"));

  REQUIRE(lfr_run("simulate --scheme focdef --lf " + q(t / "slanted") + " --out " + q(t / "sb")).code == 0);
  CHECK_FALSE(io::load_pfm(t / "sb" / "allinfocus.pfm") == io::load_pfm(t / "sb" / "defocus.pfm"));
}

TEST_CASE("simulate clf is byte-identical across runs with a fixed seed") {
  const fs::path t = scratch("clf_det");
  io::save_lf(plane_lf(5, 20, 0.7, 3), t / "lf");
  for (const char* dir : {"a", "b"}) {
    REQUIRE(lfr_run("simulate --scheme clf --seed 31 --tile 7 --lf " + q(t / "lf") + " --out " + q(t / dir)).code == 0);
  }
  CHECK(same_tree(t / "a", t / "b"));
  REQUIRE(lfr_run("simulate --scheme clf --seed 32 --tile 7 --lf " + q(t / "lf") + " --out " + q(t / "c")).code == 0);
  CHECK(slurp(t / "a" / "coded.pfm") != slurp(t / "c" / "coded.pfm"));
}

TEST_CASE("simulate ca matches the library forward model") {
  const fs::path t = scratch("ca_oracle");
  io::save_lf(plane_lf(5, 16, -0.6, 3), t / "lf");
  REQUIRE(lfr_run("simulate --scheme ca --seed 9 --lf " + q(t / "lf") + " --out " + q(t / "o")).code == 0);
  const LightField lf = io::load_lf(t / "lf");
  const CodedModel model = gen_aperture_model(5, 5, 16, 16, 9);
  CHECK(io::load_model(t / "o" / "coded.lfcm") == model);
  const Image expected = simulate(lf, model).data;
  const Image got = io::load_pfm(t / "o" / "coded.pfm");
  REQUIRE(got.same_shape(expected));
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.data()[i] == static_cast<float>(expected.data()[i]));
}

TEST_CASE("reconstruct focdef recovers a plane") {
  const fs::path t = scratch("focdef_plane");
  const DisparityField truth(7, 7, 64, 64, 1.5);
  const Image center = noise_texture(64, 64, 1, 11);
  io::save_lf(render_lf(center, truth), t / "lf");
  REQUIRE(lfr_run("simulate --scheme focdef --seed 1 --lf " + q(t / "lf") + " --out " + q(t / "sim")).code == 0);
  const Result r = lfr_run("reconstruct --in " + q(t / "sim") + " --out " + q(t / "rec"));
  REQUIRE(r.code == 0);
  const json s = last_json_line(r.out);
  CHECK(s["center_source"] == "code-normalized-baseline");
  const DisparityField d = io::load_disparity(t / "rec" / "disparity");
  const double mae = masked_mae(d, truth, textured_mask(center));
  CAPTURE(mae);
  CHECK(mae <= 0.15);
  CHECK(fs::exists(t / "rec" / "lf" / "manifest.json"));
  CHECK(json::parse(slurp(t / "rec" / "report.json")).contains("levels"));
}

TEST_CASE("reconstruct clf with the oracle centerview fits the measurement") {
  const fs::path t = scratch("clf_oracle");
  io::save_lf(plane_lf(5, 32, 0.8), t / "lf");
  REQUIRE(lfr_run("simulate --scheme clf --seed 4 --tile 9 --lf " + q(t / "lf") + " --out " + q(t / "sim")).code == 0);
  const Result r = lfr_run("reconstruct --in " + q(t / "sim") + " --lf " + q(t / "lf") + " --out " + q(t / "rec"));
  REQUIRE(r.code == 0);
  CHECK(last_json_line(r.out)["center_source"] == "oracle");
  const json report = json::parse(slurp(t / "rec" / "report.json"));
  const double data = report["final"]["data"].get<double>();
  CAPTURE(data);
  CHECK(data <= 1e-3);

  SUBCASE("reconstruction is deterministic") {
    REQUIRE(lfr_run("reconstruct --in " + q(t / "sim") + " --lf " + q(t / "lf") + " --out " + q(t / "rec2")).code == 0);
    CHECK(same_tree(t / "rec", t / "rec2"));
  }
  SUBCASE("an explicit model file is honoured") {
    const Result m = lfr_run("reconstruct --in " + q(t / "sim") + " --model " + q(t / "sim" / "coded.lfcm") +
                             " --lf " + q(t / "lf") + " --out " + q(t / "rec3") + " --dry-run");
    CHECK(m.code == 0);
    CHECK(last_json_line(m.out)["runspec"]["model"] == (t / "sim" / "coded.lfcm").string());
  }
}

TEST_CASE("reconstruct error paths") {
  const fs::path t = scratch("rec_errors");
  io::save_lf(plane_lf(3, 16, 0.5), t / "lf");
  REQUIRE(lfr_run("simulate --scheme focdef --lf " + q(t / "lf") + " --out " + q(t / "sim")).code == 0);

  SUBCASE("missing given-file centerview names the path") {
    const fs::path missing = t / "nope" / "center.png";
    const Result r = lfr_run("reconstruct --in " + q(t / "sim") + " --out " + q(t / "rec") +
                             " --center-source given-file --center " + q(missing));
    CHECK(r.code == 3);
    const json e = last_json_line(r.err);
    CHECK(e["exit_code"] == 3);
    CHECK(e["message"].get<std::string>().find(missing.string()) != std::string::npos);
  }
  SUBCASE("non-finite centerview diverges") {
    std::string pfm = "Pf\n16 16\n-1.0\n";
    const float nan = std::nanf("");
    for (int i = 0; i < 256; ++i) pfm.append(reinterpret_cast<const char*>(&nan), sizeof nan);
    std::ofstream(t / "nan.pfm", std::ios::binary) << pfm;
    const Result r = lfr_run("reconstruct --in " + q(t / "sim") + " --out " + q(t / "rec") +
                             " --center-source given-file --center " + q(t / "nan.pfm"));
    CHECK(r.code == 5);
    CHECK(last_json_line(r.err)["error"] == "divergence");
  }
  SUBCASE("wrong-size centerview is an extent error") {
    io::save_png16(Image(8, 8, 1, 0.5), t / "small.png");
    CHECK(lfr_run("reconstruct --in " + q(t / "sim") + " --out " + q(t / "rec") +
                  " --center-source given-file --center " + q(t / "small.png"))
              .code == 4);
  }
  SUBCASE("bad configuration") {
    std::ofstream(t / "cfg.json") << R"({"lambda_tv": -1})";
    CHECK(lfr_run("reconstruct --in " + q(t / "sim") + " --out " + q(t / "rec") + " --config " + q(t / "cfg.json"))
              .code == 2);
  }
  SUBCASE("missing input directory") {
    CHECK(lfr_run("reconstruct --scheme focdef --in " + q(t / "absent") + " --out " + q(t / "rec")).code == 3);
  }
  SUBCASE("usage errors") {
    CHECK(lfr_run("reconstruct --out " + q(t / "rec")).code == 2);
    CHECK(lfr_run("simulate --scheme hologram --lf " + q(t / "lf") + " --out " + q(t / "x")).code == 2);
    CHECK(lfr_run("frobnicate").code == 2);
  }
}

TEST_CASE("evaluate") {
  const fs::path t = scratch("evaluate");
  const LightField a = random_lf(3, 3, 16, 16, 1, 1);
  const LightField b = random_lf(3, 3, 16, 16, 1, 2);
  io::save_lf(a, t / "a");
  io::save_lf(b, t / "b");

  SUBCASE("identical directories") {
    const Result r = lfr_run("evaluate --lf " + q(t / "a") + " --in " + q(t / "a") + " --out " + q(t / "r.json"));
    REQUIRE(r.code == 0);
    const json rep = json::parse(slurp(t / "r.json"));
    CHECK(rep["mean_psnr"].get<double>() == 99.0);
    CHECK(rep["mean_ssim"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("matches library metrics on random data") {
    REQUIRE(lfr_run("evaluate --lf " + q(t / "a") + " --in " + q(t / "b") + " --exclude \"0,0;1,-1\" --out " +
                    q(t / "r.json"))
                .code == 0);
    const EvalReport lib = evaluate(io::load_lf(t / "b"), io::load_lf(t / "a"), {{0, 0}, {1, -1}});
    CHECK(json::parse(slurp(t / "r.json")) == json::parse(to_json(lib)));
  }
  SUBCASE("excluding every view is rejected") {
    std::string all;
    for (int u = -1; u <= 1; ++u) {
      for (int v = -1; v <= 1; ++v) all += (all.empty() ? "" : ";") + std::to_string(u) + "," + std::to_string(v);
    }
    CHECK(lfr_run("evaluate --lf " + q(t / "a") + " --in " + q(t / "b") + " --exclude \"" + all + "\"").code == 2);
  }
  SUBCASE("extent mismatch") {
    io::save_lf(random_lf(3, 3, 16, 18, 1, 3), t / "c");
    const Result r = lfr_run("evaluate --lf " + q(t / "a") + " --in " + q(t / "c"));
    CHECK(r.code == 4);
    CHECK(last_json_line(r.err)["error"] == "extent");
  }
  SUBCASE("malformed exclusion list") {
    CHECK(lfr_run("evaluate --lf " + q(t / "a") + " --in " + q(t / "b") + " --exclude 1-2").code == 2);
  }
}

TEST_CASE("shear and epi") {
  const fs::path t = scratch("shear_epi");
  const double d = 1.0;
  io::save_lf(plane_lf(5, 20, d, 1, 3), t / "lf");

  SUBCASE("zero shear reproduces the stored light field") {
    REQUIRE(lfr_run("shear --lf " + q(t / "lf") + " --amount 0 --out " + q(t / "s0")).code == 0);
    CHECK(same_tree(t / "lf", t / "s0"));
  }
  SUBCASE("shearing by -d aligns a constant-disparity scene") {
    REQUIRE(lfr_run("shear --lf " + q(t / "lf") + " --amount -1 --out " + q(t / "s1")).code == 0);
    const LightField s = io::load_lf(t / "s1");
    const Image c = s.view({0, 0});
    double worst = 0.0;
    for (const AngularOffset o : s.grid().offsets()) {
      const Image v = s.view(o);
      // Views sample outside the frame near the borders; compare the interior.
      for (int y = 5; y < 15; ++y) {
        for (int x = 5; x < 15; ++x) worst = std::max(worst, std::abs(v.at(y, x) - c.at(y, x)));
      }
    }
    CHECK(worst <= 2.0 / 65535);
  }
  SUBCASE("epi of a constant light field is constant") {
    io::save_lf(LightField(5, 5, 12, 10, 3, 0.25), t / "flat");
    const Result r = lfr_run("epi --lf " + q(t / "flat") + " --axis y --index 3 --angular -1 --out " + q(t / "e.png"));
    REQUIRE(r.code == 0);
    const Image e = io::load_png(t / "e.png");
    CHECK(e.height() == 5);
    CHECK(e.width() == 12);
    for (const double v : e.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-4));
  }
  SUBCASE("epi index out of range") {
    CHECK(lfr_run("epi --lf " + q(t / "lf") + " --index 40 --out " + q(t / "e.png")).code == 4);
  }
}

TEST_CASE("dry run prints the resolved specification and touches nothing") {
  const fs::path t = scratch("dry_run");
  io::save_lf(plane_lf(3, 16, 0.5), t / "lf");
  const Result r = lfr_run("simulate --scheme clf --lf " + q(t / "lf") + " --out " + q(t / "out") +
                           " --pipeline --dry-run");
  REQUIRE(r.code == 0);
  const json j = last_json_line(r.out);
  CHECK(j["dry_run"] == true);
  CHECK(j["runspec"]["subcommand"] == "simulate");
  CHECK(j["runspec"]["scheme"] == "clf");
  CHECK(j["runspec"]["seed"] == 0);
  CHECK(j["runspec"]["center_source"] == "oracle");
  CHECK_FALSE(fs::exists(t / "out"));

  for (const std::string& args : {"reconstruct --in " + q(t / "x") + " --out " + q(t / "y"),
                                 "evaluate --lf " + q(t / "lf") + " --in " + q(t / "lf") + " --out " + q(t / "r.json"),
                                 "shear --lf " + q(t / "lf") + " --amount 1 --out " + q(t / "sh"),
                                 "epi --lf " + q(t / "lf") + " --out " + q(t / "e.png")}) {
    CHECK(lfr_run(args + " --dry-run").code == 0);
  }
  CHECK_FALSE(fs::exists(t / "y"));
  CHECK_FALSE(fs::exists(t / "r.json"));
  CHECK_FALSE(fs::exists(t / "sh"));
  CHECK_FALSE(fs::exists(t / "e.png"));
}

TEST_CASE("pipeline composes simulate, reconstruct and evaluate") {
  const fs::path t = scratch("pipeline");
  io::save_lf(plane_lf(5, 32, 0.8), t / "lf");

  SUBCASE("focdef excludes the centerview it received") {
    const Result r = lfr_run("simulate --scheme focdef --seed 2 --pipeline --lf " + q(t / "lf") + " --out " + q(t / "p"));
    REQUIRE(r.code == 0);
    const json rec = json::parse(slurp(t / "p" / "recon" / "reconstruct.json"));
    const json ev = json::parse(slurp(t / "p" / "eval.json"));
    CHECK(ev["excluded"] == rec["input_views"]);
    CHECK(ev["excluded"] == json::array({json::array({0, 0})}));
    CHECK(ev["views"].size() == 24);
  }
  SUBCASE("clf with the baseline centerview scores every view") {
    const Result r = lfr_run("simulate --scheme clf --seed 2 --tile 9 --pipeline --center-source baseline --lf " +
                             q(t / "lf") + " --out " + q(t / "p"));
    REQUIRE(r.code == 0);
    const json rec = json::parse(slurp(t / "p" / "recon" / "reconstruct.json"));
    const json ev = json::parse(slurp(t / "p" / "eval.json"));
    CHECK(rec["input_views"].empty());
    CHECK(ev["excluded"].empty());
    CHECK(ev["views"].size() == 25);
  }
  SUBCASE("standalone evaluate of a reconstruct directory applies the same exclusion") {
    REQUIRE(lfr_run("simulate --scheme focdef --pipeline --lf " + q(t / "lf") + " --out " + q(t / "p")).code == 0);
    REQUIRE(lfr_run("evaluate --lf " + q(t / "lf") + " --in " + q(t / "p" / "recon") + " --out " + q(t / "again.json"))
                .code == 0);
    CHECK(slurp(t / "again.json") == slurp(t / "p" / "eval.json"));
  }
}
