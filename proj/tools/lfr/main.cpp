#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "lfr/error.hpp"

namespace {

// One JSON object per line on stderr so callers can parse failures.
int fail(int code, const char* kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["exit_code"] = code;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using lfr::cli::RunSpec;
  CLI::App app{"Light field reconstruction from coded captures"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  RunSpec spec;
  std::uint64_t seed = 0;
  int index = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Seed for code generation and solver bookkeeping");
    sub->add_flag("--dry-run", spec.dry_run, "Print the resolved run specification and exit");
  };

  CLI::App* sim = app.add_subcommand("simulate", "Simulate coded captures of a light field");
  sim->add_option("--scheme", spec.scheme, "clf | ca | focdef | defocus-only")->required();
  sim->add_option("--lf", spec.lf, "Input light field directory")->required();
  sim->add_option("--out", spec.out, "Output directory")->required();
  sim->add_option("--tile", spec.tile, "CLF code tile size");
  sim->add_option("--shift", spec.shift, "CLF code shift per unit view offset");
  sim->add_flag("--pipeline", spec.pipeline,
                "Continue with reconstruct (into OUT/recon) and evaluate (into OUT/eval.json)");
  sim->add_option("--center-source", spec.center_source, "Centerview source for --pipeline");
  sim->add_option("--config", spec.config, "Solver configuration JSON for --pipeline");
  common(sim);

  CLI::App* rec = app.add_subcommand("reconstruct", "Estimate disparity and render the light field");
  rec->add_option("--in", spec.in, "Directory written by simulate")->required();
  rec->add_option("--out", spec.out, "Output directory")->required();
  rec->add_option("--scheme", spec.scheme, "Override the scheme recorded in the input directory");
  rec->add_option("--model", spec.model, "Coded model file for clf / ca");
  rec->add_option("--config", spec.config, "Solver configuration JSON");
  rec->add_option("--lf", spec.lf, "Ground-truth light field (oracle centerview, supervised mode)");
  rec->add_option("--center-source", spec.center_source, "oracle | given-file | code-normalized-baseline");
  rec->add_option("--center", spec.center, "Centerview image (.png or .pfm) for given-file");
  common(rec);

  CLI::App* ev = app.add_subcommand("evaluate", "Score a light field against a reference");
  ev->add_option("--lf", spec.lf, "Reference light field directory")->required();
  ev->add_option("--in", spec.in, "Light field directory or reconstruct output directory")->required();
  ev->add_option("--exclude", spec.exclude, "Views to skip as 'u,v;u,v', or 'none'");
  ev->add_option("--out", spec.out, "Report JSON path");
  common(ev);

  CLI::App* epi = app.add_subcommand("epi", "Extract an epipolar-plane image");
  epi->add_option("--lf", spec.lf, "Light field directory")->required();
  epi->add_option("--out", spec.out, "Output PNG path")->required();
  epi->add_option("--axis", spec.axis, "Spatial axis of the slice: x or y");
  CLI::Option* idx = epi->add_option("--index", index, "Fixed row (axis x) or column (axis y)");
  epi->add_option("--angular", spec.angular, "Fixed angular offset on the other axis");
  common(epi);

  CLI::App* sh = app.add_subcommand("shear", "Shear (refocus) a light field");
  sh->add_option("--lf", spec.lf, "Light field directory")->required();
  sh->add_option("--out", spec.out, "Output directory")->required();
  sh->add_option("--amount", spec.amount, "Shear in pixels per unit angular offset")->required();
  common(sh);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "usage", e.what());
  }

  CLI::App* chosen = app.get_subcommands().front();
  spec.subcommand = chosen->get_name();
  if (chosen->count("--seed") > 0) spec.seed = seed;
  if (idx->count() > 0) spec.index = index;

  try {
    if (chosen == sim) return lfr::cli::cmd_simulate(spec);
    if (chosen == rec) return lfr::cli::cmd_reconstruct(spec);
    if (chosen == ev) return lfr::cli::cmd_evaluate(spec);
    if (chosen == epi) return lfr::cli::cmd_epi(spec);
    return lfr::cli::cmd_shear(spec);
  } catch (const lfr::ConfigError& e) {
    return fail(2, "config", e.what());
  } catch (const lfr::IoError& e) {
    return fail(3, "io", e.what());
  } catch (const lfr::FormatError& e) {
    return fail(3, "format", e.what());
  } catch (const lfr::ExtentError& e) {
    return fail(4, "extent", e.what());
  } catch (const lfr::IndexError& e) {
    return fail(4, "index", e.what());
  } catch (const lfr::DivergenceError& e) {
    return fail(5, "divergence", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(3, "io", e.what());
  } catch (const std::exception& e) {
    return fail(1, "internal", e.what());
  }
}
