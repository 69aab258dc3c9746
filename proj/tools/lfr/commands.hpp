#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace lfr::cli {

// Resolved arguments of one invocation. Unused fields stay empty.
struct RunSpec {
  std::string subcommand;
  std::string scheme;         // clf | ca | focdef | defocus-only
  std::string lf;             // light field directory (input or ground truth)
  std::string in;             // input directory
  std::string out;            // output path
  std::string model;          // coded model override for clf / ca
  std::string config;         // SolverConfig JSON
  std::string center_source;  // oracle | given-file | code-normalized-baseline
  std::string center;         // centerview image for given-file
  std::string exclude;        // "u,v;u,v", "none", or empty for automatic
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
  bool pipeline = false;

  int tile = 15;
  int shift = 1;
  std::string axis = "x";
  std::optional<int> index;
  int angular = 0;
  double amount = 0.0;
};

// Each command prints a one-line JSON summary on stdout and returns the
// process exit code. Library errors propagate as exceptions.
int cmd_simulate(const RunSpec& spec);
int cmd_reconstruct(const RunSpec& spec);
int cmd_evaluate(const RunSpec& spec);
int cmd_epi(const RunSpec& spec);
int cmd_shear(const RunSpec& spec);

std::string to_json(const RunSpec& spec);

}  // namespace lfr::cli
