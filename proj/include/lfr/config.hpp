#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "lfr/warp.hpp"

namespace lfr {

enum class SolveMode {
  supervised,   // residual against a reference light field
  measurement,  // residual against coded observations through the forward model
};

std::string_view to_string(SolveMode m);

struct SolverConfig {
  double lambda_dc = 0.008;
  double lambda_tv = 0.01;
  double d_max = kDefaultDMax;
  int pyramid_levels = 4;
  int iters_per_level = 300;
  double step_size = 0.05;
  double robust_eps = 1e-3;
  bool multi_start_signs = true;
  std::uint64_t seed = 0;
  SolveMode mode = SolveMode::measurement;

  // Throws ConfigError on non-positive or non-finite fields.
  void validate() const;
};

// Parse a JSON document using exactly the field names of SolverConfig.
// Missing fields keep their defaults; unknown fields are rejected.
SolverConfig parse_solver_config(std::string_view json_text);
SolverConfig load_solver_config(const std::string& path);
std::string to_json(const SolverConfig& cfg);

}  // namespace lfr
