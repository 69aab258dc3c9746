#pragma once

#include <string>
#include <vector>

#include "lfr/config.hpp"
#include "lfr/loss.hpp"
#include "lfr/warp.hpp"

namespace lfr {

struct LevelTrace {
  int level = 0;  // 0 is full resolution
  int height = 0;
  int width = 0;
  int branch = 0;  // +1 / -1 for the two coarse starts, 0 after branch selection
  std::vector<double> losses;  // accepted-step objective values, non-increasing
};

struct SolveReport {
  std::vector<LevelTrace> levels;
  LossTerms final_terms;
  int iterations = 0;
  double wall_seconds = 0.0;
  int sign_branch = 0;      // chosen coarse start sign, 0 when multi-start is off
  bool sign_tie = false;    // both branches reached the same objective
  double branch_loss_positive = 0.0;
  double branch_loss_negative = 0.0;
};

struct SolveResult {
  DisparityField dfield;
  SolveReport report;
};

// Number of pyramid levels actually used for an H x W problem: at most
// cfg.pyramid_levels, with the coarsest level at least 8 x 8.
int effective_levels(int height, int width, int requested);

// Coarse-to-fine minimisation of total_loss over the disparity field.
//
// Each level runs moment-scaled gradient steps with backtracking so the
// accepted objective never increases; the field is projected onto
// [-d_max, d_max] after every step. Coarse levels keep one shared value per
// pixel across views (gradients are averaged over views); only the finest
// level refines each view independently. With multi_start_signs the coarsest
// level is solved from both +eps and -eps constant starts and the lower
// objective wins (ties go to the positive start). Disparities double when
// moving to the next finer level. The returned values are rounded to 32-bit
// floats so they persist losslessly.
SolveResult solve_disparity(const Image& center, const References& refs, const SolverConfig& cfg);

// Wall-clock time is omitted when include_timing is false, which makes the
// document a deterministic function of the inputs.
std::string to_json(const SolveReport& report, bool include_timing = true);

}  // namespace lfr
