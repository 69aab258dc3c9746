#pragma once

#include <cstdint>

#include "lfr/config.hpp"
#include "lfr/loss.hpp"

namespace lfr::testkit {

// A tiny random problem: 3x3 views of 16x16 pixels.
struct GradInstance {
  Image center;
  DisparityField dfield;
  References refs;
  SolverConfig cfg;
};

// Supervised against a random light field when `measurement` is false,
// otherwise against random observations of a CLF model and a defocus model.
GradInstance random_grad_instance(std::uint64_t seed, bool measurement);

struct GradCheckResult {
  int probes = 0;
  int failures = 0;
  double max_rel_error = 0.0;
};

// Compares total_loss_and_grad against central differences of total_loss at
// `probes` random coordinates whose sampling positions all sit at least 0.1
// from integers and whose affected residuals all keep |r| >= 20 eps.
// Relative error is |g - fd| / max(|g|, |fd|, 1e-8).
GradCheckResult check_total_gradient(const GradInstance& inst, int probes, std::uint64_t seed,
                                     double h = 1e-3, double tol = 1e-4);

}  // namespace lfr::testkit
