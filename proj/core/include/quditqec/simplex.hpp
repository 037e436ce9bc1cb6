#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace quditqec {

struct SimplexOptions {
  int restarts = 8;
  double tolerance = 1e-10;  // on the spread of objective values across the simplex
  int max_evaluations = 200000;  // per restart
  double initial_step = 0.1;
  std::uint64_t seed = 1;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  long evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

/// Nelder-Mead from one start, re-seeding the simplex around the incumbent
/// until a rebuild no longer improves it by more than the tolerance.
SimplexResult nelder_mead(const Objective& f, std::vector<double> start, const SimplexOptions& options);

/// Best of `restarts` runs. Start 0 is `start`; odd starts perturb the best
/// point found so far, even ones draw uniformly in [-scale, scale].
SimplexResult nelder_mead_restarts(const Objective& f, const std::vector<double>& start, double scale,
                                   const SimplexOptions& options);

}  // namespace quditqec
