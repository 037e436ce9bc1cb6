#include "quditqec/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "quditqec/random.hpp"
#include "quditqec/types.hpp"

namespace quditqec {

namespace {

struct Run {
  std::vector<double> x;
  double value;
  long evaluations;
  bool converged;
};

Run single_pass(const Objective& f, const std::vector<double>& start, double step, const SimplexOptions& o) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> pts(n + 1, start);
  std::vector<double> vals(n + 1);
  long evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += (std::abs(start[i]) > 1e-3 ? step * std::abs(start[i]) : step);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  bool converged = false;
  while (evals < o.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];
    if (vals[worst] - vals[best] <= o.tolerance * (1.0 + std::abs(vals[best]))) {
      double extent = 0.0;
      for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t d = 0; d < n; ++d) extent = std::max(extent, std::abs(pts[i][d] - pts[best][d]));
      }
      if (extent < 1e-9 || vals[worst] - vals[best] <= 1e-3 * o.tolerance) {
        converged = true;
        break;
      }
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i : order) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[i][d] / static_cast<double>(n);
    }
    for (std::size_t d = 0; d < n; ++d) trial[d] = centroid[d] + (centroid[d] - pts[worst][d]);
    const double fr = eval(trial);
    if (fr < vals[best]) {
      for (std::size_t d = 0; d < n; ++d) trial2[d] = centroid[d] + 2.0 * (centroid[d] - pts[worst][d]);
      const double fe = eval(trial2);
      if (fe < fr) {
        pts[worst] = trial2;
        vals[worst] = fe;
      } else {
        pts[worst] = trial;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = trial;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    for (std::size_t d = 0; d < n; ++d) {
      trial2[d] = outside ? centroid[d] + 0.5 * (trial[d] - centroid[d]) : centroid[d] + 0.5 * (pts[worst][d] - centroid[d]);
    }
    const double fc = eval(trial2);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = trial2;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t d = 0; d < n; ++d) pts[i][d] = pts[best][d] + 0.5 * (pts[i][d] - pts[best][d]);
      vals[i] = eval(pts[i]);
    }
  }
  const std::size_t best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {pts[best], vals[best], evals, converged};
}

}  // namespace

SimplexResult nelder_mead(const Objective& f, std::vector<double> start, const SimplexOptions& options) {
  if (start.empty()) throw ValidationError("nelder_mead: empty parameter vector");
  SimplexResult r;
  r.x = std::move(start);
  r.value = f(r.x);
  r.evaluations = 1;
  double step = options.initial_step;
  // Rebuilding the simplex around the incumbent counters premature collapse.
  for (int round = 0; round < 50; ++round) {
    Run run = single_pass(f, r.x, step, options);
    r.evaluations += run.evaluations;
    const double gain = r.value - run.value;
    if (run.value < r.value) {
      r.x = std::move(run.x);
      r.value = run.value;
    }
    r.converged = run.converged;
    if (gain <= options.tolerance * (1.0 + std::abs(r.value))) break;
    step = std::max(step * 0.5, 1e-4);
  }
  return r;
}

SimplexResult nelder_mead_restarts(const Objective& f, const std::vector<double>& start, double scale,
                                   const SimplexOptions& options) {
  Rng rng(options.seed);
  SimplexResult best;
  bool have = false;
  long total = 0;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    std::vector<double> x0 = start;
    if (r > 0) {
      for (double& v : x0) v = (r % 2 == 1 && have) ? v : rng.uniform(-scale, scale);
      if (r % 2 == 1 && have) {
        x0 = best.x;
        for (double& v : x0) v += 0.1 * scale * rng.normal();
      }
    }
    SimplexResult run = nelder_mead(f, std::move(x0), options);
    total += run.evaluations;
    if (!have || run.value < best.value) {
      best = std::move(run);
      have = true;
    }
  }
  best.evaluations = total;
  return best;
}

}  // namespace quditqec
