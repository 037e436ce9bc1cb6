#include "quditqec/cce_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "quditqec/parallel.hpp"

namespace quditqec {

bool EvolutionSchedule::is_free_decay() const {
  return segments.size() == 1 && !segments[0].flipped;
}

bool EvolutionSchedule::is_echo() const {
  return segments.size() == 2 && !segments[0].flipped && segments[1].flipped &&
         std::abs(segments[0].fraction - 0.5) < 1e-12 && std::abs(segments[1].fraction - 0.5) < 1e-12;
}

std::string EvolutionSchedule::name() const {
  if (is_free_decay()) return "free";
  if (is_echo()) return "echo";
  return "custom";
}

EvolutionSchedule EvolutionSchedule::from_name(const std::string& name) {
  if (name == "free") return free_decay();
  if (name == "echo") return echo();
  throw ValidationError("unknown schedule '" + name + "' (expected free or echo)");
}

void EvolutionSchedule::validate() const {
  if (segments.empty()) throw ValidationError("EvolutionSchedule: no segments");
  double total = 0.0;
  for (const auto& seg : segments) {
    if (!(seg.fraction > 0.0)) throw ValidationError("EvolutionSchedule: fractions must be positive");
    total += seg.fraction;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("EvolutionSchedule: fractions must sum to 1");
}

void DecoherenceMatrix::validate() const {
  if (times.size() != values.size()) throw NumericalError("DecoherenceMatrix: times/values size mismatch");
  const int d = dim();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const CMatrix& L = values[i];
    if (L.rows() != d || L.cols() != d) throw NumericalError("DecoherenceMatrix: wrong slice shape");
    for (int n = 0; n < d; ++n) {
      if (std::abs(L(n, n) - 1.0) > 1e-9) throw NumericalError("DecoherenceMatrix: L_nn != 1");
      for (int m = 0; m < d; ++m) {
        if (std::abs(L(n, m) - std::conj(L(m, n))) > 1e-9) throw NumericalError("DecoherenceMatrix: L not Hermitian");
        if (std::abs(L(n, m)) > 1.0 + 1e-9) {
          throw NumericalError("DecoherenceMatrix: |L_nm| > 1 at t = " + std::to_string(times[i]));
        }
      }
    }
  }
}

Complex cce1_analytic(const EffectiveCoefficients& coeffs, SpinQuantum s, int n, int m, double t) {
  const double dx = s.m_of(n) - s.m_of(m);
  double prod = 1.0;
  for (int k = 0; k < coeffs.size(); ++k) prod *= std::cos(dx * coeffs.a[1](k) * t / 2.0);
  return prod;
}

double gaussian_gamma(const EffectiveCoefficients& coeffs) {
  return std::sqrt(coeffs.a[1].squaredNorm() / 4.0);
}

namespace {

int mapped_level(SpinQuantum s, int level, bool flipped) { return flipped ? s.flipped(level) : level; }

void check_levels(SpinQuantum s, int n, int m) {
  if (n < 0 || m < 0 || n >= s.dim() || m >= s.dim()) throw ValidationError("level index out of range");
}

// a-term precession of one nucleus at level x without the level-independent a0.
double alpha_rel(const EffectiveCoefficients& c, SpinQuantum s, int k, int level) {
  const double x = s.m_of(level);
  return x * c.a[1](k) + (s.casimir() - x * x) * c.a[2](k);
}

}  // namespace

Complex cluster_decoherence(const std::vector<int>& cluster, const EvolutionSchedule& schedule,
                            const EffectiveCoefficients& coeffs, SpinQuantum s, int n, int m, double t) {
  schedule.validate();
  check_levels(s, n, m);
  const int dim = 1 << cluster.size();

  std::map<int, Eigen::SelfAdjointEigenSolver<CMatrix>> eig;
  auto propagator = [&](int level, double tau) -> CMatrix {
    auto it = eig.find(level);
    if (it == eig.end()) {
      it = eig.emplace(level, Eigen::SelfAdjointEigenSolver<CMatrix>(
                                  conditioned_bath_hamiltonian(coeffs, s, level, cluster)))
               .first;
    }
    const auto& e = it->second;
    CVector ph(dim);
    for (int i = 0; i < dim; ++i) ph(i) = std::exp(-kI * (e.eigenvalues()(i) * tau));
    return e.eigenvectors() * ph.asDiagonal() * e.eigenvectors().adjoint();
  };

  auto evolve = [&](int x, double& frame_phase) {
    CMatrix w = CMatrix::Identity(dim, dim);
    frame_phase = 0.0;
    for (const auto& seg : schedule.segments) {
      const int y = mapped_level(s, x, seg.flipped);
      const double tau = seg.fraction * t;
      w = propagator(y, tau) * w;
      frame_phase += tau * b_term_frame_shift(coeffs, s, y, cluster);
    }
    return w;
  };

  double phase_n = 0.0;
  double phase_m = 0.0;
  const CMatrix wn = evolve(n, phase_n);
  const CMatrix wm = evolve(m, phase_m);
  const Complex tr = (wm.adjoint() * wn).trace() / static_cast<double>(dim);
  return tr * std::exp(kI * (phase_n - phase_m));
}

Complex cce_combine(int order, const std::vector<Complex>& singles, const std::vector<PairValue>& pairs,
                    long* guarded) {
  if (order != 1 && order != 2) throw ValidationError("cce_combine: order must be 1 or 2");
  Complex total{1.0, 0.0};
  for (const auto& v : singles) total *= v;
  if (order == 1) return total;
  const int n = static_cast<int>(singles.size());
  for (const auto& p : pairs) {
    if (p.j < 0 || p.k < 0 || p.j >= n || p.k >= n || p.j == p.k) {
      throw ValidationError("cce_combine: pair refers to a missing singleton");
    }
    const Complex lj = singles[static_cast<std::size_t>(p.j)];
    const Complex lk = singles[static_cast<std::size_t>(p.k)];
    if (std::abs(lj) < kCceDivisionFloor || std::abs(lk) < kCceDivisionFloor) {
      if (guarded) ++*guarded;
      continue;
    }
    total *= p.value / (lj * lk);
  }
  return total;
}

namespace {

using C2 = std::array<std::array<Complex, 2>, 2>;

// Block form of a pair propagator in the (uu | ud, du | dd) decomposition.
struct PairBlocks {
  Complex uu{1.0, 0.0};
  Complex dd{1.0, 0.0};
  C2 mid{{{Complex(1.0, 0.0), Complex(0.0, 0.0)}, {Complex(0.0, 0.0), Complex(1.0, 0.0)}}};
};

struct PairLevelParams {
  double sum_alpha = 0.0;  // (alpha_j + alpha_k) without a0
  double hz = 0.0;         // (alpha_j - alpha_k) / 2 including a0
  Complex c{};             // I+_j I-_k weight
  double delta = 0.0;      // d_jk + d_kj
};

PairLevelParams pair_params(const EffectiveCoefficients& co, SpinQuantum s, int j, int k, int level) {
  const double x = s.m_of(level);
  const double w2 = s.casimir() - x * x;
  PairLevelParams p;
  const double aj = alpha_rel(co, s, j, level);
  const double ak = alpha_rel(co, s, k, level);
  p.sum_alpha = aj + ak;
  p.hz = 0.5 * (aj - ak + co.a[0](j) - co.a[0](k));
  p.c = co.c[0](j, k) + x * co.c[1](j, k) + w2 * co.c[2](j, k);
  const Complex d = co.d[0](j, k) + co.d[0](k, j) + x * (co.d[1](j, k) + co.d[1](k, j)) +
                    w2 * (co.d[2](j, k) + co.d[2](k, j));
  p.delta = d.real();
  return p;
}

PairBlocks pair_propagator(const PairLevelParams& p, double tau) {
  PairBlocks b;
  const Complex e_sum = std::polar(1.0, -0.5 * p.sum_alpha * tau);
  const Complex e_quarter = std::polar(1.0, -0.25 * p.delta * tau);
  b.uu = e_sum * e_quarter;
  b.dd = std::conj(e_sum) * e_quarter;
  const double hx = p.c.real();
  const double hy = -p.c.imag();
  const double h = std::sqrt(p.hz * p.hz + hx * hx + hy * hy);
  const double ch = std::cos(h * tau);
  const double sh = h > 0.0 ? std::sin(h * tau) / h : tau;
  const Complex g = std::conj(e_quarter);
  // exp(-i tau h.sigma) = cos - i sin (h.sigma)/|h|
  b.mid[0][0] = g * Complex(ch, -sh * p.hz);
  b.mid[1][1] = g * Complex(ch, sh * p.hz);
  b.mid[0][1] = g * (-kI * sh) * p.c;
  b.mid[1][0] = g * (-kI * sh) * std::conj(p.c);
  return b;
}

PairBlocks compose(const PairBlocks& later, const PairBlocks& earlier) {
  PairBlocks r;
  r.uu = later.uu * earlier.uu;
  r.dd = later.dd * earlier.dd;
  for (int a = 0; a < 2; ++a) {
    for (int c = 0; c < 2; ++c) {
      r.mid[a][c] = later.mid[a][0] * earlier.mid[0][c] + later.mid[a][1] * earlier.mid[1][c];
    }
  }
  return r;
}

// tr[W_m^dagger W_n] / 4, spelled out in real arithmetic (hot loop).
Complex pair_overlap(const PairBlocks& wn, const PairBlocks& wm) {
  double re = 0.0;
  double im = 0.0;
  auto add = [&](const Complex& a, const Complex& b) {
    re += a.real() * b.real() + a.imag() * b.imag();
    im += a.real() * b.imag() - a.imag() * b.real();
  };
  add(wm.uu, wn.uu);
  add(wm.dd, wn.dd);
  add(wm.mid[0][0], wn.mid[0][0]);
  add(wm.mid[0][1], wn.mid[0][1]);
  add(wm.mid[1][0], wn.mid[1][0]);
  add(wm.mid[1][1], wn.mid[1][1]);
  return {0.25 * re, 0.25 * im};
}

double pair_strength(const EffectiveCoefficients& co, int j, int k) {
  double m = 0.0;
  for (int o = 0; o < 3; ++o) {
    m = std::max({m, std::abs(co.c[o](j, k)), std::abs(co.d[o](j, k)), std::abs(co.d[o](k, j))});
  }
  return m;
}

}  // namespace

DecoherenceMatrix decoherence_matrix(const EvolutionSchedule& schedule, const EffectiveCoefficients& coeffs,
                                     SpinQuantum s, const std::vector<double>& t_grid, const CceOptions& options,
                                     CceStats* stats) {
  schedule.validate();
  if (options.order != 1 && options.order != 2) throw ValidationError("decoherence_matrix: order must be 1 or 2");
  if (t_grid.empty() || t_grid.front() != 0.0) throw ValidationError("decoherence_matrix: t_grid must start at 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw ValidationError("decoherence_matrix: t_grid must be ascending");
  }

  const int dim = s.dim();
  const int nb = coeffs.size();
  const std::size_t nt = t_grid.size();
  const std::size_t npairs = static_cast<std::size_t>(dim * (dim - 1) / 2);
  std::vector<std::pair<int, int>> pairs_nm;
  for (int n = 0; n < dim; ++n) {
    for (int m = n + 1; m < dim; ++m) pairs_nm.emplace_back(n, m);
  }

  // Per-level accumulated a-term phase rate: Phi_x(t) = t * sum_seg f alpha(sigma_seg(x)).
  auto phase_rate = [&](int k, int x) {
    double r = 0.0;
    for (const auto& seg : schedule.segments) r += seg.fraction * alpha_rel(coeffs, s, k, mapped_level(s, x, seg.flipped));
    return r;
  };

  // singles[k][t * npairs + p]: closed form cos((Phi_n - Phi_m)/2), real.
  std::vector<std::vector<double>> singles(static_cast<std::size_t>(nb), std::vector<double>(nt * npairs));
  for (int k = 0; k < nb; ++k) {
    std::vector<double> rate(static_cast<std::size_t>(dim));
    for (int x = 0; x < dim; ++x) rate[static_cast<std::size_t>(x)] = phase_rate(k, x);
    auto& row = singles[static_cast<std::size_t>(k)];
    for (std::size_t ti = 0; ti < nt; ++ti) {
      for (std::size_t p = 0; p < npairs; ++p) {
        const auto [n, m] = pairs_nm[p];
        row[ti * npairs + p] =
            std::cos(0.5 * (rate[static_cast<std::size_t>(n)] - rate[static_cast<std::size_t>(m)]) * t_grid[ti]);
      }
    }
  }

  std::vector<Complex> acc(nt * npairs, Complex(1.0, 0.0));
  for (int k = 0; k < nb; ++k) {
    const auto& row = singles[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] *= row[i];
  }

  long guarded = 0;
  long skipped = 0;
  if (options.order == 2) {
    std::vector<PairLevelParams> lp(static_cast<std::size_t>(dim));
    std::vector<PairBlocks> w(static_cast<std::size_t>(dim));
    // Segments sharing a duration fraction share their propagators.
    const std::size_t nseg = schedule.segments.size();
    std::vector<std::size_t> segment_source(nseg);
    for (std::size_t sg = 0; sg < nseg; ++sg) {
      segment_source[sg] = sg;
      for (std::size_t q = 0; q < sg; ++q) {
        if (schedule.segments[q].fraction == schedule.segments[sg].fraction) {
          segment_source[sg] = q;
          break;
        }
      }
    }
    std::vector<std::vector<PairBlocks>> props(nseg, std::vector<PairBlocks>(static_cast<std::size_t>(dim)));
    // On a uniform grid the propagators advance by one fixed step per point,
    // which replaces the trigonometric evaluations by a 2x2 product.
    const double dt = nt > 1 ? t_grid[1] - t_grid[0] : 0.0;
    bool uniform = nt > 2;
    for (std::size_t ti = 1; uniform && ti < nt; ++ti) {
      uniform = std::abs(t_grid[ti] - static_cast<double>(ti) * dt) <= 1e-12 * t_grid.back();
    }
    auto steps = props;
    for (int j = 0; j < nb; ++j) {
      for (int k = j + 1; k < nb; ++k) {
        if (options.pair_cutoff > 0.0 && pair_strength(coeffs, j, k) < options.pair_cutoff) {
          ++skipped;
          continue;
        }
        for (int y = 0; y < dim; ++y) lp[static_cast<std::size_t>(y)] = pair_params(coeffs, s, j, k, y);
        if (uniform) {
          for (std::size_t sg = 0; sg < nseg; ++sg) {
            for (int y = 0; y < dim; ++y) {
              steps[sg][static_cast<std::size_t>(y)] =
                  pair_propagator(lp[static_cast<std::size_t>(y)], schedule.segments[sg].fraction * dt);
            }
          }
        }
        const auto& sj = singles[static_cast<std::size_t>(j)];
        const auto& sk = singles[static_cast<std::size_t>(k)];
        for (std::size_t ti = 0; ti < nt; ++ti) {
          const double t = t_grid[ti];
          for (std::size_t sg = 0; sg < nseg; ++sg) {
            if (segment_source[sg] != sg) continue;
            for (int y = 0; y < dim; ++y) {
              const auto uy = static_cast<std::size_t>(y);
              if (uniform && ti > 0) {
                props[sg][uy] = compose(steps[sg][uy], props[sg][uy]);
              } else {
                props[sg][uy] = pair_propagator(lp[uy], schedule.segments[sg].fraction * t);
              }
            }
          }
          for (int x = 0; x < dim; ++x) {
            PairBlocks total;
            for (std::size_t sg = 0; sg < nseg; ++sg) {
              const int y = mapped_level(s, x, schedule.segments[sg].flipped);
              const PairBlocks& u = props[segment_source[sg]][static_cast<std::size_t>(y)];
              total = sg == 0 ? u : compose(u, total);
            }
            w[static_cast<std::size_t>(x)] = total;
          }
          for (std::size_t p = 0; p < npairs; ++p) {
            const std::size_t idx = ti * npairs + p;
            if (std::abs(sj[idx]) < options.division_floor || std::abs(sk[idx]) < options.division_floor) {
              ++guarded;
              continue;
            }
            const auto [n, m] = pairs_nm[p];
            const Complex r = pair_overlap(w[static_cast<std::size_t>(n)], w[static_cast<std::size_t>(m)]);
            const double inv = 1.0 / (sj[idx] * sk[idx]);
            const double ar = acc[idx].real();
            const double ai = acc[idx].imag();
            acc[idx] = {(ar * r.real() - ai * r.imag()) * inv, (ar * r.imag() + ai * r.real()) * inv};
          }
        }
      }
    }
  }

  DecoherenceMatrix out;
  out.s = s;
  out.times = t_grid;
  out.values.reserve(nt);
  for (std::size_t ti = 0; ti < nt; ++ti) {
    CMatrix L = CMatrix::Identity(dim, dim);
    for (std::size_t p = 0; p < npairs; ++p) {
      const auto [n, m] = pairs_nm[p];
      L(n, m) = acc[ti * npairs + p];
      L(m, n) = std::conj(L(n, m));
    }
    out.values.push_back(std::move(L));
  }
  if (stats) {
    stats->guarded_pairs += guarded;
    stats->skipped_pairs += skipped;
  }
  out.validate();
  return out;
}

std::vector<DecoherenceMatrix> decoherence_ensemble(const std::vector<EffectiveCoefficients>& configs,
                                                    const EvolutionSchedule& schedule, SpinQuantum s,
                                                    const std::vector<double>& t_grid, const CceOptions& options,
                                                    int workers, CceStats* stats) {
  std::vector<DecoherenceMatrix> out(configs.size());
  std::vector<CceStats> local(configs.size());
  parallel_for(configs.size(), workers, [&](std::size_t i) {
    out[i] = decoherence_matrix(schedule, configs[i], s, t_grid, options, &local[i]);
  });
  if (stats) {
    for (const auto& l : local) {
      stats->guarded_pairs += l.guarded_pairs;
      stats->skipped_pairs += l.skipped_pairs;
    }
  }
  return out;
}

EnsembleResult ensemble_average(const std::vector<DecoherenceMatrix>& per_config, const PureState& psi,
                                const StateMap& post, std::vector<std::uint64_t> seeds) {
  if (per_config.empty()) throw ValidationError("ensemble_average: no configurations");
  const auto& times = per_config.front().times;
  for (const auto& L : per_config) {
    if (L.times != times) throw ValidationError("ensemble_average: configurations must share the time grid");
    if (L.dim() != psi.dim()) throw ValidationError("ensemble_average: state dimension mismatch");
  }
  const CMatrix rho0 = psi.projector();
  const CVector& v = psi.amplitudes();
  EnsembleResult r;
  r.times = times;
  r.seeds = std::move(seeds);
  r.per_configuration.reserve(per_config.size());
  for (const auto& L : per_config) {
    std::vector<double> f2(times.size());
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      CMatrix rho = L.values[ti].cwiseProduct(rho0);
      Eigen::SelfAdjointEigenSolver<CMatrix> eig(rho, Eigen::EigenvaluesOnly);
      const double low = eig.eigenvalues().minCoeff();
      if (low < -DensityMatrix::kEigenTol) {
        ++r.non_psd;
        r.min_eigenvalue = std::min(r.min_eigenvalue, low);
      }
      if (post) rho = post(rho);
      f2[ti] = (v.adjoint() * rho * v)(0, 0).real();
    }
    r.per_configuration.push_back(std::move(f2));
  }
  const double count = static_cast<double>(per_config.size());
  r.mean.assign(times.size(), 0.0);
  r.std.assign(times.size(), 0.0);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    double sum = 0.0;
    for (const auto& f : r.per_configuration) sum += f[ti];
    r.mean[ti] = sum / count;
    double sq = 0.0;
    for (const auto& f : r.per_configuration) sq += (f[ti] - r.mean[ti]) * (f[ti] - r.mean[ti]);
    r.std[ti] = std::sqrt(sq / count);
  }
  return r;
}

DecoherenceMatrix mean_decoherence(const std::vector<DecoherenceMatrix>& per_config) {
  if (per_config.empty()) throw ValidationError("mean_decoherence: no configurations");
  DecoherenceMatrix out = per_config.front();
  for (std::size_t i = 1; i < per_config.size(); ++i) {
    if (per_config[i].times != out.times || per_config[i].dim() != out.dim()) {
      throw ValidationError("mean_decoherence: configurations must share grid and spin");
    }
    for (std::size_t ti = 0; ti < out.times.size(); ++ti) out.values[ti] += per_config[i].values[ti];
  }
  for (auto& v : out.values) v /= static_cast<double>(per_config.size());
  return out;
}

const CMatrix& decoherence_at(const DecoherenceMatrix& L, double t) {
  if (L.times.empty()) throw ValidationError("decoherence_at: empty grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < L.times.size(); ++i) {
    if (std::abs(L.times[i] - t) < std::abs(L.times[best] - t)) best = i;
  }
  return L.values[best];
}

}  // namespace quditqec
