#include "quditqec/qec_codes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quditqec/random.hpp"

namespace quditqec {

int default_error_count(SpinQuantum s) { return s.two_s() / 2 + 1; }

std::vector<int> logical_support(SpinQuantum s, int word) {
  if (word != 0 && word != 1) throw ValidationError("logical_support: word must be 0 or 1");
  std::vector<int> out;
  for (int l = word; l < s.dim(); l += 2) out.push_back(l);
  return out;
}

namespace {

double hs_norm(const CMatrix& m) { return m.norm(); }

// Entries of E rho0 E^dagger for diagonal E.
CMatrix sandwich(const CVector& e, const CMatrix& rho0) {
  return e.asDiagonal() * rho0 * e.conjugate().asDiagonal();
}

void fix_gauge(CVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-300) {
      v *= std::conj(v(i)) / std::abs(v(i));
      v(i) = std::abs(v(i));
      return;
    }
  }
}

}  // namespace

ErrorOperatorSet fit_error_operators(const DensityMatrix& rho0, const CMatrix& L_t, int K,
                                     const SimplexOptions& options, double optimization_time) {
  const int d = rho0.dim();
  if (K < 1) throw ValidationError("fit_error_operators: K must be >= 1");
  const DensityMatrix rho_t = dephase_elementwise(L_t, rho0);
  const CMatrix& r0 = rho0.matrix();

  std::vector<int> support;
  for (int n = 0; n < d; ++n) {
    if (r0(n, n).real() > 1e-14) support.push_back(n);
  }
  const int ns = static_cast<int>(support.size());

  ErrorOperatorSet out;
  out.optimization_time = optimization_time;
  CMatrix residual = rho_t.matrix();
  for (int k = 0; k < K; ++k) {
    auto unpack = [&](const std::vector<double>& p) {
      CVector e = CVector::Zero(d);
      for (int i = 0; i < ns; ++i) e(support[static_cast<std::size_t>(i)]) = Complex(p[2 * i], p[2 * i + 1]);
      return e;
    };
    auto objective = [&](const std::vector<double>& p) {
      const CVector e = unpack(p);
      double acc = 0.0;
      for (int a : support) {
        for (int b : support) acc += std::norm(residual(a, b) - e(a) * std::conj(e(b)) * r0(a, b));
      }
      return acc;
    };

    // Start from the dominant column of R / rho0, a rank-1 guess.
    std::vector<double> start(static_cast<std::size_t>(2 * ns), 0.0);
    int pivot = -1;
    double best_diag = 0.0;
    for (int a : support) {
      const double q = residual(a, a).real() / r0(a, a).real();
      if (q > best_diag) {
        best_diag = q;
        pivot = a;
      }
    }
    double scale = 1.0;
    if (pivot >= 0) {
      const double root = std::sqrt(best_diag);
      scale = root;
      for (int i = 0; i < ns; ++i) {
        const int a = support[static_cast<std::size_t>(i)];
        const Complex v = residual(a, pivot) / r0(a, pivot) / root;
        start[static_cast<std::size_t>(2 * i)] = std::isfinite(v.real()) ? v.real() : 0.0;
        start[static_cast<std::size_t>(2 * i + 1)] = std::isfinite(v.imag()) ? v.imag() : 0.0;
      }
    }
    SimplexOptions opt = options;
    opt.seed = splitmix64(options.seed + static_cast<std::uint64_t>(k));
    SimplexResult res = nelder_mead_restarts(objective, start, std::max(scale, 1e-3), opt);

    CVector e = unpack(res.x);
    const double zero_value = objective(std::vector<double>(static_cast<std::size_t>(2 * ns), 0.0));
    if (!(res.value <= zero_value)) e.setZero();
    out.converged = out.converged && res.converged;
    fix_gauge(e);
    residual -= sandwich(e, r0);
    out.operators.push_back(e);
    out.residual_norms.push_back(hs_norm(residual));
  }
  return out;
}

double kl_residual(const std::vector<CVector>& errors, const CodeWords& words) {
  double total = 0.0;
  for (const auto& ek : errors) {
    for (const auto& ej : errors) {
      const CVector prod = ek.conjugate().cwiseProduct(ej);
      const Complex a = words.zero_l.dot(prod.cwiseProduct(words.zero_l));
      const Complex b = words.one_l.dot(prod.cwiseProduct(words.one_l));
      total += std::abs(a - b);
    }
  }
  return total;
}

double kl_cross_residual(const std::vector<CVector>& errors, const CodeWords& words) {
  double worst = 0.0;
  for (const auto& ek : errors) {
    for (const auto& ej : errors) {
      const CVector prod = ek.conjugate().cwiseProduct(ej);
      worst = std::max(worst, std::abs(words.zero_l.dot(prod.cwiseProduct(words.one_l))));
    }
  }
  return worst;
}

namespace {

void require_half_integer(SpinQuantum s, const char* who) {
  if (!s.half_integer()) throw ValidationError(std::string(who) + ": integer S is not supported");
}

CodeWords words_from_weights(SpinQuantum s, const RVector& u) {
  CodeWords w;
  w.s = s;
  w.zero_l = CVector::Zero(s.dim());
  w.one_l = CVector::Zero(s.dim());
  for (int c = 0; c < 2; ++c) {
    double norm = 0.0;
    for (int l : logical_support(s, c)) norm += std::max(0.0, u(l));
    CVector& target = c == 0 ? w.zero_l : w.one_l;
    for (int l : logical_support(s, c)) target(l) = std::sqrt(std::max(0.0, u(l)) / norm);
  }
  return w;
}

RVector binomial_weights(SpinQuantum s) {
  RVector u(s.dim());
  for (int l = 0; l < s.dim(); ++l) u(l) = std::exp(std::lgamma(s.two_s() + 1.0) - std::lgamma(l + 1.0) - std::lgamma(s.two_s() - l + 1.0));
  return u;
}

// Rows carry the parity sign, so exact Knill-Laflamme weights (w0 on even
// levels, w1 on odd) satisfy A w = 0.
RMatrix kl_constraint_matrix(const std::vector<CVector>& errors, SpinQuantum s) {
  const int d = s.dim();
  std::vector<RVector> rows;
  for (std::size_t k = 0; k < errors.size(); ++k) {
    for (std::size_t j = k; j < errors.size(); ++j) {
      RVector re(d), im(d);
      for (int l = 0; l < d; ++l) {
        const Complex p = std::conj(errors[k](l)) * errors[j](l);
        const double sign = (l % 2 == 0) ? 1.0 : -1.0;
        re(l) = sign * p.real();
        im(l) = sign * p.imag();
      }
      rows.push_back(re);
      if (j != k) rows.push_back(im);
    }
  }
  RMatrix a(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t r = 0; r < rows.size(); ++r) a.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  return a;
}

// Projects weights onto the null space of the constraint matrix; returns
// false when that space is empty or the projection leaves the simplex.
bool project_onto_exact(const std::vector<CVector>& errors, SpinQuantum s, RVector& weights) {
  const RMatrix a = kl_constraint_matrix(errors, s);
  Eigen::JacobiSVD<RMatrix> svd(a, Eigen::ComputeFullV);
  const RVector& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  const int d = s.dim();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > 1e-11 * std::max(top, 1e-300)) ++rank;
  }
  if (rank >= d) return false;
  const RMatrix null = svd.matrixV().rightCols(d - rank);
  RVector p = null * (null.transpose() * weights);
  double s0 = 0.0, s1 = 0.0;
  for (int l = 0; l < d; ++l) (l % 2 == 0 ? s0 : s1) += p(l);
  if (!(s0 > 0.0) || !(s1 > 0.0)) return false;
  RVector w(d);
  for (int l = 0; l < d; ++l) {
    w(l) = p(l) / (l % 2 == 0 ? s0 : s1);
    if (w(l) < -1e-12) return false;
    w(l) = std::max(0.0, w(l));
  }
  weights = w;
  return true;
}

}  // namespace

CodeWords solve_kl(const std::vector<CVector>& errors, SpinQuantum s, const KlOptions& options, const CodeWords* start) {
  require_half_integer(s, "solve_kl");
  for (const auto& e : errors) {
    if (e.size() != s.dim()) throw ValidationError("solve_kl: error dimension mismatch");
  }
  const int d = s.dim();
  auto objective = [&](const std::vector<double>& p) {
    RVector u(d);
    for (int l = 0; l < d; ++l) u(l) = p[static_cast<std::size_t>(l)] * p[static_cast<std::size_t>(l)];
    for (int c = 0; c < 2; ++c) {
      double norm = 0.0;
      for (int l : logical_support(s, c)) norm += u(l);
      if (!(norm > 1e-300)) return std::numeric_limits<double>::max();
    }
    return kl_residual(errors, words_from_weights(s, u));
  };

  RVector w0 = binomial_weights(s);
  if (start) {
    for (int l = 0; l < d; ++l) w0(l) = std::norm(l % 2 == 0 ? start->zero_l(l) : start->one_l(l));
  }
  std::vector<double> x0(static_cast<std::size_t>(d));
  double total = w0.sum();
  for (int l = 0; l < d; ++l) x0[static_cast<std::size_t>(l)] = std::sqrt(w0(l) / total);

  SimplexResult res = nelder_mead_restarts(objective, x0, 1.0, options.simplex);
  RVector u(d);
  for (int l = 0; l < d; ++l) u(l) = res.x[static_cast<std::size_t>(l)] * res.x[static_cast<std::size_t>(l)];
  CodeWords best = words_from_weights(s, u);
  best.kl_residual = kl_residual(errors, best);

  // Normalise supports before projecting.
  RVector weights(d);
  for (int l = 0; l < d; ++l) weights(l) = std::norm(l % 2 == 0 ? best.zero_l(l) : best.one_l(l));
  if (project_onto_exact(errors, s, weights)) {
    CodeWords exact = words_from_weights(s, weights);
    exact.kl_residual = kl_residual(errors, exact);
    if (exact.kl_residual < best.kl_residual) best = exact;
  }
  best.flagged = !(best.kl_residual <= options.threshold);
  return best;
}

CodeWords derive_code_words(const ErrorOperatorSet& errors, SpinQuantum s, const KlOptions& options,
                            const CodeWords* start) {
  require_half_integer(s, "derive_code_words");
  return solve_kl(errors.operators, s, options, start);
}

std::vector<CVector> sz_power_errors(SpinQuantum s, int K) {
  std::vector<CVector> out;
  for (int k = 0; k < K; ++k) {
    CVector e(s.dim());
    for (int l = 0; l < s.dim(); ++l) e(l) = std::pow(s.m_of(l), k);
    out.push_back(e);
  }
  return out;
}

CodeWords spin_binomial_baseline(SpinQuantum s) {
  require_half_integer(s, "spin_binomial_baseline");
  KlOptions options;
  options.threshold = 1e-9;
  return solve_kl(sz_power_errors(s, default_error_count(s)), s, options);
}

CodeWords bare_code_words(SpinQuantum s) {
  if (s.two_s() != 1) throw ValidationError("bare_code_words: only defined for S = 1/2");
  CodeWords w;
  w.s = s;
  w.zero_l = CVector::Unit(2, 0);
  w.one_l = CVector::Unit(2, 1);
  return w;
}

RecoveryPlan build_detection_recovery(const std::vector<CVector>& errors, const CodeWords& words) {
  const int d = words.s.dim();
  if (errors.empty()) throw ValidationError("build_detection_recovery: empty error set");
  const std::array<const CVector*, 2> logical{&words.zero_l, &words.one_l};

  RecoveryPlan plan;
  std::array<std::vector<CVector>, 2> basis;
  for (std::size_t k = 0; k < errors.size(); ++k) {
    std::array<CVector, 2> candidate;
    bool ok = true;
    for (int c = 0; c < 2; ++c) {
      CVector v = errors[k].cwiseProduct(*logical[static_cast<std::size_t>(c)]);
      const double raw = v.norm();
      for (const auto& b : basis[static_cast<std::size_t>(c)]) v -= b.dot(v) * b;
      // Second pass keeps the basis orthonormal to rounding.
      for (const auto& b : basis[static_cast<std::size_t>(c)]) v -= b.dot(v) * b;
      const double left = v.norm();
      if (!(raw > 0.0) || left < 1e-8 * std::max(1.0, raw)) {
        ok = false;
        break;
      }
      candidate[static_cast<std::size_t>(c)] = v / left;
    }
    if (!ok) {
      plan.reduced = true;
      continue;
    }
    for (int c = 0; c < 2; ++c) basis[static_cast<std::size_t>(c)].push_back(candidate[static_cast<std::size_t>(c)]);
    plan.error_words.push_back(candidate);
    plan.kept_errors.push_back(static_cast<int>(k));
  }
  if (plan.error_words.empty()) throw NumericalError("build_detection_recovery: no usable error words");
  if (2 * static_cast<int>(plan.error_words.size()) > d) {
    throw NumericalError("build_detection_recovery: error words exceed the qudit dimension");
  }

  for (const auto& ew : plan.error_words) {
    CMatrix p = CMatrix::Zero(d, d);
    CMatrix r = CMatrix::Identity(d, d);
    for (int c = 0; c < 2; ++c) {
      const CVector& e = ew[static_cast<std::size_t>(c)];
      const CVector& target = *logical[static_cast<std::size_t>(c)];
      p += e * e.adjoint();
      // e = alpha target + beta perp; rotate (target, perp) by [[conj a, conj b], [-b, a]].
      const Complex alpha = target.dot(e);
      CVector perp = e - alpha * target;
      const double beta_abs = perp.norm();
      if (beta_abs < 1e-14) {
        r += (std::conj(alpha) / std::abs(alpha) - 1.0) * target * target.adjoint();
        continue;
      }
      perp /= beta_abs;
      const Complex beta = beta_abs;
      CMatrix basis_2(d, 2);
      basis_2.col(0) = target;
      basis_2.col(1) = perp;
      Eigen::Matrix2cd rot;
      rot << std::conj(alpha), std::conj(beta), -beta, alpha;
      r += basis_2 * (rot - Eigen::Matrix2cd::Identity()) * basis_2.adjoint();
    }
    plan.projectors.push_back(p);
    plan.recoveries.push_back(r);
  }
  for (const auto& r : plan.recoveries) {
    if ((r.adjoint() * r - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10) {
      throw NumericalError("build_detection_recovery: recovery is not unitary");
    }
  }
  return plan;
}

DensityMatrix apply_qec(const DensityMatrix& rho, const RecoveryPlan& plan) {
  return DensityMatrix(apply_qec(rho.matrix(), plan));
}

CMatrix apply_qec(const CMatrix& rho, const RecoveryPlan& plan) {
  const int d = static_cast<int>(rho.rows());
  CMatrix total = CMatrix::Zero(d, d);
  CMatrix covered = CMatrix::Zero(d, d);
  for (int k = 0; k < plan.size(); ++k) {
    const CMatrix& p = plan.projectors[static_cast<std::size_t>(k)];
    const CMatrix& r = plan.recoveries[static_cast<std::size_t>(k)];
    if (p.rows() != d) throw ValidationError("apply_qec: plan dimension mismatch");
    total += r * p * rho * p * r.adjoint();
    covered += p;
  }
  const CMatrix q = CMatrix::Identity(d, d) - covered;
  total += q * rho * q;
  return 0.5 * (total + total.adjoint());
}

PureState logical_state(const CodeWords& words, double theta) {
  return PureState(std::cos(theta) * words.zero_l + kI * std::sin(theta) * words.one_l);
}

std::vector<double> gain_curve(const std::vector<double>& f2_s, const std::vector<double>& f2_half) {
  if (f2_s.size() != f2_half.size()) throw ValidationError("gain_curve: grid mismatch");
  std::vector<double> g(f2_s.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double den = 1.0 - f2_s[i];
    g[i] = den < kGainFloor ? std::numeric_limits<double>::quiet_NaN() : (1.0 - f2_half[i]) / den;
  }
  return g;
}

GainCurve ensemble_gain(const std::vector<double>& times, const std::vector<std::vector<double>>& f2_s,
                        const std::vector<std::vector<double>>& f2_half) {
  if (f2_s.size() != f2_half.size() || f2_s.empty()) throw ValidationError("ensemble_gain: configuration mismatch");
  GainCurve out;
  out.times = times;
  out.mean.assign(times.size(), 0.0);
  out.std.assign(times.size(), 0.0);
  out.counts.assign(times.size(), 0);
  std::vector<std::vector<double>> gains;
  for (std::size_t c = 0; c < f2_s.size(); ++c) {
    if (f2_s[c].size() != times.size()) throw ValidationError("ensemble_gain: grid mismatch");
    gains.push_back(gain_curve(f2_s[c], f2_half[c]));
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (std::isnan(gains.back()[i])) continue;
      out.mean[i] += gains.back()[i];
      ++out.counts[i];
    }
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (out.counts[i] == 0) {
      out.mean[i] = out.std[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    out.mean[i] /= out.counts[i];
    double sq = 0.0;
    for (const auto& g : gains) {
      if (!std::isnan(g[i])) sq += (g[i] - out.mean[i]) * (g[i] - out.mean[i]);
    }
    out.std[i] = std::sqrt(sq / out.counts[i]);
  }
  return out;
}

ThetaSurface theta_sweep(const CodeWords& words, const std::vector<DecoherenceMatrix>& per_config,
                         const RecoveryPlan& plan, const std::vector<double>& thetas) {
  ThetaSurface out;
  out.thetas = thetas;
  if (per_config.empty()) throw ValidationError("theta_sweep: no configurations");
  out.times = per_config.front().times;
  for (double th : thetas) {
    if (th < -1e-12 || th > kPi / 2 + 1e-12) throw ValidationError("theta_sweep: theta must be in [0, pi/2]");
    const auto r = ensemble_average(per_config, logical_state(words, th),
                                    [&](const CMatrix& rho) { return apply_qec(rho, plan); });
    out.f2.push_back(r.mean);
  }
  return out;
}

CodePlan optimize_numerical_code(const CMatrix& L_topt, SpinQuantum s, double t_opt, const CodeOptions& options) {
  require_half_integer(s, "optimize_numerical_code");
  CodePlan out;
  out.kind = "numerical";
  out.t_opt = t_opt;
  CodeWords words = spin_binomial_baseline(s);
  const int K = default_error_count(s);
  for (int pass = 0; pass < std::max(1, options.depth); ++pass) {
    const DensityMatrix rho0(logical_state(words, kPi / 4));
    SimplexOptions fit = options.fit;
    fit.seed = splitmix64(options.fit.seed + 1000u * static_cast<std::uint64_t>(pass));
    out.errors = fit_error_operators(rho0, L_topt, K, fit, t_opt);
    const CodeWords previous = words;
    words = derive_code_words(out.errors, s, options.kl, &previous);
  }
  out.words = words;
  out.plan = build_detection_recovery(out.errors.operators, out.words);
  return out;
}

CodePlan binomial_code_plan(SpinQuantum s) {
  CodePlan out;
  out.kind = "binomial";
  out.words = spin_binomial_baseline(s);
  out.errors.operators = sz_power_errors(s, default_error_count(s));
  out.errors.residual_norms.assign(out.errors.operators.size(), 0.0);
  out.plan = build_detection_recovery(out.errors.operators, out.words);
  return out;
}

CodePlan bare_code_plan(SpinQuantum s) {
  CodePlan out;
  out.kind = "bare";
  out.words = bare_code_words(s);
  out.errors.operators = {CVector::Ones(2)};
  out.errors.residual_norms = {0.0};
  out.plan = build_detection_recovery(out.errors.operators, out.words);
  return out;
}

}  // namespace quditqec
