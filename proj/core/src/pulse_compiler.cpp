#include "quditqec/pulse_compiler.hpp"

#include <algorithm>
#include <cmath>

namespace quditqec {

namespace {

constexpr double kSkipAngle = 1e-14;
constexpr double kStageTolerance = 1e-9;

double wrap_phase(double phi) { return std::remainder(phi, 2.0 * kPi); }

double safe_arg(Complex z) { return std::abs(z) > 1e-300 ? std::arg(z) : 0.0; }

// Left-multiplies the rows (i, j) of m by Y_ij(theta, phi).
void apply_rotation(CMatrix& m, int i, int j, double theta, double phi) {
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const Complex up = -s * std::exp(Complex(0.0, -phi));
  const Complex down = s * std::exp(Complex(0.0, phi));
  for (Eigen::Index col = 0; col < m.cols(); ++col) {
    const Complex a = m(i, col);
    const Complex b = m(j, col);
    m(i, col) = c * a + up * b;
    m(j, col) = down * a + c * b;
  }
}

void check_pulse(int dim, const Pulse& p) {
  if (p.level < 0 || p.level + 1 >= dim) throw ValidationError("pulse: level out of range");
  if (!(p.duration_ns > 0.0)) throw ValidationError("pulse: duration must be positive");
}

void require_even_dim(SpinQuantum s, const char* who) {
  if (!s.half_integer()) throw ValidationError(std::string(who) + ": integer S is not supported");
}

CMatrix apply_residue(CMatrix u, const CVector& residue) {
  if (residue.size() == 0) return u;
  return residue.asDiagonal() * u;
}

void require_stage(const SequenceStage& stage, int dim, const char* who) {
  CMatrix u = apply_residue(compose(dim, stage.pulses), stage.phase_residue);
  const double err = recomposition_error(u, stage.target, stage.columns);
  if (!(err <= kStageTolerance)) {
    throw NumericalError(std::string(who) + ": recomposition error " + std::to_string(err));
  }
}

}  // namespace

CMatrix rotation_matrix(int dim, const Rotation& r) {
  if (r.i < 0 || r.j >= dim || r.i >= r.j) throw ValidationError("rotation_matrix: invalid level pair");
  CMatrix u = CMatrix::Identity(dim, dim);
  apply_rotation(u, r.i, r.j, r.theta, r.phi);
  return u;
}

CMatrix pulse_matrix(int dim, const Pulse& p) {
  check_pulse(dim, p);
  return rotation_matrix(dim, {p.level, p.level + 1, p.theta, p.phi});
}

CMatrix compose(int dim, const std::vector<Pulse>& pulses) {
  CMatrix u = CMatrix::Identity(dim, dim);
  for (const auto& p : pulses) {
    check_pulse(dim, p);
    apply_rotation(u, p.level, p.level + 1, p.theta, p.phi);
  }
  return u;
}

int PulseSequence::pulse_count() const {
  int n = 0;
  for (const auto& st : stages) n += static_cast<int>(st.pulses.size());
  return n;
}

int PulseSequence::measurement_count() const {
  int n = 0;
  for (const auto& st : stages) n += st.measurements;
  return n;
}

double PulseSequence::total_duration_ns(double measurement_ns) const {
  double total = 0.0;
  for (const auto& st : stages) {
    for (const auto& p : st.pulses) total += p.duration_ns;
    total += st.measurements * measurement_ns;
  }
  return total;
}

Decomposition two_level_decompose(const CMatrix& U) {
  const int d = static_cast<int>(U.rows());
  if (U.cols() != d || d < 1) throw ValidationError("two_level_decompose: matrix must be square");
  if ((U.adjoint() * U - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10) {
    throw ValidationError("two_level_decompose: matrix is not unitary");
  }
  // G_n ... G_1 U^dag = D, so U = D^dag G_n ... G_1.
  CMatrix m = U.adjoint();
  Decomposition out;
  for (int c = 0; c + 1 < d; ++c) {
    for (int r = d - 1; r > c; --r) {
      const Complex a = m(r - 1, c);
      const Complex b = m(r, c);
      if (std::abs(b) < kSkipAngle) continue;
      const double theta = 2.0 * std::atan2(std::abs(b), std::abs(a));
      const double phi = wrap_phase(std::arg(b) - safe_arg(a) + kPi);
      apply_rotation(m, r - 1, r, theta, phi);
      out.rotations.push_back({r - 1, r, theta, phi});
    }
  }
  out.phase_residue = m.diagonal().conjugate();
  return out;
}

std::vector<Pulse> adjacency_reduce(const Rotation& r, double pulse_ns) {
  if (r.i < 0 || r.j <= r.i) throw ValidationError("adjacency_reduce: invalid level pair");
  if (r.j == r.i + 1) return {{r.i, r.theta, r.phi, pulse_ns}};
  std::vector<Pulse> out{{r.i, -kPi, 0.0, pulse_ns}};
  for (const auto& p : adjacency_reduce({r.i + 1, r.j, -r.theta, r.phi}, pulse_ns)) out.push_back(p);
  out.push_back({r.i, kPi, 0.0, pulse_ns});
  return out;
}

std::vector<Pulse> phase_gadget(int level, double delta, double pulse_ns) {
  return {{level, kPi, wrap_phase(delta), pulse_ns}, {level, kPi, 0.0, pulse_ns}};
}

namespace {

// Spreads the amplitude sitting on levels[0] over `levels` so that it ends
// up as g * b, g the phase making b[levels[0]] real. Consecutive entries of
// `levels` must be adjacent. Returns g.
Complex distribute(const CVector& b, const std::vector<int>& levels, double pulse_ns, std::vector<Pulse>& out) {
  const Complex anchor = b(levels.front());
  const Complex g = std::abs(anchor) > 1e-14 ? std::conj(anchor) / std::abs(anchor) : Complex(1.0, 0.0);
  const CVector t = g * b;
  Complex r{1.0, 0.0};
  for (std::size_t idx = 0; idx + 1 < levels.size(); ++idx) {
    const int cur = levels[idx];
    const int nxt = levels[idx + 1];
    double tail = 0.0;
    for (std::size_t k = idx + 1; k < levels.size(); ++k) tail += std::norm(t(levels[k]));
    tail = std::sqrt(tail);
    // atan2 keeps small transfers accurate where acos would not.
    const double theta = 2.0 * std::atan2(tail, std::abs(t(cur)));
    if (theta < kSkipAngle) break;
    const double desired = std::abs(t(nxt)) > 1e-14 ? std::arg(t(nxt)) : 0.0;
    double phi;
    if (nxt < cur) {
      // amplitude moves from j = cur to i = nxt and picks up -e^{-i phi}
      phi = kPi + std::arg(r) - desired;
    } else {
      phi = desired - std::arg(r);
    }
    out.push_back({std::min(cur, nxt), theta, wrap_phase(phi), pulse_ns});
    r = std::polar(1.0, desired);
  }
  return g;
}

}  // namespace

SequenceStage compile_encoding(const CodeWords& words, double pulse_ns) {
  const SpinQuantum s = words.s;
  require_even_dim(s, "compile_encoding");
  const int d = s.dim();
  const int K = d / 2;
  if (words.zero_l.size() != d || words.one_l.size() != d) throw ValidationError("compile_encoding: dimension mismatch");
  for (int l = 0; l < d; ++l) {
    const double stray = std::abs(l % 2 == 0 ? words.one_l(l) : words.zero_l(l));
    if (stray > 1e-10) throw ValidationError("compile_encoding: code words must have alternating support");
  }
  if (std::abs(words.zero_l.norm() - 1.0) > 1e-8 || std::abs(words.one_l.norm() - 1.0) > 1e-8) {
    throw ValidationError("compile_encoding: code words must be normalised");
  }

  // Block layout: lower half holds |0_L> (position p -> level 2p), upper
  // half holds |1_L> (K + p -> 2p + 1). Bubble sort gives the pi swaps.
  std::vector<int> dest(static_cast<std::size_t>(d));
  for (int p = 0; p < K; ++p) {
    dest[static_cast<std::size_t>(p)] = 2 * p;
    dest[static_cast<std::size_t>(K + p)] = 2 * p + 1;
  }
  std::vector<Pulse> swaps;
  for (bool moved = true; moved;) {
    moved = false;
    for (int l = 0; l + 1 < d; ++l) {
      if (dest[static_cast<std::size_t>(l)] > dest[static_cast<std::size_t>(l + 1)]) {
        std::swap(dest[static_cast<std::size_t>(l)], dest[static_cast<std::size_t>(l + 1)]);
        swaps.push_back({l, kPi, 0.0, pulse_ns});
        moved = true;
      }
    }
  }
  const CMatrix perm = compose(d, swaps);
  const CVector b0 = perm.adjoint() * words.zero_l;
  const CVector b1 = perm.adjoint() * words.one_l;

  std::vector<int> lower, upper;
  for (int l = K - 1; l >= 0; --l) lower.push_back(l);
  for (int l = K; l < d; ++l) upper.push_back(l);
  std::vector<Pulse> spread;
  const Complex g0 = distribute(b0, lower, pulse_ns, spread);
  const Complex g1 = distribute(b1, upper, pulse_ns, spread);

  SequenceStage stage;
  stage.label = "encoding";
  const double delta = 0.5 * std::arg(g1 * std::conj(g0));
  if (std::abs(delta) > 1e-12) stage.pulses = phase_gadget(K - 1, delta, pulse_ns);
  stage.pulses.insert(stage.pulses.end(), spread.begin(), spread.end());
  stage.pulses.insert(stage.pulses.end(), swaps.begin(), swaps.end());
  stage.target = CMatrix::Zero(d, d);
  stage.target.col(K - 1) = words.zero_l;
  stage.target.col(K) = words.one_l;
  stage.columns = {K - 1, K};
  require_stage(stage, d, "compile_encoding");
  return stage;
}

SequenceStage compile_echo(SpinQuantum s, double pulse_ns) {
  require_even_dim(s, "compile_echo");
  const int d = s.dim();
  SequenceStage stage;
  stage.label = "echo";
  for (int l = 0; l < d / 2; ++l) {
    for (const auto& p : adjacency_reduce({l, d - 1 - l, kPi, 0.0}, pulse_ns)) stage.pulses.push_back(p);
  }
  const CMatrix u = compose(d, stage.pulses);
  const CMatrix target = echo_unitary(s);
  stage.phase_residue = CVector::Ones(d);
  for (int l = 0; l < d; ++l) {
    const int f = s.flipped(l);
    if (std::abs(std::abs(u(f, l)) - 1.0) > 1e-10) throw NumericalError("compile_echo: swap is not a unit transfer");
    stage.phase_residue(f) = target(f, l) / u(f, l);
  }
  stage.target = target;
  require_stage(stage, d, "compile_echo");
  return stage;
}

std::pair<int, int> detection_levels(SpinQuantum s, int k) {
  const int K = s.dim() / 2;
  if (k < 0 || k >= K) throw ValidationError("detection_levels: outcome out of range");
  return {K - 1 - k, K + k};
}

SequenceStage compile_basis_rotation(const RecoveryPlan& plan, SpinQuantum s, double pulse_ns) {
  require_even_dim(s, "compile_basis_rotation");
  const int d = s.dim();
  const int n = plan.size();
  if (n < 1 || 2 * n > d) throw ValidationError("compile_basis_rotation: plan size does not fit the qudit");

  // Columns of V^dag: error words at their detection levels.
  CMatrix assigned(d, 2 * n);
  std::vector<int> levels;
  for (int k = 0; k < n; ++k) {
    const auto [l0, l1] = detection_levels(s, k);
    for (int c = 0; c < 2; ++c) {
      const CVector& e = plan.error_words[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
      if (e.size() != d) throw ValidationError("compile_basis_rotation: error word dimension mismatch");
      assigned.col(2 * k + c) = e;
    }
    levels.push_back(l0);
    levels.push_back(l1);
  }
  if ((assigned.adjoint() * assigned - CMatrix::Identity(2 * n, 2 * n)).cwiseAbs().maxCoeff() > 1e-8) {
    throw ValidationError("compile_basis_rotation: error words are rank deficient or not orthonormal");
  }
  CMatrix w = CMatrix::Zero(d, d);
  for (int c = 0; c < 2 * n; ++c) w.col(levels[static_cast<std::size_t>(c)]) = assigned.col(c);
  if (2 * n < d) {
    const CMatrix q = assigned.householderQr().householderQ() * CMatrix::Identity(d, d);
    int next = 2 * n;
    for (int l = 0; l < d; ++l) {
      if (std::find(levels.begin(), levels.end(), l) == levels.end()) w.col(l) = q.col(next++);
    }
  }
  const CMatrix v = w.adjoint();
  const Decomposition dec = two_level_decompose(v);

  SequenceStage stage;
  stage.label = "basis-rotation";
  for (const auto& r : dec.rotations) {
    for (const auto& p : adjacency_reduce(r, pulse_ns)) stage.pulses.push_back(p);
  }
  stage.phase_residue = dec.phase_residue;
  stage.target = v;
  require_stage(stage, d, "compile_basis_rotation");
  return stage;
}

SequenceStage compile_recovery(const RecoveryPlan& plan, const CodeWords& words, int k,
                               const SequenceStage& basis_rotation, const SequenceStage& encoding,
                               double pulse_ns) {
  const SpinQuantum s = words.s;
  require_even_dim(s, "compile_recovery");
  if (k < 0 || k >= plan.size()) throw ValidationError("compile_recovery: outcome out of range");
  const int d = s.dim();
  const int K = d / 2;
  const auto [l0, l1] = detection_levels(s, k);

  // Where the pulses alone (no phase layer) leave e_k^0 and e_k^1.
  const CMatrix g = compose(d, basis_rotation.pulses);
  const auto& ew = plan.error_words[static_cast<std::size_t>(k)];
  const Complex x0 = (g * ew[0])(l0);
  const Complex x1 = (g * ew[1])(l1);
  if (std::abs(std::abs(x0) - 1.0) > 1e-8 || std::abs(std::abs(x1) - 1.0) > 1e-8) {
    throw NumericalError("compile_recovery: basis rotation does not reach the detection levels");
  }

  SequenceStage stage;
  stage.label = "recovery-" + std::to_string(k);
  for (int l = l0; l < K - 1; ++l) stage.pulses.push_back({l, kPi, 0.0, pulse_ns});
  for (int l = l1; l > K; --l) stage.pulses.push_back({l - 1, kPi, 0.0, pulse_ns});
  const CMatrix a = compose(d, stage.pulses);
  const Complex y0 = a(K - 1, l0) * x0;
  const Complex y1 = a(K, l1) * x1;
  const double delta = 0.5 * std::arg(y1 * std::conj(y0));
  if (std::abs(delta) > 1e-12) {
    for (const auto& p : phase_gadget(K - 1, delta, pulse_ns)) stage.pulses.push_back(p);
  }
  stage.pulses.insert(stage.pulses.end(), encoding.pulses.begin(), encoding.pulses.end());

  stage.target = CMatrix::Zero(d, d);
  stage.target.col(l0) = words.zero_l / x0;
  stage.target.col(l1) = words.one_l / x1;
  stage.columns = {l0, l1};
  require_stage(stage, d, "compile_recovery");
  return stage;
}

DetectionSchedule ancilla_frequencies(const AncillaParams& ancilla, SpinQuantum s, int outcomes,
                                      const PhysicalConstants& constants) {
  if (!(ancilla.linewidth > 0.0)) throw ValidationError("ancilla_frequencies: linewidth must be positive");
  if (std::abs(ancilla.J_z) < ancilla.linewidth) {
    throw ValidationError("ancilla_frequencies: probe frequencies collide (|J_z| below the linewidth)");
  }
  const double base = ancilla.g_A * constants.bohr_magneton_over_hbar() * ancilla.B_z * 1e-6;
  DetectionSchedule out;
  for (int l = 0; l < s.dim(); ++l) out.frequencies.push_back(base + ancilla.J_z * s.m_of(l));
  const int K = s.dim() / 2;
  if (outcomes < 0 || outcomes > K) throw ValidationError("ancilla_frequencies: outcome count out of range");
  for (int k = 0; k < outcomes; ++k) {
    const auto [la, lb] = detection_levels(s, k);
    out.probes.push_back({k, la, lb, out.frequencies[static_cast<std::size_t>(la)],
                          out.frequencies[static_cast<std::size_t>(lb)]});
  }
  return out;
}

DurationReport duration_estimate(const PulseSequence& seq, const PulseCost& cost, int n_measurements,
                                 double window_us) {
  if (!(cost.pulse_ns > 0.0) || !(cost.measurement_ns > 0.0)) {
    throw ValidationError("duration_estimate: costs must be positive");
  }
  DurationReport r;
  r.pulses = seq.pulse_count();
  r.measurements = std::min(std::max(n_measurements, 0), seq.s.two_s() / 2);
  r.total_ns = r.pulses * cost.pulse_ns + r.measurements * cost.measurement_ns;
  r.window_us = window_us;
  r.flagged = window_us > 0.0 && r.total_ns > cost.window_fraction * window_us * 1e3;
  return r;
}

double recomposition_error(const CMatrix& U, const CMatrix& target, const std::vector<int>& columns) {
  if (U.rows() != target.rows() || U.cols() != target.cols()) {
    throw ValidationError("recomposition_error: shape mismatch");
  }
  std::vector<int> cols = columns;
  if (cols.empty()) {
    for (int c = 0; c < U.cols(); ++c) cols.push_back(c);
  }
  Complex overlap{};
  for (int c : cols) overlap += target.col(c).dot(U.col(c));
  const Complex unphase = std::abs(overlap) > 1e-300 ? std::conj(overlap) / std::abs(overlap) : Complex(1.0, 0.0);
  double worst = 0.0;
  for (int c : cols) worst = std::max(worst, (U.col(c) * unphase - target.col(c)).cwiseAbs().maxCoeff());
  return worst;
}

VerificationReport verify_sequence(const PulseSequence& seq) {
  VerificationReport report;
  const int d = seq.s.dim();
  for (const auto& st : seq.stages) {
    StageCheck check;
    check.label = st.label;
    if (st.target.size() > 0) {
      const CMatrix u = apply_residue(compose(d, st.pulses), st.phase_residue);
      check.error = recomposition_error(u, st.target, st.columns);
      check.checked = true;
      report.max_error = std::max(report.max_error, check.error);
    }
    report.stages.push_back(check);
  }
  return report;
}

QecCycle compile_qec_cycle(const CodePlan& plan, const AncillaParams& ancilla, const PulseCost& cost,
                           double window_us) {
  const SpinQuantum s = plan.words.s;
  QecCycle cycle;
  cycle.sequence.s = s;
  const SequenceStage encoding = compile_encoding(plan.words, cost.pulse_ns);
  const SequenceStage basis = compile_basis_rotation(plan.plan, s, cost.pulse_ns);
  cycle.sequence.stages.push_back(encoding);
  cycle.sequence.stages.push_back(compile_echo(s, cost.pulse_ns));
  cycle.sequence.stages.push_back(basis);

  const int outcomes = plan.plan.size();
  cycle.detection = ancilla_frequencies(ancilla, s, outcomes);
  SequenceStage slot;
  slot.label = "measurement-slot";
  slot.measurements = std::min(std::max(outcomes - 1, 0), s.two_s() / 2);
  cycle.sequence.stages.push_back(slot);

  const std::size_t first_recovery = cycle.sequence.stages.size();
  std::size_t longest = first_recovery;
  for (int k = 0; k < outcomes; ++k) {
    cycle.sequence.stages.push_back(compile_recovery(plan.plan, plan.words, k, basis, encoding, cost.pulse_ns));
    if (cycle.sequence.stages.back().pulses.size() > cycle.sequence.stages[longest].pulses.size()) {
      longest = cycle.sequence.stages.size() - 1;
    }
  }

  // Worst-case path: every stage up to detection plus the longest recovery.
  PulseSequence path;
  path.s = s;
  path.stages.assign(cycle.sequence.stages.begin(), cycle.sequence.stages.begin() + static_cast<long>(first_recovery));
  path.stages.push_back(cycle.sequence.stages[longest]);
  cycle.duration = duration_estimate(path, cost, slot.measurements, window_us);
  cycle.verification = verify_sequence(cycle.sequence);
  return cycle;
}

}  // namespace quditqec
