#pragma once

// Lowering of the QEC cycle to resonant two-level pulses.
//
// A rotation on levels i < j with angle theta and drive phase phi is
//   Y_ij(theta, phi) = exp[theta/2 (e^{i phi}|j><i| - e^{-i phi}|i><j|)],
// and a Pulse is the adjacent case j = i + 1. Phase phi = 0 gives the plain
// Y_m(theta) of a resonant y drive.

#include <string>
#include <vector>

#include "quditqec/bath_model.hpp"
#include "quditqec/qec_codes.hpp"

namespace quditqec {

struct Rotation {
  int i = 0;
  int j = 1;
  double theta = 0.0;
  double phi = 0.0;
};

struct Pulse {
  int level = 0;  // lower level index; acts on (level, level + 1)
  double theta = 0.0;
  double phi = 0.0;
  double duration_ns = 10.0;
};

CMatrix rotation_matrix(int dim, const Rotation& r);
CMatrix pulse_matrix(int dim, const Pulse& p);

struct SequenceStage {
  std::string label;  // encoding | echo | basis-rotation | measurement-slot | recovery-<k>
  std::vector<Pulse> pulses;
  int measurements = 0;
  /// Diagonal applied after the pulses to reach the target (the phase layer
  /// left by the decomposition). Empty means identity.
  CVector phase_residue;
  /// Target unitary; only `columns` are compared (all when empty). Empty
  /// target means the stage is not checked.
  CMatrix target;
  std::vector<int> columns;
};

struct PulseSequence {
  SpinQuantum s{1};
  std::vector<SequenceStage> stages;

  int pulse_count() const;
  int measurement_count() const;
  /// Pulse durations plus measurement slots at `measurement_ns` each.
  double total_duration_ns(double measurement_ns) const;
};

/// Product of the pulses in time order (first pulse rightmost).
CMatrix compose(int dim, const std::vector<Pulse>& pulses);

struct Decomposition {
  std::vector<Rotation> rotations;  // time order
  CVector phase_residue;            // U = diag(phase_residue) * prod(rotations)
};

/// Givens elimination with adjacent pivots; at most dim(dim-1)/2 rotations.
/// Throws ValidationError when U is not unitary to 1e-10.
Decomposition two_level_decompose(const CMatrix& U);

/// Y_ij(theta, phi) as adjacent pulses, 2(j - i - 1) + 1 of them, using
/// Y_ij(theta, phi) = P Y_{i+1,j}(-theta, phi) P^dag with P = Y_{i,i+1}(pi, 0).
std::vector<Pulse> adjacency_reduce(const Rotation& r, double pulse_ns = 10.0);

/// Two pi pulses on (level, level+1) whose product is
/// -diag(e^{i delta}, e^{-i delta}) on that pair.
std::vector<Pulse> phase_gadget(int level, double delta, double pulse_ns = 10.0);

/// Maps a|-1/2> + b|1/2> to a|0_L> + b|1_L> up to a global phase: a phase
/// gadget if needed, distribution inside the lower and upper halves, then the
/// pi swaps interleaving the halves. Throws ValidationError for words that do
/// not have alternating support.
SequenceStage compile_encoding(const CodeWords& words, double pulse_ns = 10.0);

/// S + 1/2 swaps |m> <-> |-m>, each adjacency-reduced. The residue holds the
/// per-level phases separating the pulses from exp(-i pi S_x).
SequenceStage compile_echo(SpinQuantum s, double pulse_ns = 10.0);

/// Levels receiving error word k of logical word c after the basis rotation:
/// (K-1-k, K+k) with K = dim / 2.
std::pair<int, int> detection_levels(SpinQuantum s, int k);

/// Maps every error word e_k^c of the plan to its detection level. Throws
/// ValidationError when the error words are not orthonormal.
SequenceStage compile_basis_rotation(const RecoveryPlan& plan, SpinQuantum s, double pulse_ns = 10.0);

/// After the basis rotation and outcome k: swaps the pair back to
/// (-1/2, 1/2), fixes the relative phase and re-encodes.
SequenceStage compile_recovery(const RecoveryPlan& plan, const CodeWords& words, int k,
                               const SequenceStage& basis_rotation, const SequenceStage& encoding,
                               double pulse_ns = 10.0);

struct AncillaParams {
  double g_A = 2.0;
  double J_z = 62.83185307179586;      // rad/us
  double B_z = 1.0;                    // T
  double measurement_ns = 70.0;
  double linewidth = 6.283185307179586;  // rad/us, resolution floor for probe tones
};

struct ProbePair {
  int outcome = 0;
  int level_a = 0;
  int level_b = 0;
  double freq_a = 0.0;  // rad/us
  double freq_b = 0.0;
};

struct DetectionSchedule {
  std::vector<double> frequencies;  // per level
  std::vector<ProbePair> probes;    // probed in order; the last outcome is inferred
};

/// Delta_A(m) = g_A mu_B B_z / hbar + J_z m for every level, plus the probe
/// pairs for the plan's outcomes. Throws ValidationError when two levels are
/// closer than the linewidth.
DetectionSchedule ancilla_frequencies(const AncillaParams& ancilla, SpinQuantum s, int outcomes,
                                      const PhysicalConstants& constants = {});

struct PulseCost {
  double pulse_ns = 10.0;
  double measurement_ns = 70.0;
  double window_fraction = 0.1;
};

struct DurationReport {
  int pulses = 0;
  int measurements = 0;
  double total_ns = 0.0;
  double window_us = 0.0;  // F2 > 0.99 window; 0 when not known
  bool flagged = false;
};

/// pulses * pulse_ns + min(n_measurements, floor(S)) * measurement_ns.
DurationReport duration_estimate(const PulseSequence& seq, const PulseCost& cost, int n_measurements,
                                 double window_us = 0.0);

struct StageCheck {
  std::string label;
  double error = 0.0;
  bool checked = false;
};

struct VerificationReport {
  double max_error = 0.0;
  std::vector<StageCheck> stages;
};

/// max |U e^{-i chi} - T| over the chosen columns, chi the best global phase.
double recomposition_error(const CMatrix& U, const CMatrix& target, const std::vector<int>& columns = {});

VerificationReport verify_sequence(const PulseSequence& seq);

struct QecCycle {
  PulseSequence sequence;  // encoding, echo, basis-rotation, measurement-slot, recovery-k...
  DetectionSchedule detection;
  DurationReport duration;  // worst case: longest recovery, floor(S) measurements
  VerificationReport verification;
};

QecCycle compile_qec_cycle(const CodePlan& plan, const AncillaParams& ancilla = {}, const PulseCost& cost = {},
                           double window_us = 0.0);

}  // namespace quditqec
