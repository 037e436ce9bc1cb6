#pragma once

// Diagonal error-operator fitting, Knill-Laflamme code words, detection and
// recovery, and the fidelity/gain metrics built on them.
//
// Code words live on alternating levels: |0_L> on even level indices
// (m = -S, -S+2, ...) and |1_L> on odd ones, so <0_L|E|1_L> = 0 for every
// diagonal E. Amplitudes are real and non-negative: for diagonal errors the
// Knill-Laflamme conditions only see |gamma_l|^2.

#include <array>
#include <string>
#include <vector>

#include "quditqec/cce_engine.hpp"
#include "quditqec/simplex.hpp"

namespace quditqec {

/// floor(S) + 1 operators, the first one playing the role of "no error".
int default_error_count(SpinQuantum s);

/// Level indices carrying word c (0 or 1).
std::vector<int> logical_support(SpinQuantum s, int word);

struct ErrorOperatorSet {
  std::vector<CVector> operators;  // diagonals of E_k
  double optimization_time = 0.0;  // us
  std::vector<double> residual_norms;
  bool converged = true;

  int size() const { return static_cast<int>(operators.size()); }
};

/// Greedy Hilbert-Schmidt fit of rho(t) = L o rho0 by sum_k E_k rho0 E_k^dagger:
/// step k minimises ||R_{k-1} - E rho0 E^dagger|| over diagonal E and sets
/// R_k = R_{k-1} - E_k rho0 E_k^dagger. Entries of E outside the support of
/// rho0 are undetermined and left at zero.
ErrorOperatorSet fit_error_operators(const DensityMatrix& rho0, const CMatrix& L_t, int K,
                                     const SimplexOptions& options = {}, double optimization_time = 0.0);

struct CodeWords {
  SpinQuantum s{1};
  CVector zero_l;
  CVector one_l;
  double kl_residual = 0.0;
  bool flagged = false;
};

/// sum_{k,j} |<0_L|E_k^dag E_j|0_L> - <1_L|E_k^dag E_j|1_L>|.
double kl_residual(const std::vector<CVector>& errors, const CodeWords& words);
/// max_{k,j} |<0_L|E_k^dag E_j|1_L>|.
double kl_cross_residual(const std::vector<CVector>& errors, const CodeWords& words);

struct KlOptions {
  SimplexOptions simplex{};
  double threshold = 1e-6;
};

/// Minimises kl_residual over the alternating-support ansatz. After the
/// simplex search the weights are projected onto the exact solution set when
/// one exists. Integer S is rejected.
CodeWords solve_kl(const std::vector<CVector>& errors, SpinQuantum s, const KlOptions& options = {},
                   const CodeWords* start = nullptr);

CodeWords derive_code_words(const ErrorOperatorSet& errors, SpinQuantum s, const KlOptions& options = {},
                            const CodeWords* start = nullptr);

/// Diagonals of S_z^k, k = 0..K-1.
std::vector<CVector> sz_power_errors(SpinQuantum s, int K);

/// Same solver on {S_z^k, k = 0..floor(S)}.
CodeWords spin_binomial_baseline(SpinQuantum s);

/// The uncorrected spin-1/2 reference |0_L> = |-1/2>, |1_L> = |1/2>. S = 1/2 only.
CodeWords bare_code_words(SpinQuantum s);

struct RecoveryPlan {
  std::vector<CMatrix> projectors;
  std::vector<CMatrix> recoveries;
  std::vector<std::array<CVector, 2>> error_words;
  std::vector<int> kept_errors;  // indices into the error set
  bool reduced = false;

  int size() const { return static_cast<int>(projectors.size()); }
};

/// Gram-Schmidt of E_k|c_L> within each support; P_k = sum_c |e_k^c><e_k^c|;
/// R_k rotates e_k^c onto |c_L> inside span{e_k^c, |c_L>}. Error words that
/// fall below 1e-8 after orthogonalisation are dropped (reduced = true).
RecoveryPlan build_detection_recovery(const std::vector<CVector>& errors, const CodeWords& words);

/// sum_k R_k P_k rho P_k R_k^dag + Q rho Q, Q = 1 - sum_k P_k.
DensityMatrix apply_qec(const DensityMatrix& rho, const RecoveryPlan& plan);
/// The same map on a raw Hermitian matrix, without validation.
CMatrix apply_qec(const CMatrix& rho, const RecoveryPlan& plan);

/// cos(theta)|0_L> + i sin(theta)|1_L>.
PureState logical_state(const CodeWords& words, double theta);

/// Below this an infidelity is treated as zero and the gain is absent (NaN).
inline constexpr double kGainFloor = 1e-12;

/// (1 - f2_half) / (1 - f2_s) pointwise, NaN where 1 - f2_s < kGainFloor.
std::vector<double> gain_curve(const std::vector<double>& f2_s, const std::vector<double>& f2_half);

struct GainCurve {
  std::vector<double> times;
  std::vector<double> mean;  // NaN where no configuration has a gain
  std::vector<double> std;
  std::vector<int> counts;
};

/// Per-configuration gains, then mean and standard deviation per time.
GainCurve ensemble_gain(const std::vector<double>& times, const std::vector<std::vector<double>>& f2_s,
                        const std::vector<std::vector<double>>& f2_half);

struct ThetaSurface {
  std::vector<double> thetas;
  std::vector<double> times;
  std::vector<std::vector<double>> f2;  // [theta][time], ensemble mean
};

ThetaSurface theta_sweep(const CodeWords& words, const std::vector<DecoherenceMatrix>& per_config,
                         const RecoveryPlan& plan, const std::vector<double>& thetas);

struct CodePlan {
  std::string kind;  // numerical | binomial | bare
  double t_opt = 0.0;
  ErrorOperatorSet errors;
  CodeWords words;
  RecoveryPlan plan;
};

struct CodeOptions {
  int depth = 2;
  KlOptions kl{};
  SimplexOptions fit{};
};

/// Start from the spin-binomial words, then `depth` times: fit errors to the
/// dephased (|0_L> + i|1_L>)/sqrt(2) and re-derive the words.
CodePlan optimize_numerical_code(const CMatrix& L_topt, SpinQuantum s, double t_opt, const CodeOptions& options = {});
CodePlan binomial_code_plan(SpinQuantum s);
CodePlan bare_code_plan(SpinQuantum s);

}  // namespace quditqec
