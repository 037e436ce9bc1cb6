#pragma once

// Decoherence functions L_nm(t) of the qudit under the conditioned bath
// Hamiltonians, by cluster-correlation expansion (orders 1 and 2) and by
// brute-force reference evolutions.
//
// All qudit levels are indices 0..2S (see spin_core.hpp). L is defined in the
// qudit interaction picture; for the echo schedule the ideal flip is undone
// in post-processing, so rho_nm(t) = L_nm(t) rho_nm(0) in both cases.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "quditqec/bath_model.hpp"

namespace quditqec {

struct ScheduleSegment {
  double fraction = 1.0;
  bool flipped = false;  // level map m -> -m during this segment
};

struct EvolutionSchedule {
  std::vector<ScheduleSegment> segments;

  static EvolutionSchedule free_decay() { return {{{1.0, false}}}; }
  static EvolutionSchedule echo() { return {{{0.5, false}, {0.5, true}}}; }

  bool is_free_decay() const;
  bool is_echo() const;
  std::string name() const;
  static EvolutionSchedule from_name(const std::string& name);
  void validate() const;
};

struct DecoherenceMatrix {
  SpinQuantum s{1};
  std::vector<double> times;
  std::vector<CMatrix> values;

  int dim() const { return s.dim(); }
  /// Throws NumericalError when L_nn != 1, L is not Hermitian or |L| > 1 (tolerance 1e-9).
  void validate() const;
};

/// prod_k cos((x_n - x_m) a1_k t / 2).
Complex cce1_analytic(const EffectiveCoefficients& coeffs, SpinQuantum s, int n, int m, double t);

/// sqrt(sum_k a1_k^2 / 4).
double gaussian_gamma(const EffectiveCoefficients& coeffs);

/// tr[W_n rho_C W_m^dagger] for rho_C = 1/2^|C|, with W_x the time-ordered
/// product over schedule segments. The b-term scalar is removed (see
/// b_term_frame_shift).
Complex cluster_decoherence(const std::vector<int>& cluster, const EvolutionSchedule& schedule,
                            const EffectiveCoefficients& coeffs, SpinQuantum s, int n, int m, double t);

struct PairValue {
  int j = 0;
  int k = 0;
  Complex value{1.0, 0.0};
};

/// Singleton magnitudes below this floor make the pair correction 1. At 1e-8
/// free decay of S >= 7/2 still blows past |L| = 1 near singleton nodes on
/// the default bath; the guarded product is below 1e-4 either way.
inline constexpr double kCceDivisionFloor = 1e-4;

/// Order 1: prod_k singles[k]. Order 2: multiplies in L_jk / (L_j L_k) for
/// every pair. `guarded` counts pairs whose correction was set to 1.
Complex cce_combine(int order, const std::vector<Complex>& singles, const std::vector<PairValue>& pairs,
                    long* guarded = nullptr);

struct CceOptions {
  int order = 2;
  /// Pairs with max(|c0|, |d0|, |c1|, |d1|) below this are skipped; 0 keeps all.
  double pair_cutoff = 0.0;
  /// Pair corrections involving a singleton below this magnitude are skipped.
  double division_floor = kCceDivisionFloor;
};

struct CceStats {
  long guarded_pairs = 0;
  long skipped_pairs = 0;
};

/// Fills L_nm on every time of t_grid (ascending, starting at 0).
DecoherenceMatrix decoherence_matrix(const EvolutionSchedule& schedule, const EffectiveCoefficients& coeffs,
                                     SpinQuantum s, const std::vector<double>& t_grid,
                                     const CceOptions& options = {}, CceStats* stats = nullptr);

/// Exact L_nm over the whole bath (N <= max_n), using every coefficient.
Complex exact_bath_oracle(const EvolutionSchedule& schedule, const EffectiveCoefficients& coeffs,
                          SpinQuantum s, int n, int m, double t, int max_n = 10);

/// Exact L(t) for all (n, m) over the whole bath; same semantics as above.
std::vector<CMatrix> exact_bath_oracle_matrix(const EvolutionSchedule& schedule,
                                              const EffectiveCoefficients& coeffs, SpinQuantum s,
                                              const std::vector<double>& t_grid, int max_n = 10);

/// Free decay under the untransformed joint Hamiltonian
///   D Sz^2 + Omega Sz + sum_n w_n Iz_n + sum_n S.D_n.I_n + sum_{n<m} I_n.E_nm.I_m
/// from |psi><psi| x 1/2^N with psi the uniform superposition. Coherence
/// ratios are read in the frame E_x = Omega~ x + x sum_n b1_n / 4 + D x^2.
std::vector<CMatrix> exact_full_hamiltonian_oracle(const BathGeometry& geometry,
                                                   const QuditHamiltonianParams& params, SpinQuantum s,
                                                   const std::vector<double>& t_grid,
                                                   const PhysicalConstants& constants = {}, int max_n = 4);

struct EnsembleResult {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<std::uint64_t> seeds;
  /// Squared fidelity per configuration and time.
  std::vector<std::vector<double>> per_configuration;
  /// (configuration, time) points where L o rho0 has an eigenvalue below
  /// -DensityMatrix::kEigenTol, and the most negative one seen. Those points
  /// are evaluated as they are, without clipping.
  long non_psd = 0;
  double min_eigenvalue = 0.0;
};

/// Decoherence matrices for a list of configurations, computed on up to
/// `workers` threads. Output order follows the input order.
std::vector<DecoherenceMatrix> decoherence_ensemble(const std::vector<EffectiveCoefficients>& configs,
                                                    const EvolutionSchedule& schedule, SpinQuantum s,
                                                    const std::vector<double>& t_grid, const CceOptions& options,
                                                    int workers, CceStats* stats = nullptr);

/// Optional linear map applied to the dephased matrix L o rho0 before
/// fidelity evaluation (for example a QEC recovery).
using StateMap = std::function<CMatrix(const CMatrix&)>;

/// Mean and standard deviation over configurations of <psi|rho(t)|psi>.
EnsembleResult ensemble_average(const std::vector<DecoherenceMatrix>& per_config, const PureState& psi,
                                const StateMap& post = nullptr, std::vector<std::uint64_t> seeds = {});

/// Entry-wise mean of several decoherence matrices sharing a grid.
DecoherenceMatrix mean_decoherence(const std::vector<DecoherenceMatrix>& per_config);

/// Slice at the grid point nearest to t.
const CMatrix& decoherence_at(const DecoherenceMatrix& L, double t);

}  // namespace quditqec
