#pragma once

// Nuclear bath geometry, dipolar tensors and the effective (Schrieffer-Wolff)
// coefficient tables. Units: rad/us, Angstrom, Tesla.

#include <array>
#include <cstdint>
#include <vector>

#include "quditqec/spin_core.hpp"

namespace quditqec {

struct PhysicalConstants {
  double hbar = 1.054571817e-34;           // J s
  double bohr_magneton = 9.2740100783e-24;  // J/T
  double gamma_n = 2.675221874e8;           // rad s^-1 T^-1, proton
  double g_z = 2.0;
  double mu0_over_4pi = 1e-7;               // T^2 m^3 / J
  double boltzmann = 1.380649e-23;          // J/K

  double bohr_magneton_over_hbar() const { return bohr_magneton / hbar; }
  double gamma_e() const { return g_z * bohr_magneton_over_hbar(); }

  /// Electron-nucleus dipolar prefactor in rad/us * A^3.
  double electron_nuclear_prefactor() const;
  /// Nucleus-nucleus dipolar prefactor in rad/us * A^3.
  double nuclear_nuclear_prefactor() const;

  void validate() const;
};

struct QuditHamiltonianParams {
  double D_zfs = 0.0;  // rad/us
  double Omega = 0.0;  // rad/us
  double B_z = 0.0;    // T
};

/// Omega = g_z mu_B B_z / hbar; D_zfs given in kelvin is converted with k_B/hbar.
QuditHamiltonianParams make_qudit_params(double B_z, double D_zfs_kelvin,
                                         const PhysicalConstants& constants = {});

using Vec3 = std::array<double, 3>;

struct BathGeometry {
  std::vector<Vec3> positions;  // A, qudit at the origin
  std::uint64_t seed = 0;
  double radius = 0.0;
  double min_distance = 0.0;

  int size() const { return static_cast<int>(positions.size()); }
  /// Throws ValidationError if any geometric invariant is violated.
  void validate() const;
};

/// Uniform rejection sampling in the ball of `radius` with hard-core
/// `min_distance` to the origin and between nuclei.
BathGeometry sample_bath_geometry(std::uint64_t seed, int n_spins, double radius,
                                  double min_distance, long max_draws = 1'000'000);

/// Components of S.T.I in the {z,+,-} basis: the Hamiltonian reads
/// zz Sz Iz + pz S+ Iz + conj(pz) S- Iz + pp S+ I+ + conj(pp) S- I- + pm (S+ I- + S- I+).
///
/// From a symmetric Cartesian tensor T:
///   zz = Tzz, pz = (Txz - i Tyz)/2, pp = (Txx - Tyy - 2i Txy)/4, pm = (Txx + Tyy)/4.
/// The Sz I+- components of T (equal to pz by symmetry) are not part of the
/// model Hamiltonian and are dropped.
struct SphericalTensor {
  double zz = 0.0;
  Complex pz{};
  Complex pp{};
  double pm = 0.0;

  Complex mz() const { return std::conj(pz); }
  Complex mm() const { return std::conj(pp); }
  double mp() const { return pm; }
};

SphericalTensor spherical_from_cartesian(const Eigen::Matrix3d& t);

/// K (delta - 3 r r^T) / |r|^3.
Eigen::Matrix3d point_dipole_tensor(const Vec3& r, double prefactor);

struct DipolarTensors {
  std::vector<SphericalTensor> D;  // qudit-nucleus
  RMatrix E_zz;                    // nucleus pairs, symmetric, zero diagonal
  RMatrix E_pm;
  RVector omega_n;

  int size() const { return static_cast<int>(D.size()); }
};

DipolarTensors compute_dipolar_tensors(const BathGeometry& geometry,
                                       const QuditHamiltonianParams& params,
                                       const PhysicalConstants& constants = {});

struct EffectiveCoefficients {
  std::array<RVector, 3> a;
  std::array<RVector, 3> b;
  std::array<CMatrix, 3> c;
  std::array<CMatrix, 3> d;
  double omega_tilde = 0.0;
  double omega = 0.0;

  int size() const { return static_cast<int>(a[0].size()); }
  static EffectiveCoefficients zeros(int n, double omega);
  void validate() const;
};

/// Ratio below which the perturbative expansion is considered unreliable.
inline constexpr double kSchriefferWolffWarnRatio = 1e2;

/// First-order effective coefficients. `warning` (if given) is set when
/// Omega is less than kSchriefferWolffWarnRatio times the largest coupling.
EffectiveCoefficients schrieffer_wolff_coefficients(const DipolarTensors& tensors,
                                                    const QuditHamiltonianParams& params,
                                                    bool* warning = nullptr);

inline constexpr int kMaxClusterSize = 4;

/// <m| H |m> restricted to `cluster`, with x = m_of(level), w = S(S+1) - x^2:
///   sum_k (a0 + x a1 + w a2)_k Iz_k + (b0 + x b1 + w b2)_k Iz_k^2
///   + sum_{j != k} (c0 + x c1 + w c2)_jk I+_j I-_k + (d0 + x d1 + w d2)_jk Iz_j Iz_k.
/// Basis index bit p (from the most significant end) is nucleus cluster[p];
/// bit value 0 means spin up.
CMatrix conditioned_bath_hamiltonian(const EffectiveCoefficients& coeffs, SpinQuantum s,
                                     int level, const std::vector<int>& cluster);

/// x * sum_k b1_k / 4: the part of <m|H|m> that the b terms add for I = 1/2.
/// It is a scalar on the bath, so it is moved into the qudit frame together
/// with omega_tilde.
double b_term_frame_shift(const EffectiveCoefficients& coeffs, SpinQuantum s, int level,
                          const std::vector<int>& cluster);

}  // namespace quditqec
