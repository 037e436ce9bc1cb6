#pragma once

// Finite-dimensional spin algebra for a single spin-S qudit.
//
// Level convention shared by every module: matrices are indexed 0..2S and
// index l corresponds to the S_z eigenvalue m = l - S.

#include <functional>

#include "quditqec/types.hpp"

namespace quditqec {

/// Spin quantum number stored as 2S so half-integers are exact.
class SpinQuantum {
 public:
  static constexpr int kMaxTwoS = 40;

  explicit SpinQuantum(int two_s);

  int two_s() const { return two_s_; }
  int dim() const { return two_s_ + 1; }
  double s() const { return 0.5 * two_s_; }
  double casimir() const { return s() * (s() + 1.0); }
  bool half_integer() const { return two_s_ % 2 == 1; }

  /// m value of level index l.
  double m_of(int level) const { return level - s(); }
  /// Level index of m; throws if m is not one of -S..S.
  int level_of(double m) const;
  /// Index of the level with the opposite m.
  int flipped(int level) const { return two_s_ - level; }

  friend bool operator==(const SpinQuantum&, const SpinQuantum&) = default;

 private:
  int two_s_;
};

struct SpinOperators {
  CMatrix sx, sy, sz, s_plus, s_minus;
};

SpinOperators build_spin_operators(SpinQuantum s);

/// exp(-i pi S_x); maps |m> to a phase times |-m>.
CMatrix echo_unitary(SpinQuantum s);

/// exp(-i h t) for Hermitian h, through its eigendecomposition.
CMatrix expm_hermitian(const CMatrix& h, double t);

/// f(h) for Hermitian h, applied to the eigenvalues.
CMatrix hermitian_function(const CMatrix& h, const std::function<double(double)>& f);

/// Square root of a positive semidefinite Hermitian matrix. Eigenvalues in
/// [-1e-10, 0) are clamped to zero, anything lower throws NumericalError.
CMatrix sqrtm_psd(const CMatrix& rho);

class PureState {
 public:
  /// Normalizes the amplitudes; throws on a zero vector.
  explicit PureState(CVector amplitudes);

  const CVector& amplitudes() const { return amplitudes_; }
  int dim() const { return static_cast<int>(amplitudes_.size()); }
  CMatrix projector() const { return amplitudes_ * amplitudes_.adjoint(); }

 private:
  CVector amplitudes_;
};

class DensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kEigenTol = 1e-10;

  /// Validates hermiticity, unit trace and positivity.
  explicit DensityMatrix(CMatrix rho);
  explicit DensityMatrix(const PureState& psi);

  const CMatrix& matrix() const { return rho_; }
  int dim() const { return static_cast<int>(rho_.rows()); }

  /// <psi|rho|psi>, the squared fidelity against a pure reference.
  double expectation(const PureState& psi) const;

 private:
  CMatrix rho_;
};

/// Uhlmann fidelity tr sqrt(sqrt(a) b sqrt(a)).
double uhlmann_fidelity(const DensityMatrix& rho_a, const DensityMatrix& rho_b);

/// rho_nm(t) = L_nm rho_nm(0). The result is validated but never repaired:
/// a non-PSD output throws NumericalError.
DensityMatrix dephase_elementwise(const CMatrix& decoherence, const DensityMatrix& rho0);

}  // namespace quditqec
