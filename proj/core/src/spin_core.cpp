#include "quditqec/spin_core.hpp"

#include <cmath>
#include <string>

namespace quditqec {

SpinQuantum::SpinQuantum(int two_s) : two_s_(two_s) {
  if (two_s < 1 || two_s > kMaxTwoS) {
    throw ValidationError("SpinQuantum: two_s must be in [1, " + std::to_string(kMaxTwoS) +
                          "], got " + std::to_string(two_s));
  }
}

int SpinQuantum::level_of(double m) const {
  const double l = m + s();
  const long rounded = std::lround(l);
  if (std::abs(l - static_cast<double>(rounded)) > 1e-9 || rounded < 0 || rounded > two_s_) {
    throw ValidationError("SpinQuantum: m = " + std::to_string(m) + " is not a level of this spin");
  }
  return static_cast<int>(rounded);
}

SpinOperators build_spin_operators(SpinQuantum s) {
  const int d = s.dim();
  SpinOperators ops;
  ops.sz = CMatrix::Zero(d, d);
  ops.s_plus = CMatrix::Zero(d, d);
  for (int l = 0; l < d; ++l) {
    const double m = s.m_of(l);
    ops.sz(l, l) = m;
    if (l + 1 < d) {
      ops.s_plus(l + 1, l) = std::sqrt(s.casimir() - m * (m + 1.0));
    }
  }
  ops.s_minus = ops.s_plus.adjoint();
  ops.sx = 0.5 * (ops.s_plus + ops.s_minus);
  ops.sy = -0.5 * kI * (ops.s_plus - ops.s_minus);
  return ops;
}

CMatrix hermitian_function(const CMatrix& h, const std::function<double(double)>& f) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
  if (eig.info() != Eigen::Success) throw NumericalError("hermitian_function: eigensolver failed");
  RVector fv = eig.eigenvalues().unaryExpr(f);
  return eig.eigenvectors() * fv.asDiagonal() * eig.eigenvectors().adjoint();
}

CMatrix expm_hermitian(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
  if (eig.info() != Eigen::Success) throw NumericalError("expm_hermitian: eigensolver failed");
  const auto& lambda = eig.eigenvalues();
  CVector phases(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) phases(k) = std::exp(-kI * (lambda(k) * t));
  return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

CMatrix echo_unitary(SpinQuantum s) { return expm_hermitian(build_spin_operators(s).sx, kPi); }

CMatrix sqrtm_psd(const CMatrix& rho) {
  return hermitian_function(rho, [](double x) {
    if (x < -DensityMatrix::kEigenTol) {
      throw NumericalError("sqrtm_psd: eigenvalue " + std::to_string(x) + " below tolerance");
    }
    return x <= 0.0 ? 0.0 : std::sqrt(x);
  });
}

PureState::PureState(CVector amplitudes) : amplitudes_(std::move(amplitudes)) {
  const double n = amplitudes_.norm();
  if (amplitudes_.size() < 2 || !(n > 0.0)) throw ValidationError("PureState: empty or zero vector");
  amplitudes_ /= n;
}

DensityMatrix::DensityMatrix(CMatrix rho) : rho_(std::move(rho)) {
  if (rho_.rows() != rho_.cols() || rho_.rows() < 2) {
    throw ValidationError("DensityMatrix: must be square with dim >= 2");
  }
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol) {
    throw ValidationError("DensityMatrix: not Hermitian");
  }
  if (std::abs(rho_.trace().real() - 1.0) > kTraceTol) {
    throw ValidationError("DensityMatrix: trace != 1");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(rho_, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -kEigenTol) {
    throw NumericalError("DensityMatrix: negative eigenvalue " +
                         std::to_string(eig.eigenvalues().minCoeff()));
  }
}

DensityMatrix::DensityMatrix(const PureState& psi) : rho_(psi.projector()) {}

double DensityMatrix::expectation(const PureState& psi) const {
  if (psi.dim() != dim()) throw ValidationError("DensityMatrix::expectation: dimension mismatch");
  return (psi.amplitudes().adjoint() * rho_ * psi.amplitudes())(0, 0).real();
}

double uhlmann_fidelity(const DensityMatrix& rho_a, const DensityMatrix& rho_b) {
  if (rho_a.dim() != rho_b.dim()) throw ValidationError("uhlmann_fidelity: dimension mismatch");
  const CMatrix root = sqrtm_psd(rho_a.matrix());
  CMatrix inner = root * rho_b.matrix() * root;
  inner = 0.5 * (inner + inner.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(inner, Eigen::EigenvaluesOnly);
  double f = 0.0;
  for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k) {
    const double x = eig.eigenvalues()(k);
    if (x < -DensityMatrix::kEigenTol) throw NumericalError("uhlmann_fidelity: non-PSD input");
    if (x > 0.0) f += std::sqrt(x);
  }
  return f;
}

DensityMatrix dephase_elementwise(const CMatrix& decoherence, const DensityMatrix& rho0) {
  const int d = rho0.dim();
  if (decoherence.rows() != d || decoherence.cols() != d) {
    throw ValidationError("dephase_elementwise: dimension mismatch");
  }
  for (int n = 0; n < d; ++n) {
    if (std::abs(decoherence(n, n) - 1.0) > 1e-9) {
      throw ValidationError("dephase_elementwise: L_nn != 1");
    }
    for (int m = n + 1; m < d; ++m) {
      if (std::abs(decoherence(n, m) - std::conj(decoherence(m, n))) > 1e-9) {
        throw ValidationError("dephase_elementwise: L is not Hermitian-compatible");
      }
    }
  }
  const CMatrix& r0 = rho0.matrix();
  CMatrix out(d, d);
  for (int n = 0; n < d; ++n) {
    out(n, n) = r0(n, n);
    for (int m = n + 1; m < d; ++m) {
      out(n, m) = decoherence(n, m) * r0(n, m);
      out(m, n) = std::conj(out(n, m));
    }
  }
  return DensityMatrix(std::move(out));
}

}  // namespace quditqec
