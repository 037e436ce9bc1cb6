#pragma once

// Independent reference implementations for the tests. Nothing here calls
// into the library beyond plain data types, so agreement with the library is
// a genuine cross-check.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "quditqec/bath_model.hpp"

namespace oracle {

using quditqec::CMatrix;
using quditqec::Complex;
using quditqec::CVector;

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Spin-1/2 operators with basis (up, down).
inline CMatrix iz() { CMatrix m(2, 2); m << 0.5, 0, 0, -0.5; return m; }
inline CMatrix iplus() { CMatrix m(2, 2); m << 0, 1, 0, 0; return m; }
inline CMatrix iminus() { return iplus().adjoint(); }

// op acting on slot p of `size` spins; slot 0 is the most significant factor.
inline CMatrix embed(const CMatrix& op, int p, int size) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (int q = 0; q < size; ++q) out = kron(out, q == p ? op : CMatrix::Identity(2, 2));
  return out;
}

// Conditioned bath Hamiltonian for qudit projection x, built from Kronecker
// products. The b terms multiply Iz^2 = 1/4 and are dropped.
inline CMatrix cluster_hamiltonian(const quditqec::EffectiveCoefficients& co, double x, double casimir,
                                   const std::vector<int>& cluster) {
  const int size = static_cast<int>(cluster.size());
  const double w = casimir - x * x;
  CMatrix h = CMatrix::Zero(1 << size, 1 << size);
  for (int p = 0; p < size; ++p) {
    const int k = cluster[p];
    h += (co.a[0](k) + x * co.a[1](k) + w * co.a[2](k)) * embed(iz(), p, size);
  }
  for (int p = 0; p < size; ++p) {
    for (int q = 0; q < size; ++q) {
      if (p == q) continue;
      const int j = cluster[p], k = cluster[q];
      const Complex c = co.c[0](j, k) + x * co.c[1](j, k) + w * co.c[2](j, k);
      const Complex d = co.d[0](j, k) + x * co.d[1](j, k) + w * co.d[2](j, k);
      h += c * embed(iplus(), p, size) * embed(iminus(), q, size);
      h += d * embed(iz(), p, size) * embed(iz(), q, size);
    }
  }
  return 0.5 * (h + h.adjoint());
}

inline CMatrix expm_i(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  CVector ph(h.rows());
  for (int i = 0; i < h.rows(); ++i) ph(i) = std::polar(1.0, -es.eigenvalues()(i) * t);
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

// L_nm = tr[W_n W_m^dag] / 2^|C| with W_x the product of the segment
// propagators; `echo` flips x -> -x for the second half.
inline Complex cluster_L(const quditqec::EffectiveCoefficients& co, int two_s, bool echo,
                         const std::vector<int>& cluster, int n, int m, double t) {
  const double S = 0.5 * two_s;
  const double cas = S * (S + 1);
  auto W = [&](int level) {
    const double x = level - S;
    if (!echo) return expm_i(cluster_hamiltonian(co, x, cas, cluster), t);
    const CMatrix first = expm_i(cluster_hamiltonian(co, x, cas, cluster), t / 2);
    const CMatrix second = expm_i(cluster_hamiltonian(co, -x, cas, cluster), t / 2);
    return CMatrix(second * first);
  };
  const CMatrix wn = W(n), wm = W(m);
  return (wn * wm.adjoint()).trace() / static_cast<double>(wn.rows());
}

// Residual after removing the k largest eigen-components of the weighted
// coherence matrix L o (psi psi^dag), k = 1..K: the best any rank-k sum of
// diagonal-operator Kraus terms can do.
inline std::vector<double> spectral_truncation_residuals(const CMatrix& L, const CVector& psi, int K) {
  const CMatrix M = L.cwiseProduct(psi * psi.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(M);
  const auto ev = es.eigenvalues();  // ascending
  std::vector<double> out;
  for (int k = 1; k <= K; ++k) {
    double r = 0.0;
    for (int i = 0; i < ev.size() - k; ++i) r += ev(i) * ev(i);
    out.push_back(std::sqrt(r));
  }
  return out;
}

// Unit-diagonal PSD matrix from random unit vectors: a valid decoherence matrix.
inline CMatrix random_decoherence(int d, std::mt19937_64& rng, int rank = 3) {
  std::normal_distribution<double> n;
  CMatrix v(rank, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < rank; ++i) v(i, j) = Complex(n(rng), n(rng));
    v.col(j).normalize();
  }
  CMatrix L = v.adjoint() * v;
  for (int j = 0; j < d; ++j) L(j, j) = 1.0;
  return L;
}

inline CVector random_state(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  CVector v(d);
  for (int i = 0; i < d; ++i) v(i) = Complex(n(rng), n(rng));
  return v.normalized();
}

inline CMatrix random_unitary(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  CMatrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(n(rng), n(rng));
  Eigen::HouseholderQR<CMatrix> qr(a);
  return qr.householderQ() * CMatrix::Identity(d, d);
}

// Point-dipole zz component for a nucleus on the z axis: K (1 - 3) / r^3.
inline double on_axis_zz(double r, double prefactor) { return -2.0 * prefactor / (r * r * r); }

// Closed-form Knill-Laflamme words for {1, Sz} at S = 3/2: |a|^2 = 1/4 on
// m = -3/2 and its mirror on m = 3/2.
inline void kl_words_s32(CVector& zero, CVector& one) {
  zero = CVector::Zero(4);
  one = CVector::Zero(4);
  zero(0) = 0.5;
  zero(2) = std::sqrt(0.75);
  one(1) = std::sqrt(0.75);
  one(3) = 0.5;
}

}  // namespace oracle
