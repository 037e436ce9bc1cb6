// Brute-force reference evolutions used to validate the cluster expansion
// and the effective Hamiltonian. Both deliberately build their Hamiltonians
// from scratch rather than through conditioned_bath_hamiltonian.

#include <cmath>
#include <string>

#include "quditqec/cce_engine.hpp"

namespace quditqec {

namespace {

int popcount(unsigned v) { return __builtin_popcount(v); }

struct Sector {
  std::vector<int> states;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig;
};

// bit (N-1-k) of a state is nucleus k; set bit = spin down.
double iz_of(int state, int k, int nbath) { return ((state >> (nbath - 1 - k)) & 1) ? -0.5 : 0.5; }

CMatrix sector_hamiltonian(const EffectiveCoefficients& co, double x, double w2, const std::vector<int>& states) {
  const int nbath = co.size();
  const int dim = static_cast<int>(states.size());
  std::vector<int> index(static_cast<std::size_t>(1) << nbath, -1);
  for (int i = 0; i < dim; ++i) index[static_cast<std::size_t>(states[static_cast<std::size_t>(i)])] = i;

  CMatrix h = CMatrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const int st = states[static_cast<std::size_t>(i)];
    for (int k = 0; k < nbath; ++k) {
      const double alpha = co.a[0](k) + x * co.a[1](k) + w2 * co.a[2](k);
      const double beta = co.b[0](k) + x * co.b[1](k) + w2 * co.b[2](k);
      h(i, i) += alpha * iz_of(st, k, nbath) + 0.25 * beta;
    }
    for (int j = 0; j < nbath; ++j) {
      for (int k = 0; k < nbath; ++k) {
        if (j == k) continue;
        const Complex d = co.d[0](j, k) + x * co.d[1](j, k) + w2 * co.d[2](j, k);
        h(i, i) += d * iz_of(st, j, nbath) * iz_of(st, k, nbath);
        const int bj = 1 << (nbath - 1 - j);
        const int bk = 1 << (nbath - 1 - k);
        if ((st & bj) && !(st & bk)) {
          const Complex c = co.c[0](j, k) + x * co.c[1](j, k) + w2 * co.c[2](j, k);
          h(index[static_cast<std::size_t>(st ^ bj ^ bk)], i) += c;
        }
      }
    }
  }
  return 0.5 * (h + h.adjoint());
}

}  // namespace

std::vector<CMatrix> exact_bath_oracle_matrix(const EvolutionSchedule& schedule, const EffectiveCoefficients& coeffs,
                                              SpinQuantum s, const std::vector<double>& t_grid, int max_n) {
  schedule.validate();
  const int nbath = coeffs.size();
  if (nbath < 1 || nbath > max_n) {
    throw ValidationError("exact_bath_oracle: N = " + std::to_string(nbath) + " exceeds max_n = " + std::to_string(max_n));
  }
  const int dim = s.dim();
  const int full = 1 << nbath;

  std::vector<std::vector<int>> sector_states(static_cast<std::size_t>(nbath + 1));
  for (int st = 0; st < full; ++st) sector_states[static_cast<std::size_t>(popcount(static_cast<unsigned>(st)))].push_back(st);

  // sectors[level][q]
  std::vector<std::vector<Sector>> sectors(static_cast<std::size_t>(dim));
  std::vector<double> frame(static_cast<std::size_t>(dim), 0.0);
  for (int y = 0; y < dim; ++y) {
    const double x = s.m_of(y);
    const double w2 = s.casimir() - x * x;
    for (const auto& states : sector_states) {
      Sector sec;
      sec.states = states;
      sec.eig.compute(sector_hamiltonian(coeffs, x, w2, states));
      sectors[static_cast<std::size_t>(y)].push_back(std::move(sec));
    }
    for (int k = 0; k < nbath; ++k) frame[static_cast<std::size_t>(y)] += 0.25 * (coeffs.b[0](k) + x * coeffs.b[1](k) + w2 * coeffs.b[2](k));
  }

  std::vector<CMatrix> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    CMatrix L = CMatrix::Identity(dim, dim);
    // W_x per sector.
    std::vector<std::vector<CMatrix>> w(static_cast<std::size_t>(dim));
    std::vector<double> phase(static_cast<std::size_t>(dim), 0.0);
    for (int x = 0; x < dim; ++x) {
      for (std::size_t q = 0; q < sector_states.size(); ++q) {
        const int sd = static_cast<int>(sector_states[q].size());
        CMatrix acc = CMatrix::Identity(sd, sd);
        for (const auto& seg : schedule.segments) {
          const int y = seg.flipped ? s.flipped(x) : x;
          const auto& e = sectors[static_cast<std::size_t>(y)][q].eig;
          CVector ph(sd);
          for (int i = 0; i < sd; ++i) ph(i) = std::exp(-kI * (e.eigenvalues()(i) * seg.fraction * t));
          acc = (e.eigenvectors() * ph.asDiagonal() * e.eigenvectors().adjoint()) * acc;
        }
        w[static_cast<std::size_t>(x)].push_back(std::move(acc));
      }
      for (const auto& seg : schedule.segments) {
        phase[static_cast<std::size_t>(x)] += seg.fraction * t * frame[static_cast<std::size_t>(seg.flipped ? s.flipped(x) : x)];
      }
    }
    for (int n = 0; n < dim; ++n) {
      for (int m = n + 1; m < dim; ++m) {
        Complex tr{};
        for (std::size_t q = 0; q < sector_states.size(); ++q) {
          tr += (w[static_cast<std::size_t>(m)][q].adjoint() * w[static_cast<std::size_t>(n)][q]).trace();
        }
        L(n, m) = tr / static_cast<double>(full) *
                  std::exp(kI * (phase[static_cast<std::size_t>(n)] - phase[static_cast<std::size_t>(m)]));
        L(m, n) = std::conj(L(n, m));
      }
    }
    out.push_back(std::move(L));
  }
  return out;
}

Complex exact_bath_oracle(const EvolutionSchedule& schedule, const EffectiveCoefficients& coeffs, SpinQuantum s,
                          int n, int m, double t, int max_n) {
  if (n < 0 || m < 0 || n >= s.dim() || m >= s.dim()) throw ValidationError("exact_bath_oracle: level out of range");
  return exact_bath_oracle_matrix(schedule, coeffs, s, {t}, max_n).front()(n, m);
}

std::vector<CMatrix> exact_full_hamiltonian_oracle(const BathGeometry& geometry, const QuditHamiltonianParams& params,
                                                   SpinQuantum s, const std::vector<double>& t_grid,
                                                   const PhysicalConstants& constants, int max_n) {
  const int nbath = geometry.size();
  if (nbath < 1 || nbath > max_n) {
    throw ValidationError("exact_full_hamiltonian_oracle: N = " + std::to_string(nbath) + " exceeds max_n = " +
                          std::to_string(max_n));
  }
  const DipolarTensors tensors = compute_dipolar_tensors(geometry, params, constants);
  const EffectiveCoefficients co = schrieffer_wolff_coefficients(tensors, params);

  const int dq = s.dim();
  const int db = 1 << nbath;
  const int dim = dq * db;
  const SpinOperators so = build_spin_operators(s);

  auto bath_op = [&](int k, char which) {
    CMatrix op = CMatrix::Zero(db, db);
    const int bit = 1 << (nbath - 1 - k);
    for (int st = 0; st < db; ++st) {
      const bool down = st & bit;
      if (which == 'z') op(st, st) = down ? -0.5 : 0.5;
      if (which == '+' && down) op(st ^ bit, st) = 1.0;
      if (which == '-' && !down) op(st ^ bit, st) = 1.0;
    }
    return op;
  };
  auto kron = [](const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
    return out;
  };
  const CMatrix iq = CMatrix::Identity(dq, dq);
  const CMatrix ib = CMatrix::Identity(db, db);

  CMatrix h = kron(params.D_zfs * so.sz * so.sz + params.Omega * so.sz, ib);
  std::vector<CMatrix> iz, ip, im;
  for (int k = 0; k < nbath; ++k) {
    iz.push_back(bath_op(k, 'z'));
    ip.push_back(bath_op(k, '+'));
    im.push_back(bath_op(k, '-'));
  }
  for (int k = 0; k < nbath; ++k) {
    const auto& D = tensors.D[static_cast<std::size_t>(k)];
    h += tensors.omega_n(k) * kron(iq, iz[static_cast<std::size_t>(k)]);
    h += D.zz * kron(so.sz, iz[static_cast<std::size_t>(k)]);
    h += D.pz * kron(so.s_plus, iz[static_cast<std::size_t>(k)]) + D.mz() * kron(so.s_minus, iz[static_cast<std::size_t>(k)]);
    h += D.pp * kron(so.s_plus, ip[static_cast<std::size_t>(k)]) + D.mm() * kron(so.s_minus, im[static_cast<std::size_t>(k)]);
    h += D.pm * (kron(so.s_plus, im[static_cast<std::size_t>(k)]) + kron(so.s_minus, ip[static_cast<std::size_t>(k)]));
    for (int j = k + 1; j < nbath; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      const auto uk = static_cast<std::size_t>(k);
      h += tensors.E_zz(k, j) * kron(iq, iz[uk] * iz[uj]);
      h += tensors.E_pm(k, j) * kron(iq, ip[uk] * im[uj] + im[uk] * ip[uj]);
    }
  }
  h = 0.5 * (h + h.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
  if (eig.info() != Eigen::Success) throw NumericalError("exact_full_hamiltonian_oracle: eigensolver failed");

  std::vector<double> frame(static_cast<std::size_t>(dq));
  const double b_sum = co.b[1].sum();
  for (int l = 0; l < dq; ++l) {
    const double x = s.m_of(l);
    frame[static_cast<std::size_t>(l)] = co.omega_tilde * x + 0.25 * x * b_sum + params.D_zfs * x * x;
  }

  // Initial joint states |psi>|b>, expressed in the eigenbasis once.
  const double amp = 1.0 / std::sqrt(static_cast<double>(dq));
  CMatrix init = CMatrix::Zero(dim, db);
  for (int b = 0; b < db; ++b) {
    for (int l = 0; l < dq; ++l) init(l * db + b, b) = amp;
  }
  const CMatrix coeff0 = eig.eigenvectors().adjoint() * init;

  std::vector<CMatrix> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    CVector ph(dim);
    for (int i = 0; i < dim; ++i) ph(i) = std::exp(-kI * (eig.eigenvalues()(i) * t));
    const CMatrix states = eig.eigenvectors() * (ph.asDiagonal() * coeff0);
    CMatrix rho = CMatrix::Zero(dq, dq);
    for (int b = 0; b < db; ++b) {
      for (int n = 0; n < dq; ++n) {
        for (int m = 0; m < dq; ++m) {
          Complex acc{};
          for (int beta = 0; beta < db; ++beta) acc += states(n * db + beta, b) * std::conj(states(m * db + beta, b));
          rho(n, m) += acc;
        }
      }
    }
    rho /= static_cast<double>(db);
    CMatrix L(dq, dq);
    for (int n = 0; n < dq; ++n) {
      for (int m = 0; m < dq; ++m) {
        const double dphi = frame[static_cast<std::size_t>(n)] - frame[static_cast<std::size_t>(m)];
        L(n, m) = rho(n, m) * std::exp(kI * (dphi * t)) / (amp * amp);
      }
    }
    out.push_back(std::move(L));
  }
  return out;
}

}  // namespace quditqec
