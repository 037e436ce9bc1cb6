#include "quditqec/bath_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "quditqec/random.hpp"

namespace quditqec {

namespace {

// m^3 -> A^3 and rad/s -> rad/us.
constexpr double kCubicMetresToAngstrom = 1e30;
constexpr double kPerSecondToPerMicrosecond = 1e-6;

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

double distance(const Vec3& a, const Vec3& b) {
  return norm3({a[0] - b[0], a[1] - b[1], a[2] - b[2]});
}

}  // namespace

double PhysicalConstants::electron_nuclear_prefactor() const {
  return mu0_over_4pi * gamma_e() * gamma_n * hbar * kCubicMetresToAngstrom * kPerSecondToPerMicrosecond;
}

double PhysicalConstants::nuclear_nuclear_prefactor() const {
  return mu0_over_4pi * gamma_n * gamma_n * hbar * kCubicMetresToAngstrom * kPerSecondToPerMicrosecond;
}

void PhysicalConstants::validate() const {
  if (!(hbar > 0 && bohr_magneton > 0 && gamma_n > 0 && g_z > 0 && mu0_over_4pi > 0 && boltzmann > 0)) {
    throw ValidationError("PhysicalConstants: all constants must be strictly positive");
  }
}

QuditHamiltonianParams make_qudit_params(double B_z, double D_zfs_kelvin,
                                         const PhysicalConstants& constants) {
  constants.validate();
  if (!(B_z > 0.0)) throw ValidationError("make_qudit_params: B_z must be positive");
  QuditHamiltonianParams p;
  p.B_z = B_z;
  p.Omega = constants.gamma_e() * B_z * kPerSecondToPerMicrosecond;
  p.D_zfs = D_zfs_kelvin * constants.boltzmann / constants.hbar * kPerSecondToPerMicrosecond;
  return p;
}

void BathGeometry::validate() const {
  if (!(radius > min_distance && min_distance > 0.0)) {
    throw ValidationError("BathGeometry: need radius > min_distance > 0");
  }
  const double slack = 1e-12;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double r = norm3(positions[i]);
    if (r > radius * (1 + slack) || r < min_distance * (1 - slack)) {
      throw ValidationError("BathGeometry: nucleus " + std::to_string(i) + " outside the shell");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (distance(positions[i], positions[j]) < min_distance * (1 - slack)) {
        throw ValidationError("BathGeometry: nuclei " + std::to_string(j) + " and " +
                              std::to_string(i) + " closer than min_distance");
      }
    }
  }
}

BathGeometry sample_bath_geometry(std::uint64_t seed, int n_spins, double radius,
                                  double min_distance, long max_draws) {
  if (n_spins < 1) throw ValidationError("sample_bath_geometry: n_spins must be >= 1");
  if (!(radius > min_distance && min_distance > 0.0)) {
    throw ValidationError("sample_bath_geometry: need radius > min_distance > 0");
  }
  BathGeometry g;
  g.seed = seed;
  g.radius = radius;
  g.min_distance = min_distance;
  g.positions.reserve(static_cast<std::size_t>(n_spins));

  Rng rng(seed);
  long draws = 0;
  while (g.size() < n_spins) {
    if (draws++ >= max_draws) {
      throw ValidationError("sample_bath_geometry: packing failed after " + std::to_string(max_draws) +
                            " draws with " + std::to_string(g.size()) + " of " +
                            std::to_string(n_spins) + " nuclei placed");
    }
    const Vec3 p{rng.uniform(-radius, radius), rng.uniform(-radius, radius), rng.uniform(-radius, radius)};
    const double r = norm3(p);
    if (r > radius || r < min_distance) continue;
    const bool clash = std::any_of(g.positions.begin(), g.positions.end(),
                                   [&](const Vec3& q) { return distance(p, q) < min_distance; });
    if (!clash) g.positions.push_back(p);
  }
  return g;
}

SphericalTensor spherical_from_cartesian(const Eigen::Matrix3d& t) {
  SphericalTensor s;
  s.zz = t(2, 2);
  s.pz = Complex(t(0, 2), -t(1, 2)) * 0.5;
  s.pp = Complex(t(0, 0) - t(1, 1), -2.0 * t(0, 1)) * 0.25;
  s.pm = (t(0, 0) + t(1, 1)) * 0.25;
  return s;
}

Eigen::Matrix3d point_dipole_tensor(const Vec3& r, double prefactor) {
  const double d = norm3(r);
  if (d < 1e-6) throw ValidationError("point_dipole_tensor: coincident positions");
  const Eigen::Vector3d u(r[0] / d, r[1] / d, r[2] / d);
  return (prefactor / (d * d * d)) * (Eigen::Matrix3d::Identity() - 3.0 * u * u.transpose());
}

DipolarTensors compute_dipolar_tensors(const BathGeometry& geometry,
                                       const QuditHamiltonianParams& params,
                                       const PhysicalConstants& constants) {
  if (!(params.B_z > 0.0)) throw ValidationError("compute_dipolar_tensors: B_z must be positive");
  constants.validate();
  const int n = geometry.size();
  const double k_en = constants.electron_nuclear_prefactor();
  const double k_nn = constants.nuclear_nuclear_prefactor();

  DipolarTensors out;
  out.D.reserve(static_cast<std::size_t>(n));
  for (const auto& r : geometry.positions) out.D.push_back(spherical_from_cartesian(point_dipole_tensor(r, k_en)));

  out.E_zz = RMatrix::Zero(n, n);
  out.E_pm = RMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& a = geometry.positions[static_cast<std::size_t>(i)];
      const auto& b = geometry.positions[static_cast<std::size_t>(j)];
      const SphericalTensor e = spherical_from_cartesian(point_dipole_tensor({b[0] - a[0], b[1] - a[1], b[2] - a[2]}, k_nn));
      out.E_zz(i, j) = out.E_zz(j, i) = e.zz;
      out.E_pm(i, j) = out.E_pm(j, i) = e.pm;
    }
  }
  out.omega_n = RVector::Constant(n, constants.gamma_n * params.B_z * kPerSecondToPerMicrosecond);
  return out;
}

EffectiveCoefficients EffectiveCoefficients::zeros(int n, double omega) {
  EffectiveCoefficients c;
  for (int k = 0; k < 3; ++k) {
    c.a[k] = RVector::Zero(n);
    c.b[k] = RVector::Zero(n);
    c.c[k] = CMatrix::Zero(n, n);
    c.d[k] = CMatrix::Zero(n, n);
  }
  c.omega = omega;
  c.omega_tilde = omega;
  return c;
}

void EffectiveCoefficients::validate() const {
  const int n = size();
  for (int k = 0; k < 3; ++k) {
    if (a[k].size() != n || b[k].size() != n || c[k].rows() != n || c[k].cols() != n ||
        d[k].rows() != n || d[k].cols() != n) {
      throw ValidationError("EffectiveCoefficients: inconsistent table sizes");
    }
    if ((c[k] - c[k].adjoint()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + c[k].cwiseAbs().maxCoeff())) {
      throw ValidationError("EffectiveCoefficients: c tables must be Hermitian");
    }
    for (int i = 0; i < n; ++i) {
      if (std::abs(c[k](i, i)) != 0.0 || std::abs(d[k](i, i)) != 0.0) {
        throw ValidationError("EffectiveCoefficients: c and d diagonals must vanish");
      }
    }
  }
}

EffectiveCoefficients schrieffer_wolff_coefficients(const DipolarTensors& tensors,
                                                    const QuditHamiltonianParams& params, bool* warning) {
  const double omega = params.Omega;
  if (omega == 0.0) throw ValidationError("schrieffer_wolff_coefficients: Omega = 0");
  const int n = tensors.size();
  EffectiveCoefficients co = EffectiveCoefficients::zeros(n, omega);
  const double f = 2.0 / omega;
  constexpr double kNuclearCasimir = 0.75;  // I(I+1), I = 1/2

  double largest = 0.0;
  double renorm = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& D = tensors.D[static_cast<std::size_t>(i)];
    largest = std::max({largest, std::abs(D.zz), std::abs(D.pz), std::abs(D.pp), std::abs(D.pm)});
    co.a[0](i) = tensors.omega_n(i);
    co.a[1](i) = D.zz;
    co.b[1](i) = f * (std::norm(D.pz) - std::norm(D.pp) - D.pm * D.pm);
    co.a[2](i) = f * (std::norm(D.pp) - D.pm * D.pm);
    renorm += std::norm(D.pp) + D.pm * D.pm;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& Dj = tensors.D[static_cast<std::size_t>(j)];
      co.c[0](i, j) = tensors.E_pm(i, j);
      co.d[0](i, j) = 0.5 * tensors.E_zz(i, j);
      co.c[1](i, j) = f * (D.pp * Dj.mm() + D.mp() * Dj.pm);
      co.d[1](i, j) = f * (D.pz * Dj.mz());
    }
  }
  co.omega_tilde = omega + 2.0 * kNuclearCasimir / omega * renorm;
  if (warning) *warning = std::abs(omega) < kSchriefferWolffWarnRatio * largest;
  return co;
}

namespace {

void check_cluster(const EffectiveCoefficients& coeffs, const std::vector<int>& cluster) {
  if (cluster.empty() || static_cast<int>(cluster.size()) > kMaxClusterSize) {
    throw ValidationError("cluster size must be in [1, " + std::to_string(kMaxClusterSize) + "]");
  }
  for (std::size_t p = 0; p < cluster.size(); ++p) {
    if (cluster[p] < 0 || cluster[p] >= coeffs.size()) throw ValidationError("cluster index out of range");
    for (std::size_t q = 0; q < p; ++q) {
      if (cluster[p] == cluster[q]) throw ValidationError("cluster indices must be distinct");
    }
  }
}

}  // namespace

CMatrix conditioned_bath_hamiltonian(const EffectiveCoefficients& coeffs, SpinQuantum s, int level,
                                     const std::vector<int>& cluster) {
  check_cluster(coeffs, cluster);
  if (level < 0 || level >= s.dim()) throw ValidationError("conditioned_bath_hamiltonian: level out of range");
  const double x = s.m_of(level);
  const double w2 = s.casimir() - x * x;
  const int size = static_cast<int>(cluster.size());
  const int dim = 1 << size;
  auto iz = [&](int state, int p) { return ((state >> (size - 1 - p)) & 1) ? -0.5 : 0.5; };

  CMatrix h = CMatrix::Zero(dim, dim);
  for (int p = 0; p < size; ++p) {
    const int k = cluster[static_cast<std::size_t>(p)];
    const double alpha = coeffs.a[0](k) + x * coeffs.a[1](k) + w2 * coeffs.a[2](k);
    const double beta = coeffs.b[0](k) + x * coeffs.b[1](k) + w2 * coeffs.b[2](k);
    for (int st = 0; st < dim; ++st) h(st, st) += alpha * iz(st, p) + beta * 0.25;
  }
  for (int p = 0; p < size; ++p) {
    for (int q = 0; q < size; ++q) {
      if (p == q) continue;
      const int j = cluster[static_cast<std::size_t>(p)];
      const int k = cluster[static_cast<std::size_t>(q)];
      const Complex c = coeffs.c[0](j, k) + x * coeffs.c[1](j, k) + w2 * coeffs.c[2](j, k);
      const Complex d = coeffs.d[0](j, k) + x * coeffs.d[1](j, k) + w2 * coeffs.d[2](j, k);
      const int bit_j = 1 << (size - 1 - p);
      const int bit_k = 1 << (size - 1 - q);
      for (int st = 0; st < dim; ++st) {
        h(st, st) += d * (iz(st, p) * iz(st, q));
        // I+_j I-_k: j down -> up, k up -> down.
        if ((st & bit_j) && !(st & bit_k)) h(st ^ bit_j ^ bit_k, st) += c;
      }
    }
  }
  // The IzIz weights d_jk + d_kj are real for Hermitian d; drop rounding residue.
  return 0.5 * (h + h.adjoint());
}

double b_term_frame_shift(const EffectiveCoefficients& coeffs, SpinQuantum s, int level,
                          const std::vector<int>& cluster) {
  const double x = s.m_of(level);
  const double w2 = s.casimir() - x * x;
  double sum = 0.0;
  for (int k : cluster) sum += coeffs.b[0](k) + x * coeffs.b[1](k) + w2 * coeffs.b[2](k);
  return 0.25 * sum;
}

}  // namespace quditqec
