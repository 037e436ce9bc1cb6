#include <doctest.h>

#include <bit>
#include <cmath>

#include "oracles.hpp"
#include "quditqec/bath_model.hpp"
#include "quditqec/random.hpp"

using namespace quditqec;

namespace {

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

BathGeometry fixed(std::vector<Vec3> pos) {
  BathGeometry g;
  g.positions = std::move(pos);
  g.radius = 15.0;
  g.min_distance = 1.0;
  return g;
}

}  // namespace

TEST_CASE("bath sampling respects the geometry") {
  const BathGeometry one = sample_bath_geometry(1, 1, 15.0, 3.0);
  REQUIRE(one.size() == 1);
  CHECK(norm3(one.positions[0]) >= 3.0);
  CHECK(norm3(one.positions[0]) <= 15.0);

  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    const BathGeometry g = sample_bath_geometry(configuration_seed(1, seed), 100, 15.0, 3.0);
    REQUIRE(g.size() == 100);
    int pairs = 0;
    double closest = 1e9;
    for (int i = 0; i < 100; ++i) {
      CHECK(norm3(g.positions[i]) <= 15.0);
      CHECK(norm3(g.positions[i]) >= 3.0);
      for (int j = i + 1; j < 100; ++j, ++pairs) {
        const Vec3 d{g.positions[i][0] - g.positions[j][0], g.positions[i][1] - g.positions[j][1],
                     g.positions[i][2] - g.positions[j][2]};
        closest = std::min(closest, norm3(d));
      }
    }
    CHECK(pairs == 4950);
    CHECK(closest >= 3.0);
    CHECK_NOTHROW(g.validate());
  }
}

TEST_CASE("bath sampling is deterministic per seed") {
  const BathGeometry a = sample_bath_geometry(42, 50, 15.0, 3.0);
  const BathGeometry b = sample_bath_geometry(42, 50, 15.0, 3.0);
  const BathGeometry c = sample_bath_geometry(43, 50, 15.0, 3.0);
  CHECK(a.positions == b.positions);
  CHECK(a.positions != c.positions);
}

TEST_CASE("impossible packings and bad geometry are rejected") {
  CHECK_THROWS_AS(sample_bath_geometry(1, 5000, 5.0, 3.0, 100000), ValidationError);
  CHECK_THROWS_AS(sample_bath_geometry(1, 10, 3.0, 3.0), ValidationError);
  BathGeometry g = fixed({{0, 0, 4}, {0, 0, 4.5}});
  g.min_distance = 3.0;
  CHECK_THROWS_AS(g.validate(), ValidationError);
}

TEST_CASE("point-dipole tensor on the z axis") {
  const PhysicalConstants k;
  const auto params = make_qudit_params(1.0, 0.0);
  const DipolarTensors t = compute_dipolar_tensors(fixed({{0, 0, 3.0}}), params);
  const SphericalTensor& d = t.D[0];
  CHECK(std::abs(d.pp) < 1e-12);
  CHECK(std::abs(d.pz) < 1e-12);
  CHECK(d.zz == doctest::Approx(oracle::on_axis_zz(3.0, k.electron_nuclear_prefactor())));
  // K / r^3 = 1.84e7 rad/s at 3 A; on axis zz = -2 K / r^3
  CHECK(d.zz == doctest::Approx(-36.8).epsilon(0.01));

  const DipolarTensors far = compute_dipolar_tensors(fixed({{1.0, -2.0, 2.5}, {2.0, -4.0, 5.0}}), params);
  const SphericalTensor &a = far.D[0], &b = far.D[1];
  CHECK(b.zz == doctest::Approx(a.zz / 8));
  CHECK(std::abs(b.pz - a.pz / 8.0) < 1e-12);
  CHECK(std::abs(b.pp - a.pp / 8.0) < 1e-12);
  CHECK(b.pm == doctest::Approx(a.pm / 8));
  CHECK(far.E_zz(0, 1) == far.E_zz(1, 0));
}

TEST_CASE("spherical components of a Cartesian tensor") {
  Eigen::Matrix3d t;
  t << 1.0, 0.3, -0.2, 0.3, 2.0, 0.5, -0.2, 0.5, -3.0;
  const SphericalTensor s = spherical_from_cartesian(t);
  CHECK(s.zz == doctest::Approx(-3.0));
  CHECK(std::abs(s.pz - Complex(-0.1, -0.25)) < 1e-15);
  CHECK(std::abs(s.pp - Complex(-0.25, -0.15)) < 1e-15);
  CHECK(s.pm == doctest::Approx(0.75));
}

TEST_CASE("Schrieffer-Wolff limits") {
  const auto params = make_qudit_params(1.0, 0.0);
  DipolarTensors zero;
  zero.D.assign(2, SphericalTensor{});
  zero.E_zz = RMatrix::Zero(2, 2);
  zero.E_pm = RMatrix::Zero(2, 2);
  zero.omega_n = RVector::Zero(2);
  const EffectiveCoefficients z = schrieffer_wolff_coefficients(zero, params);
  CHECK(z.a[1].norm() == 0.0);
  CHECK(z.a[2].norm() == 0.0);
  CHECK(z.b[1].norm() == 0.0);
  CHECK(z.c[1].norm() == 0.0);
  CHECK(z.d[1].norm() == 0.0);
  CHECK(z.omega_tilde == params.Omega);

  DipolarTensors diag = zero;
  diag.D.resize(1);
  diag.D[0].zz = 5.0;
  diag.E_zz = RMatrix::Zero(1, 1);
  diag.E_pm = RMatrix::Zero(1, 1);
  diag.omega_n = RVector::Zero(1);
  const EffectiveCoefficients d = schrieffer_wolff_coefficients(diag, params);
  CHECK(d.a[1](0) == 5.0);
  CHECK(d.a[2](0) == 0.0);
  CHECK(d.b[1](0) == 0.0);
  CHECK(d.omega_tilde == params.Omega);

  bool warn = false;
  diag.D[0].pm = params.Omega;  // coupling comparable to the Zeeman gap
  schrieffer_wolff_coefficients(diag, params, &warn);
  CHECK(warn);
}

// Second-order degenerate perturbation theory on the full qudit x bath
// space: H_eff(m) = P_m H P_m + sum_{m' != m} P_m V P_m' V P_m / (Omega (m - m')).
// The model keeps only terms that conserve the bath magnetization (single
// I+- and I+I+ pieces are off-resonant with the nuclear Zeeman term), so the
// comparison is on that block. Up to scalars it must equal the conditioned
// Hamiltonian built from the coefficient tables.
TEST_CASE("effective coefficients match second-order perturbation theory") {
  const auto params = make_qudit_params(1.0, 0.0);
  const BathGeometry g = fixed({{2.0, 1.5, 2.5}, {-1.0, 3.0, -2.0}});
  const DipolarTensors t = compute_dipolar_tensors(g, params);
  const EffectiveCoefficients co = schrieffer_wolff_coefficients(t, params);
  const int nb = 2, bd = 4;

  for (int two_s : {1, 3, 5}) {
    const SpinQuantum s(two_s);
    const SpinOperators so = build_spin_operators(s);
    const int d = s.dim();
    const CMatrix Ib = CMatrix::Identity(bd, bd), Iq = CMatrix::Identity(d, d);
    CMatrix diagonal = params.Omega * oracle::kron(so.sz, Ib);
    CMatrix V = CMatrix::Zero(d * bd, d * bd);
    for (int k = 0; k < nb; ++k) {
      const CMatrix Iz = oracle::embed(oracle::iz(), k, nb);
      const CMatrix Ip = oracle::embed(oracle::iplus(), k, nb);
      const CMatrix Im = oracle::embed(oracle::iminus(), k, nb);
      const SphericalTensor& D = t.D[k];
      diagonal += t.omega_n(k) * oracle::kron(Iq, Iz) + D.zz * oracle::kron(so.sz, Iz);
      V += D.pz * oracle::kron(so.s_plus, Iz) + D.mz() * oracle::kron(so.s_minus, Iz) +
           D.pp * oracle::kron(so.s_plus, Ip) + D.mm() * oracle::kron(so.s_minus, Im) +
           D.pm * (oracle::kron(so.s_plus, Im) + oracle::kron(so.s_minus, Ip));
    }
    const CMatrix Iz0 = oracle::embed(oracle::iz(), 0, nb), Iz1 = oracle::embed(oracle::iz(), 1, nb);
    const CMatrix flip = oracle::embed(oracle::iplus(), 0, nb) * oracle::embed(oracle::iminus(), 1, nb);
    const CMatrix bath = t.E_zz(0, 1) * Iz0 * Iz1 + t.E_pm(0, 1) * (flip + flip.adjoint());
    diagonal += oracle::kron(Iq, bath);

    for (int l = 0; l < d; ++l) {
      CMatrix heff = diagonal.block(l * bd, l * bd, bd, bd);
      for (int lp = 0; lp < d; ++lp) {
        if (lp == l) continue;
        heff += V.block(l * bd, lp * bd, bd, bd) * V.block(lp * bd, l * bd, bd, bd) /
                (params.Omega * (s.m_of(l) - s.m_of(lp)));
      }
      for (int a = 0; a < bd; ++a)
        for (int b = 0; b < bd; ++b)
          if (std::popcount(unsigned(a)) != std::popcount(unsigned(b))) heff(a, b) = 0.0;
      CMatrix lib = conditioned_bath_hamiltonian(co, s, l, {0, 1});
      const Complex shift = (heff - lib).trace() / double(bd);
      CHECK((heff - lib - shift * Ib).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("conditioned bath Hamiltonian") {
  const auto params = make_qudit_params(1.0, 0.0);
  const BathGeometry g = fixed({{2.0, 1.5, 2.5}, {-1.0, 3.0, -2.0}, {0.5, -2.5, 3.0}});
  const EffectiveCoefficients co = schrieffer_wolff_coefficients(compute_dipolar_tensors(g, params), params);

  SUBCASE("matches the Kronecker-product oracle up to the b scalar") {
    for (int two_s : {1, 2, 5}) {
      const SpinQuantum s(two_s);
      for (int l = 0; l < s.dim(); ++l) {
        const std::vector<int> cl{0, 2, 1};
        const CMatrix h = conditioned_bath_hamiltonian(co, s, l, cl);
        const CMatrix o = oracle::cluster_hamiltonian(co, s.m_of(l), s.casimir(), cl);
        const double shift = b_term_frame_shift(co, s, l, cl);
        CHECK((h - o - shift * CMatrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }

  SUBCASE("singleton is diagonal") {
    const CMatrix h = conditioned_bath_hamiltonian(co, SpinQuantum(3), 1, {1});
    CHECK(h.rows() == 2);
    CHECK(std::abs(h(0, 1)) == 0.0);
  }

  SUBCASE("m = 0 of integer S sees only the even part") {
    EffectiveCoefficients even = co;
    even.a[1].setZero();
    even.b[1].setZero();
    even.c[1].setZero();
    even.d[1].setZero();
    const SpinQuantum s(4);
    CHECK((conditioned_bath_hamiltonian(co, s, 2, {0, 1}) - conditioned_bath_hamiltonian(even, s, 2, {0, 1})).norm() < 1e-12);
  }

  SUBCASE("odd part is linear in m") {
    const SpinQuantum s(5);
    EffectiveCoefficients odd = EffectiveCoefficients::zeros(3, co.omega);
    odd.a[1] = co.a[1];
    odd.b[1] = co.b[1];
    odd.c[1] = co.c[1];
    odd.d[1] = co.d[1];
    const std::vector<int> cl{0, 1, 2};
    for (int l = 0; l < s.dim(); ++l) {
      const double x = s.m_of(l);
      const CMatrix diff = conditioned_bath_hamiltonian(co, s, l, cl) - conditioned_bath_hamiltonian(co, s, s.flipped(l), cl);
      const CMatrix unit = conditioned_bath_hamiltonian(odd, s, s.level_of(0.5), cl) -
                           conditioned_bath_hamiltonian(odd, s, s.level_of(-0.5), cl);
      CHECK((diff - 2 * x * unit).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  CHECK_THROWS_AS(conditioned_bath_hamiltonian(co, SpinQuantum(3), 0, {0, 0}), ValidationError);
  CHECK_THROWS_AS(conditioned_bath_hamiltonian(co, SpinQuantum(3), 4, {0}), ValidationError);
}

TEST_CASE("qudit parameters") {
  const PhysicalConstants k;
  const auto p = make_qudit_params(1.0, 1.0);
  CHECK(p.Omega == doctest::Approx(k.g_z * k.bohr_magneton / k.hbar * 1e-6));
  CHECK(p.D_zfs == doctest::Approx(k.boltzmann / k.hbar * 1e-6));
}
