#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "quditqec/spin_core.hpp"

using namespace quditqec;

TEST_CASE("spin operators follow the level convention") {
  const SpinOperators h = build_spin_operators(SpinQuantum(1));
  CHECK(h.sz(0, 0).real() == doctest::Approx(-0.5));
  CHECK(h.sz(1, 1).real() == doctest::Approx(0.5));
  CHECK(std::abs(h.sz(0, 1)) == 0.0);

  // <m=1|S+|m=0> for S = 1
  const SpinOperators one = build_spin_operators(SpinQuantum(2));
  CHECK(one.s_plus(2, 1).real() == doctest::Approx(std::sqrt(2.0)));

  const SpinOperators s52 = build_spin_operators(SpinQuantum(5));
  CHECK((s52.sz * s52.sz).trace().real() == doctest::Approx(17.5));
}

TEST_CASE("spin algebra closes for every S up to 9/2") {
  for (int two_s = 1; two_s <= 9; ++two_s) {
    const SpinQuantum s(two_s);
    const SpinOperators o = build_spin_operators(s);
    const CMatrix comm = o.sx * o.sy - o.sy * o.sx;
    CHECK((comm - kI * o.sz).norm() < 1e-12);
    const CMatrix cas = o.sx * o.sx + o.sy * o.sy + o.sz * o.sz;
    CHECK((cas - s.casimir() * CMatrix::Identity(s.dim(), s.dim())).norm() < 1e-12);
  }
}

TEST_CASE("SpinQuantum bounds") {
  CHECK_THROWS_AS(SpinQuantum(0), ValidationError);
  CHECK_THROWS_AS(SpinQuantum(41), ValidationError);
  const SpinQuantum s(5);
  CHECK(s.level_of(-2.5) == 0);
  CHECK(s.flipped(1) == 4);
  CHECK_THROWS_AS(s.level_of(0.0), ValidationError);
}

TEST_CASE("echo unitary is a spin flip") {
  const CMatrix u1 = echo_unitary(SpinQuantum(1));
  CHECK(std::abs(u1(0, 1)) == doctest::Approx(1.0));

  for (int two_s = 1; two_s <= 9; ++two_s) {
    const SpinQuantum s(two_s);
    const CMatrix u = echo_unitary(s);
    const CMatrix uu = u * u;
    for (int i = 0; i < s.dim(); ++i) {
      CHECK(std::abs(uu(i, i)) == doctest::Approx(1.0).epsilon(1e-12));
      for (int j = 0; j < s.dim(); ++j) {
        if (j == s.flipped(i)) {
          CHECK(std::abs(u(j, i)) == doctest::Approx(1.0).epsilon(1e-12));
        } else {
          CHECK(std::abs(u(j, i)) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("expm_hermitian agrees with the eigen oracle") {
  std::mt19937_64 rng(11);
  const CMatrix a = oracle::random_unitary(5, rng);
  const CMatrix h = a * CVector::LinSpaced(5, -2.0, 3.0).asDiagonal() * a.adjoint();
  CHECK((expm_hermitian(h, 0.7) - oracle::expm_i(h, 0.7)).norm() < 1e-12);
  const CMatrix u = expm_hermitian(h, 1.3);
  CHECK((u * u.adjoint() - CMatrix::Identity(5, 5)).norm() < 1e-12);
}

TEST_CASE("density matrices are validated") {
  CMatrix bad(2, 2);
  bad << 1.2, 0, 0, -0.2;
  CHECK_THROWS_AS(DensityMatrix{bad}, NumericalError);
  CMatrix nonherm(2, 2);
  nonherm << 0.5, 0.1, 0.0, 0.5;
  CHECK_THROWS_AS(DensityMatrix{nonherm}, ValidationError);
  CHECK_THROWS_AS(PureState(CVector::Zero(3)), ValidationError);
}

TEST_CASE("Uhlmann fidelity") {
  CVector a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  const DensityMatrix ra{PureState(a)}, rb{PureState(b)};
  CHECK(uhlmann_fidelity(ra, ra) == doctest::Approx(1.0));
  CHECK(uhlmann_fidelity(ra, rb) == doctest::Approx(0.0).epsilon(1e-6));
  const DensityMatrix mixed{CMatrix(0.5 * CMatrix::Identity(2, 2))};
  const double f = uhlmann_fidelity(mixed, ra);
  CHECK(f * f == doctest::Approx(0.5));
  CHECK(mixed.expectation(PureState(a)) == doctest::Approx(0.5));
}

TEST_CASE("element-wise dephasing") {
  CVector v(2);
  v << 1, kI;
  const PureState psi(v);
  const DensityMatrix rho0(psi);

  const DensityMatrix same = dephase_elementwise(CMatrix::Ones(2, 2), rho0);
  CHECK((same.matrix() - rho0.matrix()).norm() < 1e-15);

  const DensityMatrix diag = dephase_elementwise(CMatrix::Identity(2, 2), rho0);
  CHECK(std::abs(diag.matrix()(0, 1)) == 0.0);
  CHECK(diag.matrix()(0, 0).real() == doctest::Approx(0.5));

  CMatrix L = CMatrix::Ones(2, 2);
  L(0, 1) = L(1, 0) = 0.5;
  CHECK(dephase_elementwise(L, rho0).expectation(psi) == doctest::Approx(0.75));

  // |L| > 1 produces a non-PSD matrix, which is reported and not repaired.
  L(0, 1) = L(1, 0) = 2.0;
  CHECK_THROWS_AS(dephase_elementwise(L, rho0), NumericalError);
}

TEST_CASE("sqrtm_psd") {
  CMatrix r(2, 2);
  r << 0.75, 0.25, 0.25, 0.25;
  const CMatrix q = sqrtm_psd(r);
  CHECK((q * q - r).norm() < 1e-12);
  CMatrix neg(2, 2);
  neg << 1.0, 0, 0, -1e-3;
  CHECK_THROWS_AS(sqrtm_psd(neg), NumericalError);
}
