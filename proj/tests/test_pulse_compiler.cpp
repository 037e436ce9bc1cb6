#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "quditqec/persistence.hpp"
#include "quditqec/pulse_compiler.hpp"

using namespace quditqec;

namespace {

// Direct 2x2 embedding of Y_ij(theta, phi), independent of the library's row updates.
CMatrix y_oracle(int d, int i, int j, double theta, double phi) {
  CMatrix u = CMatrix::Identity(d, d);
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  u(i, i) = c;
  u(j, j) = c;
  u(i, j) = -s * std::exp(Complex(0, -phi));
  u(j, i) = s * std::exp(Complex(0, phi));
  return u;
}

CMatrix stage_unitary(int d, const SequenceStage& st) {
  CMatrix u = compose(d, st.pulses);
  if (st.phase_residue.size() > 0) u = st.phase_residue.asDiagonal() * u;
  return u;
}

CodeWords random_words(SpinQuantum s, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  CodeWords w;
  w.s = s;
  w.zero_l = CVector::Zero(s.dim());
  w.one_l = CVector::Zero(s.dim());
  for (int l = 0; l < s.dim(); ++l) (l % 2 ? w.one_l : w.zero_l)(l) = Complex(n(rng), n(rng));
  w.zero_l.normalize();
  w.one_l.normalize();
  return w;
}

}  // namespace

TEST_CASE("rotation conventions") {
  const CMatrix y = rotation_matrix(4, {1, 3, 0.7, 0.3});
  CHECK((y - y_oracle(4, 1, 3, 0.7, 0.3)).norm() < 1e-15);
  // theta = pi, phi = 0 sends |i> to |j>
  CHECK(std::abs(rotation_matrix(3, {0, 2, kPi, 0.0})(2, 0) - 1.0) < 1e-15);
  CHECK((pulse_matrix(3, {1, 0.4, -0.2}) - y_oracle(3, 1, 2, 0.4, -0.2)).norm() < 1e-15);
  CHECK_THROWS_AS(pulse_matrix(3, {2, 0.1, 0.0}), ValidationError);
  CHECK_THROWS_AS(rotation_matrix(3, {2, 1, 0.1, 0.0}), ValidationError);

  const std::vector<Pulse> seq{{0, 0.3, 0.1}, {1, 1.1, -0.4}, {0, -0.5, 2.0}};
  const CMatrix expected = y_oracle(3, 0, 1, -0.5, 2.0) * y_oracle(3, 1, 2, 1.1, -0.4) * y_oracle(3, 0, 1, 0.3, 0.1);
  CHECK((compose(3, seq) - expected).norm() < 1e-14);
}

TEST_CASE("two-level decomposition") {
  const Decomposition id = two_level_decompose(CMatrix::Identity(4, 4));
  CHECK(id.rotations.empty());

  const Decomposition one = two_level_decompose(y_oracle(4, 1, 2, 0.9, 0.0));
  REQUIRE(one.rotations.size() == 1);
  CHECK(one.rotations[0].i == 1);
  CHECK(std::abs(one.rotations[0].theta) == doctest::Approx(0.9).epsilon(1e-10));

  std::mt19937_64 rng(17);
  for (int d : {2, 4, 6, 10}) {
    for (int rep = 0; rep < 5; ++rep) {
      const CMatrix U = oracle::random_unitary(d, rng);
      const Decomposition dec = two_level_decompose(U);
      CHECK(static_cast<int>(dec.rotations.size()) <= d * (d - 1) / 2);
      CMatrix prod = CMatrix::Identity(d, d);
      for (const auto& r : dec.rotations) prod = rotation_matrix(d, r) * prod;
      CHECK((dec.phase_residue.asDiagonal() * prod - U).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  CHECK_THROWS_AS(two_level_decompose(2.0 * CMatrix::Identity(3, 3)), ValidationError);
}

TEST_CASE("adjacency reduction") {
  const auto p1 = adjacency_reduce({2, 3, 0.4, 0.2});
  REQUIRE(p1.size() == 1);
  CHECK(p1[0].level == 2);

  const auto p2 = adjacency_reduce({1, 3, 0.8, 0.5});
  CHECK(p2.size() == 3);
  CHECK((compose(5, p2) - y_oracle(5, 1, 3, 0.8, 0.5)).cwiseAbs().maxCoeff() < 1e-10);

  for (int gap = 1; gap <= 7; ++gap) {
    const auto p = adjacency_reduce({0, gap, 1.3, -0.7});
    CHECK(static_cast<int>(p.size()) == 2 * (gap - 1) + 1);
    CHECK((compose(8, p) - y_oracle(8, 0, gap, 1.3, -0.7)).cwiseAbs().maxCoeff() < 1e-10);
  }

  const CMatrix g = compose(3, phase_gadget(1, 0.4));
  CHECK(std::abs(g(1, 1) + std::exp(Complex(0, 0.4))) < 1e-14);
  CHECK(std::abs(g(2, 2) + std::exp(Complex(0, -0.4))) < 1e-14);
  CHECK(std::abs(g(0, 0) - 1.0) < 1e-14);
}

TEST_CASE("encoding") {
  const SequenceStage bare = compile_encoding(bare_code_words(SpinQuantum(1)));
  CHECK(bare.pulses.empty());

  std::mt19937_64 rng(23);
  for (int two_s : {3, 5, 7, 9}) {
    const SpinQuantum s(two_s);
    const int K = s.dim() / 2;
    for (int rep = 0; rep < 4; ++rep) {
      const CodeWords w = rep == 0 ? spin_binomial_baseline(s) : random_words(s, rng);
      const SequenceStage st = compile_encoding(w);
      const CMatrix u = compose(s.dim(), st.pulses);
      CHECK(recomposition_error(u, st.target, {K - 1, K}) < 1e-9);
      // up to one global phase, not one per column
      const Complex ph0 = w.zero_l.dot(u.col(K - 1)), ph1 = w.one_l.dot(u.col(K));
      CHECK(std::abs(ph0 - ph1) < 1e-9);
    }
  }

  CodeWords mixed = spin_binomial_baseline(SpinQuantum(3));
  mixed.zero_l(1) = 0.1;
  CHECK_THROWS_AS(compile_encoding(mixed), ValidationError);
}

TEST_CASE("echo") {
  const SequenceStage e1 = compile_echo(SpinQuantum(1));
  CHECK(e1.pulses.size() == 1);
  CHECK(e1.pulses[0].theta == doctest::Approx(kPi));

  // three swaps (5/2, 3/2, 1/2) reduced to 9 + 5 + 1 adjacent pulses
  CHECK(compile_echo(SpinQuantum(5)).pulses.size() == 15);

  const SpinQuantum s(7);
  const SequenceStage e = compile_echo(s);
  const CMatrix u = compose(s.dim(), e.pulses);
  for (int l = 0; l < s.dim(); ++l) CHECK(std::abs(u(s.flipped(l), l)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(recomposition_error(stage_unitary(s.dim(), e), echo_unitary(s)) < 1e-9);
  CHECK_THROWS_AS(compile_echo(SpinQuantum(2)), ValidationError);
}

TEST_CASE("basis rotation") {
  SUBCASE("identity error set maps the words to the central pair") {
    const SpinQuantum s(3);
    const CodeWords w = spin_binomial_baseline(s);
    const RecoveryPlan plan = build_detection_recovery({CVector::Ones(4)}, w);
    const SequenceStage st = compile_basis_rotation(plan, s);
    const CMatrix v = stage_unitary(4, st);
    CHECK(std::abs(std::abs((v * w.zero_l)(1)) - 1.0) < 1e-10);
    CHECK(std::abs(std::abs((v * w.one_l)(2)) - 1.0) < 1e-10);
  }

  SUBCASE("S = 5/2 error outcomes land on exclusive level pairs") {
    const SpinQuantum s(5);
    const CodePlan cp = binomial_code_plan(s);
    const SequenceStage st = compile_basis_rotation(cp.plan, s);
    const CMatrix v = stage_unitary(6, st);
    CHECK((v.adjoint() * v - CMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
    std::vector<int> used;
    for (int k = 0; k < cp.plan.size(); ++k) {
      // orthogonalised error words, not the raw E_k|c_L>, which overlap lower k
      const CVector out = v * (std::cos(0.6) * cp.plan.error_words[k][0] + std::sin(0.6) * cp.plan.error_words[k][1]);
      const auto [a, b] = detection_levels(s, k);
      double elsewhere = 0.0;
      for (int l = 0; l < 6; ++l) {
        if (l != a && l != b) elsewhere += std::norm(out(l));
      }
      CHECK(elsewhere < 1e-18);
      used.push_back(a);
      used.push_back(b);
    }
    std::sort(used.begin(), used.end());
    CHECK(std::adjacent_find(used.begin(), used.end()) == used.end());
  }
}

TEST_CASE("ancilla frequencies") {
  AncillaParams a;
  CHECK_THROWS_AS(ancilla_frequencies({2.0, 0.0}, SpinQuantum(5), 3), ValidationError);
  const DetectionSchedule d = ancilla_frequencies(a, SpinQuantum(5), 3);
  CHECK(d.frequencies.size() == 6);
  CHECK(d.probes.size() == 3);
  for (std::size_t l = 0; l + 1 < d.frequencies.size(); ++l) {
    CHECK(d.frequencies[l + 1] - d.frequencies[l] == doctest::Approx(a.J_z));
  }
  std::vector<double> f = d.frequencies;
  std::sort(f.begin(), f.end());
  CHECK(std::adjacent_find(f.begin(), f.end()) == f.end());
}

TEST_CASE("durations") {
  PulseSequence empty;
  CHECK(duration_estimate(empty, {}, 0).total_ns == 0.0);

  PulseSequence seq;
  seq.s = SpinQuantum(5);
  SequenceStage st;
  st.pulses.assign(30, Pulse{0, kPi, 0.0});
  seq.stages.push_back(st);
  const DurationReport r = duration_estimate(seq, {10.0, 100.0, 0.1}, 2);
  CHECK(r.total_ns == doctest::Approx(500.0));
  CHECK(duration_estimate(seq, {10.0, 100.0, 0.1}, 2, 4.0).flagged);
  CHECK_FALSE(duration_estimate(seq, {10.0, 100.0, 0.1}, 2, 5.0).flagged);
  CHECK(seq.total_duration_ns(100.0) == doctest::Approx(300.0));
}

TEST_CASE("verification") {
  PulseSequence seq;
  seq.s = SpinQuantum(3);
  SequenceStage id;
  id.label = "id";
  id.target = CMatrix::Identity(4, 4);
  seq.stages.push_back(id);
  CHECK(verify_sequence(seq).max_error == 0.0);

  const CodePlan cp = binomial_code_plan(SpinQuantum(5));
  SequenceStage enc = compile_encoding(cp.words);
  seq.s = SpinQuantum(5);
  seq.stages = {enc};
  CHECK(verify_sequence(seq).max_error < 1e-9);
  REQUIRE(!enc.pulses.empty());
  seq.stages[0].pulses[enc.pulses.size() / 2].theta += 0.01;
  CHECK(verify_sequence(seq).max_error > 1e-3);
}

TEST_CASE("full cycles") {
  int previous = 0;
  for (int two_s : {1, 3, 5, 7, 9}) {
    const SpinQuantum s(two_s);
    const CodePlan cp = two_s == 1 ? bare_code_plan(s) : binomial_code_plan(s);
    const QecCycle c = compile_qec_cycle(cp);
    CAPTURE(two_s);
    CHECK(c.verification.max_error < 1e-9);
    CHECK(c.duration.pulses > previous);
    previous = c.duration.pulses;
    CHECK(c.sequence.stages[0].label == "encoding");
    CHECK(c.sequence.stages[1].label == "echo");
    CHECK(c.sequence.stages[2].label == "basis-rotation");
    CHECK(c.sequence.stages[3].label == "measurement-slot");
    CHECK(c.sequence.stages[3].measurements <= two_s / 2);
    CHECK(static_cast<int>(c.sequence.stages.size()) == 4 + cp.plan.size());
    if (two_s == 5) {
      CHECK(c.duration.total_ns >= 200.0);
      CHECK(c.duration.total_ns <= 5000.0);
      CHECK(c.detection.probes.size() == 3);
    }
    if (two_s == 1) CHECK(c.duration.total_ns <= 20.0);
  }
}

TEST_CASE("pulse sequence text round trip") {
  const QecCycle c = compile_qec_cycle(binomial_code_plan(SpinQuantum(5)));
  const std::string text = pulse_sequence_to_text(c.sequence, 70.0);
  const PulseSequence back = pulse_sequence_from_text(text);
  CHECK(back.pulse_count() == c.sequence.pulse_count());
  CHECK(back.measurement_count() == c.sequence.measurement_count());
  CHECK(verify_sequence(back).max_error < 1e-9);
  CHECK(pulse_sequence_to_text(back, 70.0) == text);
}
