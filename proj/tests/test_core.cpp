#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "dimer/core.hpp"
#include "dimer/error.hpp"

using namespace dimer;
using C = std::complex<double>;

namespace {

// n_k = psi^dag T_k psi written out by hand, basis (|dn,up>, |up,dn>).
Vec3 bloch_by_hand(C a, C b) {
  const C xy = std::conj(a) * b;
  return {2.0 * xy.real(), 2.0 * xy.imag(), std::norm(a) - std::norm(b)};
}

PseudoSpinState random_spinor(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  C a(g(rng), g(rng)), b(g(rng), g(rng));
  const double norm = std::sqrt(std::norm(a) + std::norm(b));
  return PseudoSpinState(a / norm, b / norm);
}

Mat2c commutator(const Mat2c& a, const Mat2c& b) { return a * b - b * a; }

}  // namespace

TEST_CASE("pseudospin matrices close the su(2) algebra") {
  using namespace pseudospin;
  const C i(0.0, 1.0);
  CHECK((commutator(tx(), ty()) - 2.0 * i * tz()).norm() < 1e-15);
  CHECK((commutator(ty(), tz()) - 2.0 * i * tx()).norm() < 1e-15);
  CHECK((commutator(tz(), tx()) - 2.0 * i * ty()).norm() < 1e-15);
  for (const Mat2c& t : {tx(), ty(), tz()}) CHECK((t * t - identity()).norm() < 1e-15);
}

TEST_CASE("spinor_to_bloch examples") {
  const double r = 1.0 / std::sqrt(2.0);
  CHECK((spinor_to_bloch(PseudoSpinState(0.0, 1.0)).vec() - Vec3(0, 0, -1)).norm() < 1e-15);
  CHECK((spinor_to_bloch(PseudoSpinState(r, r)).vec() - Vec3(1, 0, 0)).norm() < 1e-15);
  CHECK((spinor_to_bloch(PseudoSpinState(1.0, 0.0)).vec() - Vec3(0, 0, 1)).norm() < 1e-15);
  CHECK((spinor_to_bloch(PseudoSpinState(r, C(0, r))).vec() - Vec3(0, 1, 0)).norm() < 1e-15);
}

TEST_CASE("spinor_to_bloch rejects unnormalized input") {
  try {
    spinor_to_bloch(PseudoSpinState(1.0, 1.0));
    FAIL("expected a normalization error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::normalization);
  }
}

TEST_CASE("spinor_to_bloch matches the hand-written expectation and has unit length") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 500; ++k) {
    const PseudoSpinState psi = random_spinor(rng);
    const Vec3 n = spinor_to_bloch(psi).vec();
    CHECK((n - bloch_by_hand(psi.n1(), psi.n2())).norm() < 1e-14);
    CHECK(std::abs(n.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("bloch_to_spinor gauge and round trip") {
  const double r = 1.0 / std::sqrt(2.0);
  auto s = bloch_to_spinor(BlochVector(0, 0, 1));
  CHECK(std::abs(s.n1() - C(1.0)) < 1e-15);
  CHECK(std::abs(s.n2()) < 1e-15);
  s = bloch_to_spinor(BlochVector(1, 0, 0));
  CHECK(std::abs(s.n1() - C(r)) < 1e-15);
  CHECK(std::abs(s.n2() - C(r)) < 1e-15);
  s = bloch_to_spinor(BlochVector::south());
  CHECK(std::abs(std::abs(s.n2()) - 1.0) < 1e-15);

  std::mt19937_64 rng(11);
  for (int k = 0; k < 500; ++k) {
    const Vec3 n = spinor_to_bloch(random_spinor(rng)).vec();
    const PseudoSpinState back = bloch_to_spinor(BlochVector::normalized(n));
    CHECK(back.n1().imag() == 0.0);
    CHECK(back.n1().real() >= 0.0);
    CHECK((spinor_to_bloch(back).vec() - n).norm() < 1e-12);
  }
  CHECK((spinor_to_bloch(bloch_to_spinor(BlochVector(0, 1, 0))).vec() - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("BlochVector validates its norm") {
  CHECK_THROWS_AS(BlochVector(1.0, 1.0, 0.0), Error);
  CHECK_NOTHROW(BlochVector(0.0, 0.0, 1.0 + 5e-10));
  CHECK_THROWS_AS(BlochVector(0.0, 0.0, 1.0 + 5e-9), Error);
}

TEST_CASE("two-spin embedding and projection") {
  const TwoSpinState e = embed_two_spin(PseudoSpinState(1.0, 0.0));
  CHECK(std::abs(e.amp(0)) == 0.0);
  CHECK(std::abs(e.amp(1)) == 0.0);
  CHECK(std::abs(e.amp(2) - C(1.0)) == 0.0);
  CHECK(std::abs(e.amp(3)) == 0.0);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const PseudoSpinState psi = random_spinor(rng);
    const SubspaceProjection p = project_two_spin(embed_two_spin(psi));
    CHECK(p.residual < 1e-14);
    CHECK(std::abs(p.psi.n1() - psi.n1()) < 1e-14);
    CHECK(std::abs(p.psi.n2() - psi.n2()) < 1e-14);
  }

  try {
    project_two_spin(TwoSpinState::up_up());
    FAIL("expected degenerate projection");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::degenerate_projection);
  }
}

TEST_CASE("projection reports the weight outside the subspace") {
  TwoSpinState s;
  s.amp << C(0.6), C(0.0), C(0.8), C(0.0);
  const SubspaceProjection p = project_two_spin(s);
  CHECK(p.residual == doctest::Approx(0.36).epsilon(1e-14));
  CHECK(std::abs(p.psi.n1() - C(1.0)) < 1e-14);
}

TEST_CASE("entanglement measure examples") {
  CHECK(entanglement_measures(BlochVector(1, 0, 0)).concurrence == doctest::Approx(1.0));
  CHECK(entanglement_measures(BlochVector::north()).concurrence == doctest::Approx(0.0));
  CHECK(entanglement_measures(BlochVector::south()).concurrence == doctest::Approx(0.0));
  const auto r = entanglement_measures(BlochVector(0.8, 0.0, 0.6));
  CHECK(r.concurrence == doctest::Approx(0.64).epsilon(1e-14));
  CHECK(r.schmidt_gap == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(4.0 * r.lambda1 * r.lambda1 * r.lambda2 * r.lambda2 == doctest::Approx(0.64).epsilon(1e-13));
}

TEST_CASE("concurrence agrees with the reduced-state purity of the embedded state") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 300; ++k) {
    const PseudoSpinState psi = random_spinor(rng);
    const TwoSpinState s = embed_two_spin(psi);
    // rho_A[i][j] = sum_b amp(2i + b) conj(amp(2j + b))
    C rho[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) rho[i][j] = s.amp(2 * i) * std::conj(s.amp(2 * j)) + s.amp(2 * i + 1) * std::conj(s.amp(2 * j + 1));
    double purity = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) purity += std::norm(rho[i][j]);
    const BlochVector n = spinor_to_bloch(psi);
    const auto rep = entanglement_measures(n);
    CHECK(std::abs(2.0 * (1.0 - purity) - rep.concurrence) < 1e-12);

    const auto sc = schmidt_coefficients(s);
    CHECK(sc[0] >= sc[1]);
    CHECK(std::abs(4.0 * sc[0] * sc[0] * sc[1] * sc[1] - rep.concurrence) < 1e-12);
    CHECK(rep.concurrence >= 0.0);
    CHECK(rep.concurrence <= 1.0);
  }
}

TEST_CASE("stereographic projection examples and round trip") {
  CHECK(std::abs(stereo_project(BlochVector::north()).w) == 0.0);
  CHECK(std::abs(stereo_project(BlochVector(1, 0, 0)).w - C(1.0)) < 1e-15);
  CHECK(std::abs(stereo_project(BlochVector(0, 1, 0)).w - C(0.0, 1.0)) < 1e-15);
  CHECK(stereo_project(BlochVector::south()).infinite);
  CHECK((stereo_unproject(StereoPoint::at_infinity()).vec() - Vec3(0, 0, -1)).norm() == 0.0);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const Vec3 n = Vec3(u(rng), u(rng), u(rng)).normalized();
    if (n.z() < -0.99) continue;
    const BlochVector b(n);
    const StereoPoint w = stereo_project(b);
    CHECK(std::abs(w.w - C(n.x(), n.y()) / (1.0 + n.z())) < 1e-13);
    CHECK((stereo_unproject(w).vec() - n).norm() < 1e-12);
  }
}

TEST_CASE("field schedules") {
  const auto lin = FieldSchedule::linear(-20.0, 20.0, 200.0);
  CHECK(lin(0.0) == -20.0);
  CHECK(lin(100.0) == doctest::Approx(0.0));
  CHECK(lin(200.0) == 20.0);
  CHECK(lin(-5.0) == -20.0);
  CHECK(lin(500.0) == 20.0);
  const auto th = FieldSchedule::tanh(-20.0, 20.0, 200.0);
  CHECK(th(0.0) == doctest::Approx(-20.0));
  CHECK(th(200.0) == doctest::Approx(20.0));
  CHECK(th(100.0) == doctest::Approx(0.0));
  double prev = th(0.0);
  for (int k = 1; k <= 200; ++k) {
    const double h = th(k);
    CHECK(h >= prev);
    prev = h;
  }
  CHECK(FieldSchedule::constant(3.0)(17.0) == 3.0);
  CHECK_THROWS_AS(FieldSchedule::linear(0.0, 1.0, 0.0).validate(), Error);
}

TEST_CASE("model parameters validate") {
  CHECK_NOTHROW(ModelParams{1.0, 0.5, 0.0, 0.0}.validate());
  CHECK_THROWS_AS((ModelParams{0.0, 0.5, 0.0, 0.0}.validate()), Error);
  CHECK_THROWS_AS((ModelParams{1.0, -1.0, 0.0, 0.0}.validate()), Error);
  CHECK_THROWS_AS((ModelParams{1.0, 0.0, -0.1, 0.0}.validate()), Error);
}

TEST_CASE("ball state splits the averaged vector") {
  const BallState b = BallState::from_averaged(Vec3(0.0, 0.3, -0.4));
  CHECK(b.d == doctest::Approx(0.5));
  CHECK((b.averaged() - Vec3(0.0, 0.3, -0.4)).norm() < 1e-15);
  const BallState z = BallState::from_averaged(Vec3::Zero());
  CHECK(z.d == 0.0);
}
