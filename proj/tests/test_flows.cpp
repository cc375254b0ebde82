#include <cmath>
#include <random>

#include "doctest.h"
#include "dimer/error.hpp"
#include "dimer/flows.hpp"

using namespace dimer;

namespace {

std::vector<Vec3> sphere_samples(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Vec3> out;
  while (out.size() < n) {
    const Vec3 v(g(rng), g(rng), g(rng));
    if (v.norm() > 1e-6) out.push_back(v.normalized());
  }
  return out;
}

std::vector<Vec3> ball_samples(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> out;
  while (out.size() < n) {
    const Vec3 v(u(rng), u(rng), u(rng));
    if (v.norm() <= 1.0) out.push_back(v);
  }
  return out;
}

bool near(const Vec3& a, const Vec3& b, double tol = 1e-15) { return (a - b).norm() <= tol; }

}  // namespace

TEST_CASE("unitary field examples") {
  CHECK(near(unitary_field({0, 0, -1}, 1.0, 0.0), {0, 1, 0}));
  CHECK(near(unitary_field({1, 0, 0}, 1.0, 0.0), {0, 0, 0}));
  CHECK(near(unitary_field({1, 0, 0}, 1.0, 2.0), {0, 2, 0}));
}

TEST_CASE("lindblad field examples") {
  CHECK(near(lindblad_field({0, 0, -1}, 1.0, 5.0), {0, 1, 0}));
  CHECK(near(lindblad_field({1, 0, 0}, 1.0, 2.0), {-2, 0, 0}));
  CHECK(near(lindblad_field({0, 1, 0}, 1.0, 0.5), {0, -0.5, 1}));
}

TEST_CASE("angular field examples") {
  for (double g : {0.0, 0.5, 3.0}) {
    CHECK(near(angular_field({1, 0, 0}, 1.0, g), {0, 0, 0}));
    CHECK(near(angular_field({-1, 0, 0}, 1.0, g), {0, 0, 0}));
  }
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(near(angular_field({0, -r, r}, 1.0, 2.0), {0, 0, 0}, 1e-15));
  CHECK(near(angular_field({0, 0, -1}, 1.0, 3.0), {0, 1, 0}));
}

TEST_CASE("radial rate examples") {
  CHECK(radial_rate(1.0, 0.7, 2.0) == 0.0);
  CHECK(radial_rate(-1.0, 0.7, 2.0) == 0.0);
  CHECK(radial_rate(0.3, 0.0, 2.0) == 0.0);
  CHECK(radial_rate(0.0, 1.0, 2.0) == -2.0);
  for (double nz = -1.0; nz <= 1.0; nz += 0.125) CHECK(radial_rate(nz, 0.5, 1.5) <= 0.0);
}

TEST_CASE("biased field fixed points") {
  const BiasSpec lin{BiasKind::linear, 0.6};
  CHECK(near(biased_field({0.8, 0.6, 0.0}, 1.0, lin), {0, 0, 0}, 1e-15));
  CHECK(near(biased_field({-0.8, 0.6, 0.0}, 1.0, lin), {0, 0, 0}, 1e-15));
  const BiasSpec strong{BiasKind::linear, 2.0};
  const double z = std::sqrt(0.75);
  CHECK(near(biased_field({0.0, 0.5, z}, 1.0, strong), {0, 0, 0}, 1e-15));
  CHECK(near(biased_field({0.0, 0.5, -z}, 1.0, strong), {0, 0, 0}, 1e-15));
}

TEST_CASE("variance bias is the angular flow with s = gamma") {
  for (const Vec3& n : sphere_samples(1000, 1)) {
    for (double s : {0.3, 2.0, 4.5}) {
      CHECK(near(biased_field(n, 1.0, {BiasKind::variance, s}), angular_field(n, 1.0, s), 0.0));
    }
  }
}

TEST_CASE("pure-state fields are tangent") {
  double worst = 0.0;
  for (const Vec3& n : sphere_samples(10000, 2)) {
    worst = std::max(worst, std::abs(unitary_field(n, 1.0, 0.7).dot(n)));
    worst = std::max(worst, std::abs(angular_field(n, 1.0, 2.5).dot(n)));
    worst = std::max(worst, std::abs(biased_field(n, 1.0, {BiasKind::linear, 1.3}).dot(n)));
    worst = std::max(worst, std::abs(biased_field(n, 1.0, {BiasKind::variance, 3.0}).dot(n)));
  }
  CHECK(worst <= 1e-14);
}

TEST_CASE("lindblad field contracts the ball") {
  const double gamma = 1.7;
  for (const Vec3& m : ball_samples(10000, 3)) {
    const double rate = m.dot(lindblad_field(m, 1.0, gamma));
    CHECK(rate <= 1e-16);
    CHECK(std::abs(rate + gamma * (m.x() * m.x() + m.y() * m.y())) < 1e-14);
  }
}

TEST_CASE("angular field commutes with the rotation by pi about x") {
  const Eigen::DiagonalMatrix<double, 3> R(1.0, -1.0, -1.0);
  for (const Vec3& n : sphere_samples(1000, 4)) {
    CHECK(near(angular_field(R * n, 1.0, 2.2), R * angular_field(n, 1.0, 2.2), 1e-14));
  }
}

TEST_CASE("sde terms") {
  const NoiseSpec quiet{0.0, 1};
  const SdeTerms t0 = sde_terms({0.6, 0.0, -0.8}, 1.0, 0.5, quiet);
  CHECK(t0.amplitude == 0.0);
  CHECK(near(t0.drift, unitary_field({0.6, 0.0, -0.8}, 1.0, 0.5)));

  const NoiseSpec noise = NoiseSpec::from_model({1.0, 1.5, 0.0, 0.0}, 42);
  CHECK(noise.variance_rate == 3.0);
  CHECK(noise.gamma() == 1.5);
  const SdeTerms t = sde_terms({0, 0, 1}, 1.0, 0.0, noise);
  CHECK(t.amplitude == doctest::Approx(std::sqrt(3.0)));
  CHECK(near(t.diffusion_direction, {0, 0, 0}));
  const SdeTerms u = sde_terms({0.6, 0.8, 0.0}, 1.0, 0.0, noise);
  CHECK(near(u.diffusion_direction, {-0.8, 0.6, 0.0}));
}

TEST_CASE("the Ito correction of the z-noise is the Lindblad damping") {
  // Stratonovich -> Ito drift correction (1/2) a^2 (g . grad) g with g = z x n
  const double gamma = 0.9;
  const double a2 = 2.0 * gamma;
  for (const Vec3& n : sphere_samples(200, 5)) {
    auto g = [](const Vec3& m) { return Vec3(-m.y(), m.x(), 0.0); };
    const double h = 1e-6;
    const Vec3 dg = (g(n + h * g(n)) - g(n - h * g(n))) / (2.0 * h);
    const Vec3 ito = 0.5 * a2 * dg;
    CHECK(near(ito, lindblad_field(n, 0.0, gamma), 1e-9));
  }
}

TEST_CASE("flow descriptor dispatch") {
  const Vec3 n = Vec3(0.3, -0.4, 0.5).normalized();
  CHECK(near(Flow::unitary(1.0, 0.3)(n), unitary_field(n, 1.0, 0.3)));
  CHECK(near(Flow::lindblad(1.0, 0.3)(n), lindblad_field(n, 1.0, 0.3)));
  CHECK(near(Flow::angular(1.0, 0.3)(n), angular_field(n, 1.0, 0.3)));
  CHECK(near(Flow::biased(1.0, {BiasKind::linear, 0.3})(n), biased_field(n, 1.0, {BiasKind::linear, 0.3})));
  CHECK_FALSE(Flow::lindblad(1.0, 0.3).on_sphere());
  CHECK_THROWS_AS(Flow::angular(1.0, -0.1).validate(), Error);
  CHECK_THROWS_AS(Flow::angular(0.0, 0.1).validate(), Error);
  CHECK_THROWS_AS((BiasSpec{BiasKind::linear, -1.0}.validate()), Error);
}

TEST_CASE("printed forms differ from the canonical ones as documented") {
  for (const Vec3& n : sphere_samples(200, 6)) {
    // sign-reversed damping
    const Vec3 damping = printed::angular_field(n, 1.0, 1.0) - unitary_field(n, 1.0, 0.0);
    const Vec3 canonical = angular_field(n, 1.0, 1.0) - unitary_field(n, 1.0, 0.0);
    CHECK(near(damping, -canonical, 1e-14));
    CHECK(printed::radial_rate(n.z(), 1.0) == doctest::Approx(radial_rate(n.z(), 1.0, 1.0)));
  }
  // s1 term of the printed bias flow leaves the sphere
  const Vec3 n = Vec3(std::sqrt(2.0 / 3.0), 0.0, std::sqrt(1.0 / 3.0));
  const double off = printed::biased_field(n, 1.0, 1.0, 0.0).dot(n);
  CHECK(std::abs(off) == doctest::Approx(2.0 / (3.0 * std::sqrt(3.0))).epsilon(1e-12));
}
