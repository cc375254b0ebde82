#include "dimer/flows.hpp"

#include <cmath>

#include "dimer/error.hpp"

namespace dimer {

namespace {

// x-hat cross n
inline Vec3 x_cross(const Vec3& n) { return Vec3(0.0, -n.z(), n.y()); }

}  // namespace

const char* bias_kind_name(BiasKind kind) noexcept {
  return kind == BiasKind::linear ? "linear" : "variance";
}

double BiasSpec::observable(const Vec3& n) const {
  return kind == BiasKind::linear ? n.z() : 1.0 - n.z() * n.z();
}

void BiasSpec::validate() const { require(std::isfinite(s) && s >= 0.0, "bias strength s must be non-negative"); }

NoiseSpec NoiseSpec::from_model(const ModelParams& params, std::uint64_t seed) {
  return {2.0 * params.gamma, seed};
}

double NoiseSpec::amplitude() const { return std::sqrt(variance_rate); }

void NoiseSpec::validate() const {
  require(std::isfinite(variance_rate) && variance_rate >= 0.0, "noise variance rate must be non-negative");
}

Vec3 unitary_field(const Vec3& n, double J, double h) {
  return Vec3(-h * n.y(), -J * n.z() + h * n.x(), J * n.y());
}

Vec3 lindblad_field(const Vec3& nbar, double J, double gamma) {
  return x_cross(nbar) * J - gamma * Vec3(nbar.x(), nbar.y(), 0.0);
}

Vec3 angular_field(const Vec3& n, double J, double gamma) {
  const double nz = n.z();
  return J * x_cross(n) + gamma * nz * (Vec3::UnitZ() - nz * n);
}

double radial_rate(double nz, double d, double gamma) { return -gamma * d * (1.0 - nz * nz); }

Vec3 biased_field(const Vec3& n, double J, const BiasSpec& bias) {
  const double nz = n.z();
  if (bias.kind == BiasKind::linear) return J * x_cross(n) + bias.s * (nz * n - Vec3::UnitZ());
  return J * x_cross(n) + bias.s * nz * (Vec3::UnitZ() - nz * n);
}

SdeTerms sde_terms(const Vec3& n, double J, double h, const NoiseSpec& noise) {
  return {unitary_field(n, J, h), Vec3(-n.y(), n.x(), 0.0), noise.amplitude()};
}

namespace printed {

Vec3 angular_field(const Vec3& n, double J, double gamma) {
  const Vec3 z = Vec3::UnitZ();
  return J * x_cross(n) - gamma * n.z() * n.cross(z.cross(n));
}

double radial_rate(double nz, double gamma) { return -gamma * (1.0 - nz * nz); }

Vec3 biased_field(const Vec3& n, double J, double s1, double s2) {
  const Vec3 z = Vec3::UnitZ();
  return J * x_cross(n) - s1 * n.z() * z.cross(z.cross(n)) - s2 * n.z() * n.cross(z.cross(n));
}

}  // namespace printed

Flow Flow::biased(double J, const BiasSpec& bias) {
  return {bias.kind == BiasKind::linear ? Kind::biased_linear : Kind::biased_variance, J, 0.0, 0.0,
          bias.s};
}

Vec3 Flow::operator()(const Vec3& n) const {
  switch (kind) {
    case Kind::unitary: return unitary_field(n, J, h);
    case Kind::lindblad: return lindblad_field(n, J, gamma);
    case Kind::angular: return angular_field(n, J, gamma);
    case Kind::biased_linear: return biased_field(n, J, {BiasKind::linear, s});
    case Kind::biased_variance: return biased_field(n, J, {BiasKind::variance, s});
  }
  return Vec3::Zero();
}

void Flow::validate() const {
  require(std::isfinite(J) && J > 0.0, "J must be positive");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be non-negative");
  require(std::isfinite(h), "h must be finite");
  require(std::isfinite(s) && s >= 0.0, "bias strength s must be non-negative");
}

const char* flow_kind_name(Flow::Kind kind) noexcept {
  switch (kind) {
    case Flow::Kind::unitary: return "unitary";
    case Flow::Kind::lindblad: return "lindblad";
    case Flow::Kind::angular: return "angular";
    case Flow::Kind::biased_linear: return "biased_linear";
    case Flow::Kind::biased_variance: return "biased_variance";
  }
  return "unknown";
}

}  // namespace dimer
