#include "dimer/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dimer/error.hpp"

namespace dimer {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::normalization: return "normalization";
    case Errc::degenerate_projection: return "degenerate_projection";
    case Errc::non_convergence: return "non_convergence";
    case Errc::calibration_failure: return "calibration_failure";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

namespace pseudospin {

Mat2c tx() {
  Mat2c m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Mat2c ty() {
  const Complex i(0.0, 1.0);
  Mat2c m;
  m << 0.0, -i, i, 0.0;
  return m;
}

Mat2c tz() {
  Mat2c m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

Mat2c identity() { return Mat2c::Identity(); }

}  // namespace pseudospin

BlochVector::BlochVector(const Vec3& n) : n_(n) {
  const double norm = n.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitTolerance) {
    std::ostringstream os;
    os << "Bloch vector must have unit norm (|n| = " << norm << ")";
    throw Error(Errc::normalization, os.str());
  }
}

BlochVector BlochVector::normalized(const Vec3& v) {
  const double norm = v.norm();
  require(norm > 0.0 && std::isfinite(norm), "cannot normalize a zero or non-finite vector",
          Errc::normalization);
  return BlochVector(v / norm);
}

BlochVector BlochVector::from_angles(double polar, double azimuth) {
  return normalized(Vec3(std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth),
                         std::cos(polar)));
}

double BlochVector::polar() const { return std::acos(std::clamp(n_.z(), -1.0, 1.0)); }

double BlochVector::azimuth() const { return std::atan2(n_.y(), n_.x()); }

BallState BallState::from_averaged(const Vec3& nbar) {
  const double d = nbar.norm();
  require(d <= 1.0 + kUnitTolerance, "averaged Bloch vector lies outside the unit ball");
  if (d == 0.0) return BallState{BlochVector::south(), 0.0};
  return BallState{BlochVector(nbar / d), std::min(d, 1.0)};
}

double PseudoSpinState::log_norm_squared() const {
  return std::log(amp_.squaredNorm()) + log_norm_;
}

bool PseudoSpinState::is_normalized(double tol) const {
  return log_norm_ == 0.0 && std::abs(amp_.squaredNorm() - 1.0) <= tol;
}

PseudoSpinState PseudoSpinState::normalized() const {
  const double norm = amp_.norm();
  require(norm > 0.0 && std::isfinite(norm), "cannot normalize a null spinor", Errc::normalization);
  return PseudoSpinState(amp_ / norm);
}

TwoSpinState TwoSpinState::up_down() {
  TwoSpinState s;
  s.amp(1) = 1.0;
  return s;
}

TwoSpinState TwoSpinState::down_up() {
  TwoSpinState s;
  s.amp(2) = 1.0;
  return s;
}

TwoSpinState TwoSpinState::up_up() {
  TwoSpinState s;
  s.amp(0) = 1.0;
  return s;
}

void ModelParams::validate() const {
  require(std::isfinite(J) && J > 0.0, "J must be positive");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be non-negative");
  require(std::isfinite(s1) && s1 >= 0.0, "s1 must be non-negative");
  require(std::isfinite(s2) && s2 >= 0.0, "s2 must be non-negative");
}

FieldSchedule FieldSchedule::constant(double h) { return {Kind::constant, h, h, 1.0}; }

FieldSchedule FieldSchedule::linear(double h0, double h1, double T) {
  return {Kind::linear_ramp, h0, h1, T};
}

FieldSchedule FieldSchedule::tanh(double h0, double h1, double T, double steepness) {
  return {Kind::tanh_ramp, h0, h1, T, steepness};
}

double FieldSchedule::operator()(double t) const {
  if (kind == Kind::constant) return h0;
  const double u = std::clamp(t / T, 0.0, 1.0);
  if (kind == Kind::linear_ramp) return h0 + (h1 - h0) * u;
  const double mid = 0.5 * (h0 + h1);
  const double half = 0.5 * (h1 - h0);
  return mid + half * std::tanh(tanh_steepness * (2.0 * u - 1.0)) / std::tanh(tanh_steepness);
}

void FieldSchedule::validate() const {
  require(std::isfinite(h0) && std::isfinite(h1), "field endpoints must be finite");
  if (kind != Kind::constant) require(std::isfinite(T) && T > 0.0, "ramp horizon T must be positive");
  if (kind == Kind::tanh_ramp) require(tanh_steepness > 0.0, "tanh steepness must be positive");
}

BlochVector spinor_to_bloch(const PseudoSpinState& psi) {
  require(psi.is_normalized(), "spinor_to_bloch requires a normalized spinor", Errc::normalization);
  const Vec2c& a = psi.amplitudes();
  const Complex cross = std::conj(a(0)) * a(1);
  const Vec3 n(2.0 * cross.real(), 2.0 * cross.imag(), std::norm(a(0)) - std::norm(a(1)));
  return BlochVector::normalized(n);
}

PseudoSpinState bloch_to_spinor(const BlochVector& n) {
  const double n1 = std::sqrt(std::max(0.0, 0.5 * (1.0 + n.z())));
  Complex n2;
  if (n1 > 1e-150) {
    n2 = Complex(n.x(), n.y()) / (2.0 * n1);
  } else {
    n2 = 1.0;
  }
  return PseudoSpinState(Complex(n1, 0.0), n2).normalized();
}

TwoSpinState embed_two_spin(const PseudoSpinState& psi) {
  TwoSpinState out;
  out.amp(2) = psi.n1();
  out.amp(1) = psi.n2();
  return out;
}

SubspaceProjection project_two_spin(const TwoSpinState& state) {
  const double total = state.norm_squared();
  require(total > 0.0, "cannot project a null two-spin state", Errc::degenerate_projection);
  const double outside = (std::norm(state.amp(0)) + std::norm(state.amp(3))) / total;
  if (outside > 1.0 - 1e-12) {
    throw Error(Errc::degenerate_projection,
                "two-spin state has no weight in the zero-magnetization subspace");
  }
  const PseudoSpinState psi = PseudoSpinState(state.amp(2), state.amp(1)).normalized();
  return {psi, outside};
}

EntanglementReport entanglement_measures(const BlochVector& n) {
  const double nz = n.z();
  EntanglementReport r;
  r.schmidt_gap = nz;
  r.concurrence = std::clamp(1.0 - nz * nz, 0.0, 1.0);
  r.lambda1 = std::sqrt(std::max(0.0, 0.5 * (1.0 + std::abs(nz))));
  r.lambda2 = std::sqrt(std::max(0.0, 0.5 * (1.0 - std::abs(nz))));
  return r;
}

std::array<double, 2> schmidt_coefficients(const TwoSpinState& state) {
  Mat2c c;
  c << state.amp(0), state.amp(1), state.amp(2), state.amp(3);
  Eigen::JacobiSVD<Mat2c> svd(c);
  const auto sv = svd.singularValues();
  return {sv(0), sv(1)};
}

StereoPoint stereo_project(const BlochVector& n) {
  const double denom = 1.0 + n.z();
  if (denom <= 0.0 || (n.x() == 0.0 && n.y() == 0.0 && n.z() < 0.0)) {
    return StereoPoint::at_infinity();
  }
  return {Complex(n.x(), n.y()) / denom, false};
}

BlochVector stereo_unproject(const StereoPoint& p) {
  if (p.infinite) return BlochVector::south();
  const double r2 = std::norm(p.w);
  const double scale = 1.0 / (1.0 + r2);
  return BlochVector::normalized(
      Vec3(2.0 * p.w.real() * scale, 2.0 * p.w.imag() * scale, (1.0 - r2) * scale));
}

}  // namespace dimer
