#pragma once

// Domain types for the two-spin dimer restricted to its zero-magnetization
// pseudospin subspace.
//
// Pseudospin basis ordering is (|dn,up>, |up,dn>). With T_z = diag(+1, -1) the
// state |up,dn> sits at the south pole (n_z = -1) and |dn,up> at the north pole.
// Two-spin basis ordering is (|up,up>, |up,dn>, |dn,up>, |dn,dn>).

#include <array>
#include <complex>

#include <Eigen/Dense>

namespace dimer {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Vec2c = Eigen::Vector2cd;
using Mat2c = Eigen::Matrix2cd;
using Vec4c = Eigen::Matrix<Complex, 4, 1>;
using Mat4c = Eigen::Matrix<Complex, 4, 4>;

inline constexpr double kUnitTolerance = 1e-9;
inline constexpr double kSpinorTolerance = 1e-12;

/// Pseudospin matrices with eigenvalues +-1, satisfying [T_x, T_y] = 2i T_z.
namespace pseudospin {
Mat2c tx();
Mat2c ty();
Mat2c tz();
Mat2c identity();
}  // namespace pseudospin

/// Unit vector on the pseudospin Bloch sphere.
class BlochVector {
 public:
  /// Throws Errc::normalization when |n| deviates from 1 by more than 1e-9.
  explicit BlochVector(const Vec3& n);
  BlochVector(double x, double y, double z) : BlochVector(Vec3(x, y, z)) {}

  /// Rescales an arbitrary non-zero vector onto the sphere.
  static BlochVector normalized(const Vec3& v);
  static BlochVector from_angles(double polar, double azimuth);
  static BlochVector north() { return BlochVector(0.0, 0.0, 1.0); }
  static BlochVector south() { return BlochVector(0.0, 0.0, -1.0); }

  const Vec3& vec() const noexcept { return n_; }
  double x() const noexcept { return n_.x(); }
  double y() const noexcept { return n_.y(); }
  double z() const noexcept { return n_.z(); }
  double polar() const;
  double azimuth() const;

 private:
  Vec3 n_;
};

/// Interior-ball state nbar = d * n, with d the radial purity coordinate.
struct BallState {
  BlochVector n = BlochVector::south();
  double d = 1.0;

  Vec3 averaged() const { return d * n.vec(); }
  /// Splits nbar into (n, d); the zero vector maps to (south, 0).
  static BallState from_averaged(const Vec3& nbar);
};

/// Entanglement spinor (n1, n2) in the ordered basis (|dn,up>, |up,dn>).
///
/// The unnormalized variant keeps its amplitudes bounded and carries the
/// remaining scale as ln of the squared norm in `log_norm`.
class PseudoSpinState {
 public:
  PseudoSpinState() : amp_(Complex(0.0), Complex(1.0)) {}
  PseudoSpinState(Complex n1, Complex n2, double log_norm = 0.0)
      : amp_(n1, n2), log_norm_(log_norm) {}
  explicit PseudoSpinState(const Vec2c& amp, double log_norm = 0.0)
      : amp_(amp), log_norm_(log_norm) {}

  const Vec2c& amplitudes() const noexcept { return amp_; }
  Complex n1() const noexcept { return amp_(0); }
  Complex n2() const noexcept { return amp_(1); }
  double log_norm() const noexcept { return log_norm_; }

  /// ln <psi|psi> including the carried scale.
  double log_norm_squared() const;
  bool is_normalized(double tol = kSpinorTolerance) const;
  PseudoSpinState normalized() const;

 private:
  Vec2c amp_;
  double log_norm_ = 0.0;
};

struct TwoSpinState {
  Vec4c amp = Vec4c::Zero();

  static TwoSpinState up_down();
  static TwoSpinState down_up();
  static TwoSpinState up_up();
  double norm_squared() const { return amp.squaredNorm(); }
};

struct ModelParams {
  double J = 1.0;
  double gamma = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;

  void validate() const;
};

/// Staggered field h(t). Ramps run from h0 at t = 0 to h1 at t = T and are
/// clamped outside [0, T].
struct FieldSchedule {
  enum class Kind { constant, linear_ramp, tanh_ramp };

  Kind kind = Kind::constant;
  double h0 = 0.0;
  double h1 = 0.0;
  double T = 1.0;
  double tanh_steepness = 4.0;

  static FieldSchedule constant(double h);
  static FieldSchedule linear(double h0, double h1, double T);
  static FieldSchedule tanh(double h0, double h1, double T, double steepness = 4.0);

  double operator()(double t) const;
  void validate() const;
};

struct StereoPoint {
  Complex w{0.0, 0.0};
  bool infinite = false;

  static StereoPoint at_infinity() { return {Complex(0.0, 0.0), true}; }
};

struct EntanglementReport {
  double schmidt_gap = 0.0;  ///< lambda1^2 - lambda2^2 = n_z
  double concurrence = 0.0;  ///< 1 - n_z^2 = 4 lambda1^2 lambda2^2
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

struct SubspaceProjection {
  PseudoSpinState psi;
  double residual = 0.0;  ///< weight outside the zero-magnetization subspace
};

BlochVector spinor_to_bloch(const PseudoSpinState& psi);
/// Gauge: n1 is real and non-negative.
PseudoSpinState bloch_to_spinor(const BlochVector& n);

TwoSpinState embed_two_spin(const PseudoSpinState& psi);
/// Throws Errc::degenerate_projection when nothing is left in the subspace.
SubspaceProjection project_two_spin(const TwoSpinState& state);

EntanglementReport entanglement_measures(const BlochVector& n);
/// Schmidt coefficients (descending) of a two-spin state across the dimer cut.
std::array<double, 2> schmidt_coefficients(const TwoSpinState& state);

StereoPoint stereo_project(const BlochVector& n);
BlochVector stereo_unproject(const StereoPoint& w);

}  // namespace dimer
