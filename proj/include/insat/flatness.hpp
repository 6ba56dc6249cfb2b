#pragma once

// Differential-flatness maps for a yaw-free quadrotor: attitude <-> thrust
// direction <-> acceleration, and body rates from jerk.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "insat/errors.hpp"

namespace insat
{

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline const Vec3 kWorldUp{0.0, 0.0, 1.0};

/// Roll/pitch pair restricted to the upper hemisphere, |phi|,|theta| < pi/2.
class Attitude
{
public:
  Attitude() = default;
  Attitude(double roll, double pitch) : phi_(roll), theta_(pitch)
  {
    constexpr double half_pi = std::numbers::pi / 2.0;
    if (!std::isfinite(roll) || !std::isfinite(pitch) || std::abs(roll) >= half_pi ||
        std::abs(pitch) >= half_pi)
    {
      throw InvalidArgument("attitude outside the open hemisphere: phi=" + std::to_string(roll) +
                            " theta=" + std::to_string(pitch));
    }
  }

  double phi() const { return phi_; }
  double theta() const { return theta_; }

  /// Body-to-world rotation with zero yaw, R = Rx(phi) * Ry(theta).
  Mat3 rotation() const
  {
    return (Eigen::AngleAxisd(phi_, Vec3::UnitX()) * Eigen::AngleAxisd(theta_, Vec3::UnitY()))
        .toRotationMatrix();
  }

private:
  double phi_ = 0.0;
  double theta_ = 0.0;
};

/// Unit thrust axis z^B with positive world-z component.
class ThrustDir
{
public:
  ThrustDir() = default;
  explicit ThrustDir(const Vec3& z) : z_(z)
  {
    if (!z.allFinite() || std::abs(z.norm() - 1.0) > 1e-12)
      throw InvalidArgument("thrust direction must be a unit vector");
    if (z.z() <= 0.0)
      throw UndefinedAttitude("thrust direction has non-positive world-z component");
  }

  static ThrustDir normalized(const Vec3& v)
  {
    const double n = v.norm();
    if (!(n > 0.0))
      throw UndefinedAttitude("zero thrust vector");
    return ThrustDir(v / n);
  }

  const Vec3& vec() const { return z_; }

private:
  Vec3 z_ = kWorldUp;
};

struct QuadModel
{
  double mass = 0.5;       // kg
  double gravity = 9.81;   // m/s^2
  double f_nom = 0.5 * 9.81;  // N, thrust used for attitude-constrained waypoints
  double f_max = 10.0;     // N
  double omega_max = 5.0;  // rad/s
  double thrust_floor = 0.5;  // m/s^2, minimum thrust-per-mass for body-rate evaluation

  void validate() const
  {
    if (!(mass > 0.0) || !(gravity > 0.0) || !(f_nom > 0.0) || !(f_nom <= f_max) ||
        !(omega_max > 0.0) || !(thrust_floor > 0.0))
      throw InvalidArgument("QuadModel requires m > 0, g > 0, 0 < f_nom <= f_max, omega_max > 0");
  }

  double max_thrust_per_mass() const { return f_max / mass; }
};

/// 12D translational state: position, velocity, acceleration, jerk.
struct FlatState
{
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
  Vec3 j = Vec3::Zero();

  bool finite() const { return x.allFinite() && v.allFinite() && a.allFinite() && j.allFinite(); }

  const Vec3& derivative(int k) const
  {
    switch (k)
    {
      case 0: return x;
      case 1: return v;
      case 2: return a;
      default: return j;
    }
  }
};

inline ThrustDir attitude_to_thrust_dir(const Attitude& att)
{
  const double sp = std::sin(att.phi()), cp = std::cos(att.phi());
  const double st = std::sin(att.theta()), ct = std::cos(att.theta());
  Vec3 z(st, -ct * sp, cp * ct);
  // Unit by construction up to rounding; renormalise so the invariant is exact.
  return ThrustDir(z / z.norm());
}

inline Attitude attitude_from_thrust_dir(const ThrustDir& z)
{
  const Vec3& v = z.vec();
  if (v.z() <= 0.0)
    throw UndefinedAttitude("thrust direction below the horizon");
  const double theta = std::asin(std::clamp(v.x(), -1.0, 1.0));
  const double phi = std::atan2(-v.y(), v.z());
  return Attitude(phi, theta);
}

/// Attitude whose thrust axis is parallel to a + g*z^W.
inline Attitude attitude_from_acceleration(const Vec3& a, const QuadModel& model)
{
  const Vec3 t = a + model.gravity * kWorldUp;
  const double n = t.norm();
  if (!(n >= 1e-9))
    throw UndefinedAttitude("free fall: thrust vector vanishes");
  if (t.z() <= 0.0)
    throw UndefinedAttitude("required thrust points below the horizon");
  return attitude_from_thrust_dir(ThrustDir(t / n));
}

/// Linear acceleration constraint W a = d for thrust axis z; rank(W) = 2, W z = 0.
/// Rows come from cross-multiplying a + g z^W parallel to z.
struct ConstraintSystem
{
  Mat3 W;
  Vec3 d;
};

inline ConstraintSystem constraint_system(const ThrustDir& thrust_dir, double gravity)
{
  const Vec3& z = thrust_dir.vec();
  ConstraintSystem cs;
  cs.W << -z.y(), z.x(), 0.0,
          -z.z(), 0.0, z.x(),
          0.0, -z.z(), z.y();
  cs.d << 0.0, -gravity * z.x(), -gravity * z.y();
  return cs;
}

/// Acceleration at a waypoint whose attitude is pinned, with thrust fixed at f_nom.
inline Vec3 constrained_acceleration(const Attitude& att, const QuadModel& model)
{
  return (model.f_nom / model.mass) * attitude_to_thrust_dir(att).vec() - model.gravity * kWorldUp;
}

inline double thrust_per_mass(const Vec3& a, const QuadModel& model)
{
  return (a + model.gravity * kWorldUp).norm();
}

/// Body rates from jerk: (w2, -w1, w3) = (1/c) diag(1,1,0) R^T jerk, with w3 = 0.
inline Vec3 body_rate(const Attitude& att, const Vec3& jerk, double thrust_per_mass,
                      double thrust_floor = 0.5)
{
  if (!(thrust_per_mass > thrust_floor))
    throw RateSingularity("thrust-per-mass " + std::to_string(thrust_per_mass) +
                          " below floor " + std::to_string(thrust_floor));
  const Vec3 h = att.rotation().transpose() * jerk / thrust_per_mass;
  return Vec3(-h.y(), h.x(), 0.0);
}

/// Body-rate magnitude computed without an explicit attitude: |j - (j.z)z| / c.
inline double body_rate_norm(const Vec3& a, const Vec3& jerk, double gravity)
{
  const Vec3 u = a + gravity * kWorldUp;
  const double c2 = u.squaredNorm();
  const double ju = jerk.dot(u);
  const double num = std::max(0.0, jerk.squaredNorm() * c2 - ju * ju);
  return std::sqrt(num) / c2;
}

}  // namespace insat
