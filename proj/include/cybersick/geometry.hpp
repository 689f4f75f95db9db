#pragma once

#include <cmath>

namespace cybersick {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// Unit quaternion, scalar-first (w, x, y, z), Hamilton product, right-handed.
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quat identity() { return {}; }
  /// Rotation of `angle` radians about the unit `axis`.
  static Quat from_axis_angle(const Vec3& axis, double angle);
  /// Inverse of `log`: the rotation whose rotation vector is `rv`.
  static Quat exp(const Vec3& rv);

  Vec3 vec() const { return {x, y, z}; }
  double dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
  Quat normalized() const;
  Quat conjugate() const { return {w, -x, -y, -z}; }
  Quat negated() const { return {-w, -x, -y, -z}; }

  /// Rotation vector (axis * angle) of the shortest-arc rotation; angle in [0, pi].
  Vec3 log() const;

  friend Quat operator*(const Quat& a, const Quat& b);
  friend bool operator==(const Quat&, const Quat&) = default;
};

/// Spherical interpolation along the shortest arc; result is unit-norm.
Quat slerp(const Quat& a, const Quat& b, double u);

}  // namespace cybersick
