#include "cybersick/geometry.hpp"

#include <algorithm>

namespace cybersick {

Quat Quat::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) return identity();
  const double s = std::sin(0.5 * angle) / n;
  return {std::cos(0.5 * angle), axis.x * s, axis.y * s, axis.z * s};
}

Quat Quat::exp(const Vec3& rv) {
  const double angle = rv.norm();
  if (angle < 1e-300) return identity();
  return from_axis_angle(rv, angle);
}

Quat Quat::normalized() const {
  const double n = norm();
  return {w / n, x / n, y / n, z / n};
}

Vec3 Quat::log() const {
  Quat q = w < 0.0 ? negated() : *this;
  const Vec3 v = q.vec();
  const double s = v.norm();
  if (s < 1e-300) return {};
  const double angle = 2.0 * std::atan2(s, q.w);
  return v * (angle / s);
}

Quat operator*(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quat slerp(const Quat& a, const Quat& b, double u) {
  Quat end = a.dot(b) < 0.0 ? b.negated() : b;
  // a * exp(u * log(a^-1 b)) keeps full precision for tiny arcs.
  const Vec3 rv = (a.conjugate() * end).log();
  return (a * Quat::exp(rv * u)).normalized();
}

}  // namespace cybersick
