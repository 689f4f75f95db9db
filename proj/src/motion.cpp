#include "cybersick/motion.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "cybersick/error.hpp"
#include "cybersick/rng.hpp"

namespace cybersick {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHeadHeight = 1.6;

// Sum of three sinusoids with seeded frequencies in [f, 3f] and phases; each
// term is the integral of a unit-amplitude rate so the perturbation rate is
// comparable across frequencies.
struct SmoothNoise {
  std::array<double, 3> freq{};
  std::array<double, 3> phase{};

  SmoothNoise(Rng& rng, double base_freq) {
    for (std::size_t i = 0; i < 3; ++i) {
      freq[i] = base_freq * rng.uniform(1.0, 3.0);
      phase[i] = rng.uniform(0.0, kTwoPi);
    }
  }
  double operator()(double t) const {
    double v = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      v += std::sin(kTwoPi * freq[i] * t + phase[i]) / (kTwoPi * freq[i]);
    }
    return v / 3.0;
  }
  double position(double t) const {
    double v = 0.0;
    for (std::size_t i = 0; i < 3; ++i) v += std::sin(kTwoPi * freq[i] * t + phase[i]);
    return v / 3.0;
  }
};

Quat orientation(double yaw, double pitch, double roll) {
  return Quat::from_axis_angle({0, 1, 0}, yaw) * Quat::from_axis_angle({1, 0, 0}, pitch) *
         Quat::from_axis_angle({0, 0, 1}, roll);
}

}  // namespace

std::string to_string(MotionKind kind) {
  switch (kind) {
    case MotionKind::Static: return "static";
    case MotionKind::Walk: return "walk";
    case MotionKind::Spin: return "spin";
    case MotionKind::Stress: return "stress";
  }
  return "unknown";
}

MotionKind motion_kind_from_string(const std::string& name) {
  if (name == "static") return MotionKind::Static;
  if (name == "walk") return MotionKind::Walk;
  if (name == "spin") return MotionKind::Spin;
  if (name == "stress") return MotionKind::Stress;
  throw ParameterError("unknown motion profile '" + name + "'");
}

void MotionProfile::validate() const {
  if (!(angular_amplitude >= 0.0) || !(positional_amplitude >= 0.0) || !(noise >= 0.0)) {
    throw ParameterError("motion amplitudes and noise must be nonnegative");
  }
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ParameterError("motion rate must be positive");
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw ParameterError("motion duration must be positive");
  }
  if (kind != MotionKind::Static && !(frequency > 0.0)) {
    throw ParameterError("motion frequency must be positive");
  }
}

Capture generate_motion(const MotionProfile& p, std::uint64_t seed) {
  p.validate();
  Rng rng(seed);
  const double f = p.frequency > 0.0 ? p.frequency : 1.0;
  const std::array<SmoothNoise, 6> noise{SmoothNoise(rng, f), SmoothNoise(rng, f),
                                         SmoothNoise(rng, f), SmoothNoise(rng, f),
                                         SmoothNoise(rng, f), SmoothNoise(rng, f)};
  const double a = p.angular_amplitude;
  const double pa = p.positional_amplitude;
  const double w = kTwoPi * f;
  const double na = p.noise * a;
  const double np = p.noise * pa;

  const auto n = static_cast<std::size_t>(std::llround(p.duration * p.rate));
  Capture out;
  out.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / p.rate;
    HeadSample s;
    s.t = t;
    double yaw = 0.0, pitch = 0.0, roll = 0.0;
    Vec3 pos{0.0, kHeadHeight, 0.0};
    switch (p.kind) {
      case MotionKind::Static:
        break;
      case MotionKind::Spin:
        yaw = a / w * std::sin(w * t);
        pos.x += pa * std::sin(w * t);
        break;
      case MotionKind::Walk:
        yaw = a / w * std::sin(w * t);
        pitch = 0.3 * a / (2.0 * w) * std::sin(2.0 * w * t);
        pos.z += 1.2 * t;
        pos.y += pa * std::sin(2.0 * w * t);
        pos.x += 0.5 * pa * std::sin(w * t);
        break;
      case MotionKind::Stress:
        yaw = a * (0.6 * t + 0.4 / w * std::sin(w * t));
        pitch = 0.5 * a / (1.3 * w) * std::sin(1.3 * w * t + 1.0);
        roll = 0.3 * a / (0.7 * w) * std::sin(0.7 * w * t + 2.0);
        pos.x += pa * std::sin(w * t);
        pos.y += 0.5 * pa * std::sin(2.0 * w * t);
        pos.z += pa * std::cos(0.5 * w * t);
        break;
    }
    if (p.kind != MotionKind::Static && p.noise > 0.0) {
      yaw += na * noise[0](t);
      pitch += na * noise[1](t);
      roll += na * noise[2](t);
      pos += Vec3{np * noise[3].position(t), np * noise[4].position(t), np * noise[5].position(t)};
    }
    s.pos = pos;
    s.quat = orientation(yaw, pitch, roll);
    out.push_back(s);
  }
  fix_hemisphere(out);
  return out;
}

}  // namespace cybersick
