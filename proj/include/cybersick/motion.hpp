#pragma once

#include <cstdint>
#include <string>

#include "cybersick/telemetry.hpp"

namespace cybersick {

enum class MotionKind { Static, Walk, Spin, Stress };

std::string to_string(MotionKind kind);
MotionKind motion_kind_from_string(const std::string& name);

/// Scripted head motion. Axes follow the y-up convention: yaw about +y,
/// pitch about +x, roll about +z.
struct MotionProfile {
  MotionKind kind = MotionKind::Stress;
  double angular_amplitude = 2.5;     ///< rad/s
  double positional_amplitude = 0.2;  ///< m
  double frequency = 0.3;             ///< Hz
  double noise = 0.2;                 ///< relative amplitude of smooth random perturbation
  double duration = 60.0;             ///< s
  double rate = kDefaultRateHz;       ///< Hz

  void validate() const;
};

/// Samples at t = k / rate for k = 0..round(duration * rate).
///  - static: identity orientation at standing head height.
///  - spin:   yaw rate A cos(2 pi f t).
///  - walk:   forward walk at 1.2 m/s with vertical bob, lateral sway, mild yaw.
///  - stress: continuous yaw A (0.6 + 0.4 cos(2 pi f t)) plus pitch and roll
///            oscillation and positional sway.
/// `noise` adds seeded smooth sinusoidal perturbations to angles and positions.
Capture generate_motion(const MotionProfile& profile, std::uint64_t seed);

}  // namespace cybersick
