#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "cybersick/geometry.hpp"
#include "cybersick/telemetry.hpp"

namespace cybersick {

using Series = std::vector<Vec3>;

/// Six per-sample kinematic channels on the window's time base.
struct KinematicSeries {
  std::vector<double> t;
  Series lin_vel;   ///< m/s
  Series lin_acc;   ///< m/s^2
  Series lin_jerk;  ///< m/s^3
  Series ang_vel;   ///< rad/s, body frame
  Series ang_acc;   ///< rad/s^2
  Series ang_jerk;  ///< rad/s^3
};

inline constexpr std::size_t kFeatureCount = 18;
using FeatureVector = std::array<double, kFeatureCount>;

/// Version tag of the feature layout below. Bump when names or order change.
inline constexpr std::string_view kFeatureSetVersion = "kin18-v1";

/// Feature order: for each channel (lin_vel, lin_acc, lin_jerk, ang_vel,
/// ang_acc, ang_jerk) the mean, population std and max of the per-sample
/// Euclidean magnitude.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "lin_vel_mean",  "lin_vel_std",  "lin_vel_max",  "lin_acc_mean",  "lin_acc_std",
    "lin_acc_max",   "lin_jerk_mean", "lin_jerk_std", "lin_jerk_max",  "ang_vel_mean",
    "ang_vel_std",   "ang_vel_max",  "ang_acc_mean", "ang_acc_std",   "ang_acc_max",
    "ang_jerk_mean", "ang_jerk_std", "ang_jerk_max"};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureUnits{
    "m/s",     "m/s",     "m/s",     "m/s^2",   "m/s^2",   "m/s^2",
    "m/s^3",   "m/s^3",   "m/s^3",   "rad/s",   "rad/s",   "rad/s",
    "rad/s^2", "rad/s^2", "rad/s^2", "rad/s^3", "rad/s^3", "rad/s^3"};

/// First derivative of a uniformly sampled series: central differences on
/// interior points, second-order one-sided differences at both ends.
/// Needs at least 3 samples.
Series differentiate(const Series& x, double dt);

struct LinearDerivatives {
  Series velocity;
  Series acceleration;
  Series jerk;
};

/// Requires a uniform window of at least 4 samples.
LinearDerivatives linear_derivatives(const TelemetryWindow& window);

/// Body-frame angular velocity. At sample k the neighbours are expressed as
/// rotation vectors relative to q_k (log of q_k^-1 * q_j, shortest arc) and
/// differentiated with the same stencil as `differentiate`.
Series angular_velocity(const TelemetryWindow& window);

struct AngularDerivatives {
  Series acceleration;
  Series jerk;
};

AngularDerivatives angular_derivatives(const Series& omega, double dt);

KinematicSeries kinematics(const TelemetryWindow& window);

/// Aggregates a uniform window into the 18-feature vector.
FeatureVector features(const TelemetryWindow& window);

/// resample(window, rate) followed by features().
FeatureVector featurize(const TelemetryWindow& window, double rate);

}  // namespace cybersick
