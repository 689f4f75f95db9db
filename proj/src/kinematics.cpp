#include "cybersick/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "cybersick/error.hpp"

namespace cybersick {

namespace {

double uniform_step(const TelemetryWindow& window, std::size_t min_samples) {
  if (window.samples.size() < min_samples) {
    throw InsufficientData("kinematics need at least " + std::to_string(min_samples) +
                           " samples, have " + std::to_string(window.samples.size()));
  }
  if (!window.uniform()) throw ParameterError("kinematics require a uniformly sampled window");
  const double dt = window.span() / static_cast<double>(window.samples.size() - 1);
  if (!(dt > 1e-9)) throw ParameterError("sample spacing too small");
  return dt;
}

void add_stats(const Series& channel, FeatureVector& out, std::size_t offset) {
  const auto n = static_cast<double>(channel.size());
  double sum = 0.0;
  double max = 0.0;
  std::vector<double> mags(channel.size());
  for (std::size_t i = 0; i < channel.size(); ++i) {
    mags[i] = channel[i].norm();
    sum += mags[i];
    max = std::max(max, mags[i]);
  }
  const double mean = sum / n;
  double ss = 0.0;
  for (double m : mags) ss += (m - mean) * (m - mean);
  out[offset] = mean;
  out[offset + 1] = std::sqrt(ss / n);
  out[offset + 2] = max;
}

}  // namespace

Series differentiate(const Series& x, double dt) {
  const std::size_t n = x.size();
  if (n < 3) throw InsufficientData("differentiation needs at least 3 samples");
  if (!(dt > 1e-9) || !std::isfinite(dt)) throw ParameterError("sample spacing too small");
  Series d(n);
  const double h2 = 2.0 * dt;
  // Written as differences so constant input gives exact zeros.
  d[0] = ((x[1] - x[0]) * 4.0 - (x[2] - x[0])) / h2;
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (x[k + 1] - x[k - 1]) / h2;
  d[n - 1] = ((x[n - 1] - x[n - 2]) * 4.0 - (x[n - 1] - x[n - 3])) / h2;
  return d;
}

LinearDerivatives linear_derivatives(const TelemetryWindow& window) {
  const double dt = uniform_step(window, 4);
  Series pos(window.samples.size());
  std::transform(window.samples.begin(), window.samples.end(), pos.begin(),
                 [](const HeadSample& s) { return s.pos; });
  LinearDerivatives d;
  d.velocity = differentiate(pos, dt);
  d.acceleration = differentiate(d.velocity, dt);
  d.jerk = differentiate(d.acceleration, dt);
  return d;
}

Series angular_velocity(const TelemetryWindow& window) {
  const double dt = uniform_step(window, 3);
  std::vector<HeadSample> s = window.samples;
  fix_hemisphere(s);
  const std::size_t n = s.size();
  // Rotation vector of sample j seen from the frame of sample k.
  auto rel = [&](std::size_t k, std::size_t j) { return (s[k].quat.conjugate() * s[j].quat).log(); };
  const double h2 = 2.0 * dt;
  Series omega(n);
  omega[0] = (rel(0, 1) * 4.0 - rel(0, 2)) / h2;
  for (std::size_t k = 1; k + 1 < n; ++k) omega[k] = (rel(k, k + 1) - rel(k, k - 1)) / h2;
  omega[n - 1] = (rel(n - 1, n - 3) - rel(n - 1, n - 2) * 4.0) / h2;
  return omega;
}

AngularDerivatives angular_derivatives(const Series& omega, double dt) {
  AngularDerivatives d;
  d.acceleration = differentiate(omega, dt);
  d.jerk = differentiate(d.acceleration, dt);
  return d;
}

KinematicSeries kinematics(const TelemetryWindow& window) {
  const double dt = uniform_step(window, 4);
  KinematicSeries k;
  k.t.reserve(window.samples.size());
  for (const auto& s : window.samples) k.t.push_back(s.t);
  auto lin = linear_derivatives(window);
  k.lin_vel = std::move(lin.velocity);
  k.lin_acc = std::move(lin.acceleration);
  k.lin_jerk = std::move(lin.jerk);
  k.ang_vel = angular_velocity(window);
  auto ang = angular_derivatives(k.ang_vel, dt);
  k.ang_acc = std::move(ang.acceleration);
  k.ang_jerk = std::move(ang.jerk);
  return k;
}

FeatureVector features(const TelemetryWindow& window) {
  const KinematicSeries k = kinematics(window);
  FeatureVector f{};
  add_stats(k.lin_vel, f, 0);
  add_stats(k.lin_acc, f, 3);
  add_stats(k.lin_jerk, f, 6);
  add_stats(k.ang_vel, f, 9);
  add_stats(k.ang_acc, f, 12);
  add_stats(k.ang_jerk, f, 15);
  for (double v : f) {
    if (!std::isfinite(v)) throw ValidationError("non-finite kinematic feature");
  }
  return f;
}

FeatureVector featurize(const TelemetryWindow& window, double rate) {
  return features(resample(window, rate));
}

}  // namespace cybersick
