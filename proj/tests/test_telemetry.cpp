#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cybersick/error.hpp"
#include "cybersick/rng.hpp"
#include "cybersick/telemetry.hpp"

using namespace cybersick;

namespace {

HeadSample at(double t, Vec3 pos = {}, Quat q = {}) { return {t, pos, q}; }

TelemetryStream uniform_stream(std::size_t n, double rate) {
  TelemetryStream s(10.0, rate);
  for (std::size_t k = 0; k < n; ++k) {
    EXPECT_TRUE(s.push_head(at(static_cast<double>(k) / rate)).accepted);
  }
  return s;
}

}  // namespace

TEST(PushHead, AcceptsIncreasingTimestamps) {
  TelemetryStream s;
  EXPECT_TRUE(s.push_head(at(0.5)).accepted);
  EXPECT_TRUE(s.push_head(at(1.0)).accepted);
}

TEST(PushHead, RejectsNonMonotonicAndDuplicates) {
  TelemetryStream s;
  ASSERT_TRUE(s.push_head(at(1.0)));
  const PushResult r = s.push_head(at(0.5));
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.reason, "non-monotonic timestamp");
  EXPECT_FALSE(s.push_head(at(1.0)).accepted);
  EXPECT_EQ(s.head_count(), 1u);
}

TEST(PushHead, NormalizesQuaternion) {
  TelemetryStream s;
  ASSERT_TRUE(s.push_head(at(0.0, {}, {2, 0, 0, 0})));
  const Quat q = s.head().back().quat;
  EXPECT_EQ(q, (Quat{1, 0, 0, 0}));
}

TEST(PushHead, RejectsNonFinite) {
  TelemetryStream s;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(s.push_head(at(nan)).reason, "non-finite field");
  EXPECT_FALSE(s.push_head(at(0.0, {0, nan, 0})).accepted);
  EXPECT_FALSE(s.push_head(at(0.0, {}, {1, 0, std::numeric_limits<double>::infinity(), 0})));
  EXPECT_FALSE(s.push_head(at(0.0, {}, {0, 0, 0, 0})).accepted);
  EXPECT_EQ(s.head_count(), 0u);
}

TEST(RingBuffer, BoundedAndOrderedUnderRandomPushes) {
  Rng rng(11);
  const double rate = 72.0;
  TelemetryStream s(10.0, rate);
  double t = 0.0;
  for (int i = 0; i < 5000; ++i) {
    // Mostly forward steps, occasionally a stale or duplicate timestamp.
    const double step = rng.uniform() < 0.1 ? -rng.uniform() * 0.05 : rng.uniform(0.0, 2.0 / rate);
    t += step;
    Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    s.push_head(at(t, {}, q));
    ASSERT_LE(s.head_count(), static_cast<std::size_t>(10.0 * rate));
    const auto& h = s.head();
    for (std::size_t k = 1; k < h.size(); ++k) ASSERT_LT(h[k - 1].t, h[k].t);
    for (const auto& sample : h) ASSERT_NEAR(sample.quat.norm(), 1.0, 1e-6);
  }
}

TEST(Window, FullBufferAt72Hz) {
  const TelemetryStream s = uniform_stream(216, 72.0);
  EXPECT_EQ(s.window(3.0).samples.size(), 216u);
}

TEST(Window, InsufficientData) {
  const TelemetryStream s = uniform_stream(2, 72.0);
  EXPECT_THROW(s.window(3.0), InsufficientData);
  // Enough samples but not enough span.
  const TelemetryStream short_span = uniform_stream(100, 72.0);
  EXPECT_THROW(short_span.window(3.0), InsufficientData);
}

TEST(Window, ReturnsMostRecentSamples) {
  const TelemetryStream s = uniform_stream(720, 72.0);
  const TelemetryWindow w = s.window(3.0);
  // Direct index arithmetic: round(W * rate) samples ending at the newest.
  const auto expected = static_cast<std::size_t>(std::lround(3.0 * 72.0));
  ASSERT_EQ(w.samples.size(), expected);
  EXPECT_DOUBLE_EQ(w.samples.back().t, 719.0 / 72.0);
  EXPECT_DOUBLE_EQ(w.samples.front().t, (720.0 - expected) / 72.0);
  // Snapshot does not mutate the stream.
  EXPECT_EQ(s.head_count(), 720u);
}

TEST(Resample, UniformInputIsUnchanged) {
  TelemetryWindow w;
  for (int k = 0; k < 216; ++k) {
    const double t = k / 72.0;
    w.samples.push_back(at(t, {std::sin(t), t * t, 0.1}, Quat::from_axis_angle({0, 1, 0}, t)));
  }
  const TelemetryWindow r = resample(w, 72.0);
  ASSERT_EQ(r.samples.size(), w.samples.size());
  for (std::size_t k = 0; k < r.samples.size(); ++k) {
    EXPECT_NEAR(r.samples[k].t, w.samples[k].t, 1e-9);
    EXPECT_NEAR((r.samples[k].pos - w.samples[k].pos).norm(), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(r.samples[k].quat.dot(w.samples[k].quat)), 1.0, 1e-9);
  }
}

TEST(Resample, IsIdempotent) {
  Rng rng(5);
  TelemetryWindow w;
  double t = 0.0;
  for (int k = 0; k < 200; ++k) {
    t += rng.uniform(0.005, 0.03);
    w.samples.push_back(at(t, {rng.normal(), rng.normal(), rng.normal()},
                           Quat{rng.normal(), rng.normal(), rng.normal(), rng.normal()}.normalized()));
  }
  const TelemetryWindow once = resample(w, 72.0);
  const TelemetryWindow twice = resample(once, 72.0);
  ASSERT_EQ(once.samples.size(), twice.samples.size());
  for (std::size_t k = 0; k < once.samples.size(); ++k) {
    EXPECT_NEAR(once.samples[k].t, twice.samples[k].t, 1e-9);
    EXPECT_NEAR((once.samples[k].pos - twice.samples[k].pos).norm(), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(once.samples[k].quat.dot(twice.samples[k].quat)), 1.0, 1e-9);
    EXPECT_NEAR(once.samples[k].quat.norm(), 1.0, 1e-12);
  }
}

TEST(Resample, LinearPositionMidpoint) {
  TelemetryWindow w;
  w.samples = {at(0.0, {0, 0, 0}), at(1.0, {1, 0, 0})};
  const TelemetryWindow r = resample(w, 4.0);
  ASSERT_EQ(r.samples.size(), 5u);
  EXPECT_DOUBLE_EQ(r.samples[2].t, 0.5);
  EXPECT_NEAR(r.samples[2].pos.x, 0.5, 1e-15);
}

TEST(Resample, SlerpMidpoint) {
  TelemetryWindow w;
  w.samples = {at(0.0), at(1.0, {}, Quat::from_axis_angle({0, 0, 1}, std::numbers::pi / 2))};
  const TelemetryWindow r = resample(w, 2.0);
  ASSERT_EQ(r.samples.size(), 3u);
  const Quat m = r.samples[1].quat;
  EXPECT_NEAR(m.w, std::cos(std::numbers::pi / 8), 1e-6);
  EXPECT_NEAR(m.z, std::sin(std::numbers::pi / 8), 1e-6);
}

TEST(Resample, RejectsNonPositiveRate) {
  TelemetryWindow w;
  w.samples = {at(0.0), at(1.0)};
  EXPECT_THROW(resample(w, 0.0), ParameterError);
  EXPECT_THROW(resample(w, -1.0), ParameterError);
}

TEST(CurrentFps, UniformFrameTimes) {
  {
    TelemetryStream s;
    const double dt = 1000.0 / 72.0;
    for (int k = 1; k <= 72; ++k) s.push_frame({k * dt / 1000.0, dt});
    EXPECT_NEAR(s.current_fps(1.0), 72.0, 0.5);
  }
  {
    TelemetryStream s;
    for (int k = 1; k <= 50; ++k) s.push_frame({k * 0.02, 20.0});
    EXPECT_NEAR(s.current_fps(1.0), 50.0, 0.5);
  }
}

TEST(CurrentFps, MixedFrameTimes) {
  TelemetryStream s;
  double t = 0.0;
  for (int k = 0; k < 60; ++k) s.push_frame({t += 0.010, 10.0});
  for (int k = 0; k < 30; ++k) s.push_frame({t += 0.020, 20.0});
  // 90 frames over 600 + 600 ms.
  EXPECT_NEAR(s.current_fps(1.2), 90.0 / 1.2, 1.0);
}

TEST(CurrentFps, NoFrames) {
  TelemetryStream s;
  EXPECT_THROW(s.current_fps(1.0), InsufficientData);
  EXPECT_FALSE(s.push_frame({0.1, 0.0}).accepted);
  EXPECT_FALSE(s.push_frame({0.1, -3.0}).accepted);
}

TEST(HeadCsv, ReadsWhatItWrites) {
  CaptureSet captures;
  captures["A"] = {at(0.0, {0.1, 1.6, 0.0}), at(0.5, {0.2, 1.6, 0.1}, Quat::from_axis_angle({0, 1, 0}, 0.3))};
  captures["B"] = {at(1.0)};
  std::stringstream ss;
  write_head_csv(ss, captures);
  const CaptureSet back = read_head_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_NEAR(back.at("A")[1].quat.dot(captures["A"][1].quat), 1.0, 1e-15);
  EXPECT_EQ(back.at("A")[1].pos, captures["A"][1].pos);
}

TEST(HeadCsv, RejectsBadInput) {
  std::stringstream wrong_header("id,t\nA,0\n");
  EXPECT_THROW(read_head_csv(wrong_header), ValidationError);
  std::stringstream unordered(
      "participant_id,t,px,py,pz,qw,qx,qy,qz\nA,1,0,0,0,1,0,0,0\nA,0.5,0,0,0,1,0,0,0\n");
  EXPECT_THROW(read_head_csv(unordered), ValidationError);
  std::stringstream garbage("participant_id,t,px,py,pz,qw,qx,qy,qz\nA,x,0,0,0,1,0,0,0\n");
  EXPECT_THROW(read_head_csv(garbage), ValidationError);
}

TEST(FrameCsv, ReadsWhatItWrites) {
  std::map<std::string, std::vector<FrameTiming>> frames{{"A", {{0.1, 13.9}, {0.2, 14.1}}}};
  std::stringstream ss;
  write_frame_csv(ss, frames);
  const auto back = read_frame_csv(ss);
  ASSERT_EQ(back.at("A").size(), 2u);
  EXPECT_EQ(back.at("A")[1].dt_ms, 14.1);
}
