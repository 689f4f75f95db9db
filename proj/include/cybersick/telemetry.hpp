#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cybersick/geometry.hpp"

namespace cybersick {

inline constexpr double kDefaultWindowSeconds = 3.0;
inline constexpr double kDefaultRateHz = 72.0;

struct HeadSample {
  double t = 0.0;  ///< seconds, monotonic session clock
  Vec3 pos;        ///< meters
  Quat quat;       ///< unit, scalar-first
};

struct FrameTiming {
  double t = 0.0;
  double dt_ms = 0.0;
  double fps() const { return 1000.0 / dt_ms; }
};

struct PushResult {
  bool accepted = false;
  std::string reason;  ///< empty when accepted
  explicit operator bool() const { return accepted; }
};

/// Contiguous head samples covering roughly [t_end - seconds, t_end].
struct TelemetryWindow {
  std::vector<HeadSample> samples;
  double seconds = 0.0;

  double t_begin() const { return samples.front().t; }
  double t_end() const { return samples.back().t; }
  double span() const { return samples.empty() ? 0.0 : t_end() - t_begin(); }
  /// Mean sample rate, (n - 1) / span.
  double rate() const;
  /// True when every step is within `rel_tol` of the mean step.
  bool uniform(double rel_tol = 1e-6) const;
};

/// Bounded head/frame buffers for one telemetry source. Samples older than
/// `capacity_seconds` behind the newest one are evicted, and the head buffer
/// never holds more than round(capacity_seconds * nominal_rate) samples.
class TelemetryStream {
 public:
  explicit TelemetryStream(double capacity_seconds = 10.0, double nominal_rate = kDefaultRateHz);

  PushResult push_head(HeadSample sample);
  PushResult push_frame(FrameTiming frame);

  /// Most recent samples with t > t_end - seconds. Throws InsufficientData
  /// unless at least 4 samples spanning >= 0.9 * seconds are available.
  TelemetryWindow window(double seconds) const;
  /// Frames per second over frames with t > t_last - seconds: N / sum(dt).
  double current_fps(double seconds) const;

  std::size_t head_count() const { return head_.size(); }
  std::size_t frame_count() const { return frames_.size(); }
  std::size_t max_head_samples() const { return max_head_; }
  const std::deque<HeadSample>& head() const { return head_; }
  const std::deque<FrameTiming>& frames() const { return frames_; }

 private:
  double capacity_;
  std::size_t max_head_;
  std::deque<HeadSample> head_;
  std::deque<FrameTiming> frames_;
};

/// Uniform re-grid at `rate` Hz starting at the window's first timestamp.
/// Positions are linearly interpolated, orientations slerped.
TelemetryWindow resample(const TelemetryWindow& window, double rate);

/// Flips quaternion signs so consecutive samples lie in one hemisphere.
void fix_hemisphere(std::vector<HeadSample>& samples);

using Capture = std::vector<HeadSample>;
/// Keyed by participant id.
using CaptureSet = std::map<std::string, Capture>;

void write_head_csv(std::ostream& out, const CaptureSet& captures);
/// Reads `participant_id,t,px,py,pz,qw,qx,qy,qz`. Quaternions are
/// normalized; rows must be time-ordered per participant.
CaptureSet read_head_csv(std::istream& in);

void write_frame_csv(std::ostream& out, const std::map<std::string, std::vector<FrameTiming>>& f);
std::map<std::string, std::vector<FrameTiming>> read_frame_csv(std::istream& in);

}  // namespace cybersick
