#include "cybersick/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "cybersick/csv.hpp"
#include "cybersick/error.hpp"

namespace cybersick {

namespace {

// Slack for timestamp comparisons at window edges.
constexpr double kTimeEps = 1e-9;

}  // namespace

double TelemetryWindow::rate() const {
  if (samples.size() < 2 || span() <= 0.0) return 0.0;
  return static_cast<double>(samples.size() - 1) / span();
}

bool TelemetryWindow::uniform(double rel_tol) const {
  if (samples.size() < 2) return false;
  const double step = span() / static_cast<double>(samples.size() - 1);
  if (!(step > 0.0)) return false;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (std::abs((samples[i].t - samples[i - 1].t) - step) > rel_tol * step) return false;
  }
  return true;
}

TelemetryStream::TelemetryStream(double capacity_seconds, double nominal_rate)
    : capacity_(capacity_seconds) {
  if (!(capacity_seconds > 0.0) || !(nominal_rate > 0.0)) {
    throw ParameterError("telemetry capacity and rate must be positive");
  }
  max_head_ = static_cast<std::size_t>(std::llround(capacity_seconds * nominal_rate));
  if (max_head_ < 4) throw ParameterError("telemetry capacity below 4 samples");
}

PushResult TelemetryStream::push_head(HeadSample s) {
  if (!std::isfinite(s.t) || !s.pos.finite() || !s.quat.finite()) {
    return {false, "non-finite field"};
  }
  const double n = s.quat.norm();
  if (!(n > 1e-9)) return {false, "zero quaternion"};
  if (!head_.empty() && !(s.t > head_.back().t)) return {false, "non-monotonic timestamp"};
  s.quat = s.quat.normalized();
  if (!head_.empty() && s.quat.dot(head_.back().quat) < 0.0) s.quat = s.quat.negated();
  head_.push_back(s);
  while (head_.size() > max_head_ || head_.front().t <= s.t - capacity_ + kTimeEps) {
    head_.pop_front();
  }
  return {true, {}};
}

PushResult TelemetryStream::push_frame(FrameTiming f) {
  if (!std::isfinite(f.t) || !std::isfinite(f.dt_ms)) return {false, "non-finite field"};
  if (!(f.dt_ms > 0.0)) return {false, "frame time must be positive"};
  if (!frames_.empty() && !(f.t > frames_.back().t)) return {false, "non-monotonic timestamp"};
  frames_.push_back(f);
  while (frames_.front().t <= f.t - capacity_ + kTimeEps) frames_.pop_front();
  return {true, {}};
}

TelemetryWindow TelemetryStream::window(double seconds) const {
  if (!(seconds > 0.0)) throw ParameterError("window length must be positive");
  if (head_.size() < 4) {
    throw InsufficientData("window needs at least 4 head samples, have " +
                           std::to_string(head_.size()));
  }
  const double cutoff = head_.back().t - seconds + kTimeEps;
  auto first = std::upper_bound(head_.begin(), head_.end(), cutoff,
                                [](double c, const HeadSample& h) { return c < h.t; });
  TelemetryWindow w;
  w.seconds = seconds;
  w.samples.assign(first, head_.end());
  if (w.samples.size() < 4 || w.span() < 0.9 * seconds) {
    throw InsufficientData("window of " + std::to_string(seconds) + " s not yet covered");
  }
  return w;
}

double TelemetryStream::current_fps(double seconds) const {
  if (frames_.empty()) throw InsufficientData("no frame timings");
  const double cutoff = frames_.back().t - seconds + kTimeEps;
  double total_ms = 0.0;
  std::size_t n = 0;
  for (auto it = frames_.rbegin(); it != frames_.rend() && it->t > cutoff; ++it) {
    total_ms += it->dt_ms;
    ++n;
  }
  return 1000.0 * static_cast<double>(n) / total_ms;
}

void fix_hemisphere(std::vector<HeadSample>& samples) {
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].quat.dot(samples[i - 1].quat) < 0.0) {
      samples[i].quat = samples[i].quat.negated();
    }
  }
}

TelemetryWindow resample(const TelemetryWindow& window, double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ParameterError("resample rate must be positive");
  if (window.samples.size() < 2) throw InsufficientData("resample needs at least 2 samples");
  std::vector<HeadSample> src = window.samples;
  fix_hemisphere(src);

  const double t0 = src.front().t;
  const auto count =
      static_cast<std::size_t>(std::floor((src.back().t - t0) * rate + 1e-6)) + 1;
  TelemetryWindow out;
  out.seconds = window.seconds;
  out.samples.reserve(count);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = t0 + static_cast<double>(k) / rate;
    while (seg + 2 < src.size() && src[seg + 1].t <= t) ++seg;
    const HeadSample& a = src[seg];
    const HeadSample& b = src[seg + 1];
    const double u = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
    HeadSample s;
    s.t = t;
    s.pos = a.pos + (b.pos - a.pos) * u;
    s.quat = slerp(a.quat, b.quat, u);
    out.samples.push_back(s);
  }
  fix_hemisphere(out.samples);
  return out;
}

void write_head_csv(std::ostream& out, const CaptureSet& captures) {
  csv::Writer w(out);
  w.row({"participant_id", "t", "px", "py", "pz", "qw", "qx", "qy", "qz"});
  for (const auto& [id, capture] : captures) {
    for (const auto& s : capture) {
      w.row({id, csv::format_double(s.t), csv::format_double(s.pos.x),
             csv::format_double(s.pos.y), csv::format_double(s.pos.z),
             csv::format_double(s.quat.w), csv::format_double(s.quat.x),
             csv::format_double(s.quat.y), csv::format_double(s.quat.z)});
    }
  }
}

CaptureSet read_head_csv(std::istream& in) {
  const csv::Table table = csv::read(in);
  const std::vector<std::string> expected{"participant_id", "t", "px", "py", "pz",
                                          "qw", "qx", "qy", "qz"};
  if (table.header != expected) {
    throw ValidationError("head CSV header must be participant_id,t,px,py,pz,qw,qx,qy,qz");
  }
  CaptureSet out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    HeadSample s;
    s.t = csv::parse_double(row[1], "t");
    s.pos = {csv::parse_double(row[2], "px"), csv::parse_double(row[3], "py"),
             csv::parse_double(row[4], "pz")};
    s.quat = {csv::parse_double(row[5], "qw"), csv::parse_double(row[6], "qx"),
              csv::parse_double(row[7], "qy"), csv::parse_double(row[8], "qz")};
    if (!std::isfinite(s.t) || !s.pos.finite() || !s.quat.finite() || !(s.quat.norm() > 1e-9)) {
      throw ValidationError("head CSV line " + std::to_string(table.lines[r]) +
                            ": non-finite or zero-norm values");
    }
    s.quat = s.quat.normalized();
    auto& capture = out[row[0]];
    if (!capture.empty() && !(s.t > capture.back().t)) {
      throw ValidationError("head CSV line " + std::to_string(table.lines[r]) +
                            ": timestamps must strictly increase per participant");
    }
    capture.push_back(s);
  }
  return out;
}

void write_frame_csv(std::ostream& out,
                     const std::map<std::string, std::vector<FrameTiming>>& frames) {
  csv::Writer w(out);
  w.row({"participant_id", "t", "dt_ms"});
  for (const auto& [id, list] : frames) {
    for (const auto& f : list) {
      w.row({id, csv::format_double(f.t), csv::format_double(f.dt_ms)});
    }
  }
}

std::map<std::string, std::vector<FrameTiming>> read_frame_csv(std::istream& in) {
  const csv::Table table = csv::read(in);
  if (table.header != std::vector<std::string>{"participant_id", "t", "dt_ms"}) {
    throw ValidationError("frame CSV header must be participant_id,t,dt_ms");
  }
  std::map<std::string, std::vector<FrameTiming>> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    FrameTiming f{csv::parse_double(row[1], "t"), csv::parse_double(row[2], "dt_ms")};
    if (!(f.dt_ms > 0.0) || !std::isfinite(f.t)) {
      throw ValidationError("frame CSV line " + std::to_string(table.lines[r]) +
                            ": dt_ms must be positive");
    }
    out[row[0]].push_back(f);
  }
  return out;
}

}  // namespace cybersick
