#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cybersick/controller.hpp"
#include "cybersick/forest.hpp"
#include "cybersick/keyvalue.hpp"
#include "cybersick/motion.hpp"
#include "cybersick/rng.hpp"

namespace cybersick {

/// fps = base_fps * (1 + ffr_gain * ffr) * (fov_max / fov)^fov_exponent + jitter.
struct FramerateModel {
  double base_fps = 60.0;
  double ffr_gain = 0.05;
  double fov_exponent = 1.0;
  double jitter_std = 1.5;

  void validate() const;
  double expected(const ComfortParams& params, double fov_max) const;
  /// Expected value plus Gaussian jitter, floored at 1 fps.
  double sample(const ComfortParams& params, double fov_max, Rng& rng) const;
};

/// Synthetic latent sickness: ds/dt = gain * stimulus - decay * s, clamped to
/// [0, 100]. Stimulus = |omega| * (fov / fov_max) * max(1, F / fps). This is a
/// test harness for the loop, not a model of human physiology.
struct SicknessModel {
  double gain = 2.0;
  double decay = 0.05;

  void validate() const;
  static double stimulus(double angular_speed, double fov, double fov_max, double fps,
                         double fps_threshold);
  /// Exact update over `dt` for a stimulus held constant across the step.
  double step(double s, double stimulus, double dt) const;
};

struct Scenario {
  MotionProfile profile;
  ControllerConfig controller;
  FramerateModel framerate;
  SicknessModel sickness;
  double window_seconds = kDefaultWindowSeconds;
  double fps_window = 1.0;
  bool controller_enabled = true;
  std::uint64_t seed = 1;
  std::string model_path = "oracle";  ///< path to a .cfmodel, or "oracle"

  void validate() const;
  /// Keys: profile, angular_amplitude, positional_amplitude, frequency, noise,
  /// duration, rate, seed, model, controller, window, fps_window, base_fps,
  /// ffr_gain, fov_exponent, jitter_std, sickness_gain, sickness_decay, plus
  /// every controller key. Unknown keys are rejected.
  static Scenario from(const KeyValueConfig& kv);
};

struct SessionRow {
  DecisionRecord record;  ///< score is the value the controller saw
  double latent = 0.0;    ///< synthetic latent sickness at the evaluation
  friend bool operator==(const SessionRow&, const SessionRow&) = default;
};

struct SessionLog {
  std::vector<SessionRow> rows;
};

struct SessionSummary {
  std::size_t rows = 0;
  double duration = 0.0;
  double mean_latent = 0.0;
  double max_latent = 0.0;
  double final_latent = 0.0;
  double min_fps = 0.0;
  double mean_fps = 0.0;
  std::size_t fps_violations = 0;    ///< rows with fps below F
  std::size_t score_violations = 0;  ///< rows with latent above S
  std::size_t adjustments = 0;       ///< IncreaseFfr, ReduceFov or Relax rows
  std::size_t fov_restricted_rows = 0;
  double mean_fov_restriction = 0.0;  ///< degrees below fov_max, averaged over rows
};

/// Closed-loop session. Every eval_period the latest window is featurized and
/// scored by `model` (or, when `model` is null, the latent sickness itself is
/// used as the score), then the controller steps if enabled. New comfort
/// parameters drive the framerate and sickness models from the next tick on.
SessionLog simulate_session(const Scenario& scenario, const ForestModel* model);

/// simulate_session with the latent sickness as the score.
SessionLog oracle_session(const Scenario& scenario);

SessionSummary summarize(const SessionLog& log, const ControllerConfig& config = {});

struct SessionComparison {
  SessionSummary baseline;
  SessionSummary adaptive;
};

/// Throws ValidationError unless both logs have the same tick count and times.
SessionComparison compare_sessions(const SessionLog& baseline, const SessionLog& adaptive,
                                   const ControllerConfig& config = {});

/// Fixed-key `key=value` report.
std::string format_summary(const SessionSummary& s, const std::string& prefix = "");
std::string format_comparison(const SessionComparison& c);

/// `t,score,fps,ffr,fov,decision,reason,latent_s`: the controller log columns
/// followed by the latent sickness.
void write_session_csv(std::ostream& out, const SessionLog& log);
SessionLog read_session_csv(std::istream& in);

}  // namespace cybersick
