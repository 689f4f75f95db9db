#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cybersick/keyvalue.hpp"

namespace cybersick {

struct ControllerConfig {
  double score_threshold = 30.0;  ///< VRSQ scale
  double fps_threshold = 65.0;
  int ffr_max = 4;
  double fov_max = 110.0;  ///< degrees
  double fov_min = 70.0;
  double fov_step = 5.0;
  double eval_period = 1.0;  ///< seconds
  double hysteresis = 5.0;   ///< score points below the threshold required to relax
  double relax_dwell = 5.0;  ///< seconds the low score must persist

  void validate() const;
  /// Reads the keys above (same names) from `kv`, keeping defaults for absent ones.
  static ControllerConfig from(const KeyValueConfig& kv);
  /// `key = value` lines for every field.
  std::string to_text() const;
};

struct ComfortParams {
  int ffr_level = 0;
  double fov_deg = 110.0;

  friend bool operator==(const ComfortParams&, const ComfortParams&) = default;
};

ComfortParams default_params(const ControllerConfig& config);

enum class DecisionKind { IncreaseFfr, ReduceFov, Hold, Relax, AtLimits };

std::string to_string(DecisionKind kind);
DecisionKind decision_kind_from_string(const std::string& name);

struct Decision {
  DecisionKind kind = DecisionKind::Hold;
  std::string reason;
  double score = 0.0;
  double fps = 0.0;
};

/// The adjustment table:
///   score > S, fps < F, ffr < max                  -> IncreaseFfr
///   score > S, fps >= F, fov > min                 -> ReduceFov
///   score > S, fps < F, ffr = max, fov > min       -> ReduceFov (ffr saturated)
///   score > S, ffr = max, fov = min                -> AtLimits
///   score > S, fps >= F, fov = min, ffr < max      -> IncreaseFfr (fov exhausted)
///   score <= S - h for >= relax_dwell, not default -> Relax
///   otherwise                                      -> Hold
/// `low_score_seconds` is how long the score has stayed at or below S - h,
/// including the current evaluation.
Decision decide(double score, double fps, const ComfortParams& params,
                const ControllerConfig& config, double low_score_seconds);

struct DecisionRecord {
  double t = 0.0;
  double score = 0.0;
  double fps = 0.0;
  int ffr = 0;       ///< after the step
  double fov = 0.0;  ///< after the step
  DecisionKind decision = DecisionKind::Hold;
  std::string reason;

  friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

/// Owns comfort parameters, the sustained-low-score clock and the decision
/// history. One step per evaluation period.
class Controller {
 public:
  explicit Controller(ControllerConfig config = {});
  Controller(ControllerConfig config, ComfortParams initial);

  /// Evaluates at time `t` (defaults to tick_count * eval_period).
  const DecisionRecord& step(double score, double fps);
  const DecisionRecord& step(double t, double score, double fps);
  /// Appends a Hold record without deciding; used when the loop is disabled.
  const DecisionRecord& record_passive(double t, double score, double fps,
                                       const std::string& reason);

  const ComfortParams& params() const { return params_; }
  const ControllerConfig& config() const { return config_; }
  const std::vector<DecisionRecord>& history() const { return history_; }
  double low_score_seconds() const { return low_seconds_; }

 private:
  void apply(DecisionKind kind);

  ControllerConfig config_;
  ComfortParams params_;
  double low_seconds_ = 0.0;
  std::vector<DecisionRecord> history_;
};

/// `t,score,fps,ffr,fov,decision,reason`.
std::vector<std::string> session_log_header();
std::vector<std::string> session_log_fields(const DecisionRecord& r);
DecisionRecord parse_session_log_fields(const std::vector<std::string>& fields);
void write_session_log(std::ostream& out, const std::vector<DecisionRecord>& records);
std::vector<DecisionRecord> read_session_log(std::istream& in);

}  // namespace cybersick
