#include "cybersick/controller.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "cybersick/csv.hpp"
#include "cybersick/error.hpp"

namespace cybersick {

namespace {

// Slack when comparing accumulated seconds against the dwell time.
constexpr double kClockEps = 1e-9;

}  // namespace

void ControllerConfig::validate() const {
  const bool finite = std::isfinite(score_threshold) && std::isfinite(fps_threshold) &&
                      std::isfinite(fov_max) && std::isfinite(fov_min) &&
                      std::isfinite(fov_step) && std::isfinite(eval_period) &&
                      std::isfinite(hysteresis) && std::isfinite(relax_dwell);
  if (!finite) throw ParameterError("controller config values must be finite");
  if (!(fov_min < fov_max)) throw ParameterError("controller config: fov_min must be < fov_max");
  if (!(fov_min > 0.0)) throw ParameterError("controller config: fov_min must be positive");
  if (!(fov_step > 0.0) || !(eval_period > 0.0)) {
    throw ParameterError("controller config: fov_step and eval_period must be positive");
  }
  if (ffr_max < 0) throw ParameterError("controller config: ffr_max must be nonnegative");
  if (hysteresis < 0.0 || relax_dwell < 0.0) {
    throw ParameterError("controller config: hysteresis and relax_dwell must be nonnegative");
  }
}

ControllerConfig ControllerConfig::from(const KeyValueConfig& kv) {
  ControllerConfig c;
  c.score_threshold = kv.get_double("score_threshold", c.score_threshold);
  c.fps_threshold = kv.get_double("fps_threshold", c.fps_threshold);
  c.ffr_max = static_cast<int>(kv.get_int("ffr_max", c.ffr_max));
  c.fov_max = kv.get_double("fov_max", c.fov_max);
  c.fov_min = kv.get_double("fov_min", c.fov_min);
  c.fov_step = kv.get_double("fov_step", c.fov_step);
  c.eval_period = kv.get_double("eval_period", c.eval_period);
  c.hysteresis = kv.get_double("hysteresis", c.hysteresis);
  c.relax_dwell = kv.get_double("relax_dwell", c.relax_dwell);
  c.validate();
  return c;
}

std::string ControllerConfig::to_text() const {
  std::ostringstream out;
  out << "score_threshold = " << csv::format_double(score_threshold) << '\n'
      << "fps_threshold = " << csv::format_double(fps_threshold) << '\n'
      << "ffr_max = " << ffr_max << '\n'
      << "fov_max = " << csv::format_double(fov_max) << '\n'
      << "fov_min = " << csv::format_double(fov_min) << '\n'
      << "fov_step = " << csv::format_double(fov_step) << '\n'
      << "eval_period = " << csv::format_double(eval_period) << '\n'
      << "hysteresis = " << csv::format_double(hysteresis) << '\n'
      << "relax_dwell = " << csv::format_double(relax_dwell) << '\n';
  return out.str();
}

ComfortParams default_params(const ControllerConfig& config) { return {0, config.fov_max}; }

std::string to_string(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::IncreaseFfr: return "IncreaseFfr";
    case DecisionKind::ReduceFov: return "ReduceFov";
    case DecisionKind::Hold: return "Hold";
    case DecisionKind::Relax: return "Relax";
    case DecisionKind::AtLimits: return "AtLimits";
  }
  return "Unknown";
}

DecisionKind decision_kind_from_string(const std::string& name) {
  for (auto k : {DecisionKind::IncreaseFfr, DecisionKind::ReduceFov, DecisionKind::Hold,
                 DecisionKind::Relax, DecisionKind::AtLimits}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown decision '" + name + "'");
}

Decision decide(double score, double fps, const ComfortParams& params,
                const ControllerConfig& config, double low_score_seconds) {
  Decision d{DecisionKind::Hold, "", score, fps};
  const bool ffr_room = params.ffr_level < config.ffr_max;
  const bool fov_room = params.fov_deg > config.fov_min;
  const bool fps_low = fps < config.fps_threshold;

  if (score > config.score_threshold) {
    if (fps_low && ffr_room) {
      d.kind = DecisionKind::IncreaseFfr;
      d.reason = "score high; framerate low";
    } else if (!fps_low && fov_room) {
      d.kind = DecisionKind::ReduceFov;
      d.reason = "score high; framerate ok";
    } else if (fps_low && fov_room) {
      d.kind = DecisionKind::ReduceFov;
      d.reason = "score high; framerate low; ffr saturated";
    } else if (!ffr_room && !fov_room) {
      d.kind = DecisionKind::AtLimits;
      d.reason = "score high; ffr and fov at limits";
    } else {
      d.kind = DecisionKind::IncreaseFfr;
      d.reason = "score high; framerate ok; fov at minimum";
    }
    return d;
  }

  const bool at_defaults = params == default_params(config);
  if (score <= config.score_threshold - config.hysteresis &&
      low_score_seconds + kClockEps >= config.relax_dwell && !at_defaults) {
    d.kind = DecisionKind::Relax;
    d.reason = params.fov_deg < config.fov_max ? "score low; restoring fov" : "score low; easing ffr";
    return d;
  }
  if (at_defaults) {
    d.reason = "score below threshold; nothing to relax";
  } else if (score > config.score_threshold - config.hysteresis) {
    d.reason = "score in hysteresis band";
  } else {
    d.reason = "score low; dwell not met";
  }
  return d;
}

Controller::Controller(ControllerConfig config)
    : Controller(config, default_params(config)) {}

Controller::Controller(ControllerConfig config, ComfortParams initial)
    : config_(config), params_(initial) {
  config_.validate();
  if (params_.ffr_level < 0 || params_.ffr_level > config_.ffr_max ||
      params_.fov_deg < config_.fov_min || params_.fov_deg > config_.fov_max) {
    throw ParameterError("initial comfort parameters outside configured bounds");
  }
}

const DecisionRecord& Controller::step(double score, double fps) {
  return step(static_cast<double>(history_.size()) * config_.eval_period, score, fps);
}

const DecisionRecord& Controller::step(double t, double score, double fps) {
  if (!std::isfinite(score) || !std::isfinite(fps)) {
    throw ParameterError("controller inputs must be finite");
  }
  if (score <= config_.score_threshold - config_.hysteresis) {
    low_seconds_ += config_.eval_period;
  } else {
    low_seconds_ = 0.0;
  }
  const Decision d = decide(score, fps, params_, config_, low_seconds_);
  apply(d.kind);
  history_.push_back({t, score, fps, params_.ffr_level, params_.fov_deg, d.kind, d.reason});
  return history_.back();
}

const DecisionRecord& Controller::record_passive(double t, double score, double fps,
                                                 const std::string& reason) {
  history_.push_back({t, score, fps, params_.ffr_level, params_.fov_deg, DecisionKind::Hold,
                      reason});
  return history_.back();
}

void Controller::apply(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::IncreaseFfr:
      params_.ffr_level = std::min(params_.ffr_level + 1, config_.ffr_max);
      break;
    case DecisionKind::ReduceFov:
      params_.fov_deg = std::max(config_.fov_min, params_.fov_deg - config_.fov_step);
      break;
    case DecisionKind::Relax:
      // Reverse of escalation: field of view first, then foveation.
      if (params_.fov_deg < config_.fov_max) {
        params_.fov_deg = std::min(config_.fov_max, params_.fov_deg + config_.fov_step);
      } else if (params_.ffr_level > 0) {
        --params_.ffr_level;
      }
      break;
    case DecisionKind::Hold:
    case DecisionKind::AtLimits:
      break;
  }
}

std::vector<std::string> session_log_header() {
  return {"t", "score", "fps", "ffr", "fov", "decision", "reason"};
}

std::vector<std::string> session_log_fields(const DecisionRecord& r) {
  return {csv::format_double(r.t),   csv::format_double(r.score), csv::format_double(r.fps),
          std::to_string(r.ffr),     csv::format_double(r.fov),   to_string(r.decision),
          r.reason};
}

DecisionRecord parse_session_log_fields(const std::vector<std::string>& f) {
  if (f.size() < 7) throw ValidationError("session log row needs 7 fields");
  DecisionRecord r;
  r.t = csv::parse_double(f[0], "t");
  r.score = csv::parse_double(f[1], "score");
  r.fps = csv::parse_double(f[2], "fps");
  r.ffr = static_cast<int>(csv::parse_int(f[3], "ffr"));
  r.fov = csv::parse_double(f[4], "fov");
  r.decision = decision_kind_from_string(f[5]);
  r.reason = f[6];
  return r;
}

void write_session_log(std::ostream& out, const std::vector<DecisionRecord>& records) {
  csv::Writer w(out);
  w.row(session_log_header());
  for (const auto& r : records) w.row(session_log_fields(r));
}

std::vector<DecisionRecord> read_session_log(std::istream& in) {
  const csv::Table table = csv::read(in);
  const auto expected = session_log_header();
  if (table.header.size() < expected.size() ||
      !std::equal(expected.begin(), expected.end(), table.header.begin())) {
    throw ValidationError("session log header must start with t,score,fps,ffr,fov,decision,reason");
  }
  std::vector<DecisionRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) out.push_back(parse_session_log_fields(row));
  return out;
}

}  // namespace cybersick
