#include "cybersick/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "cybersick/csv.hpp"
#include "cybersick/error.hpp"
#include "cybersick/kinematics.hpp"
#include "cybersick/telemetry.hpp"

namespace cybersick {

void FramerateModel::validate() const {
  if (!(base_fps > 0.0) || !(ffr_gain > 0.0) || !(fov_exponent > 0.0) || !(jitter_std >= 0.0)) {
    throw ParameterError("framerate model: base_fps, ffr_gain, fov_exponent must be positive");
  }
}

double FramerateModel::expected(const ComfortParams& p, double fov_max) const {
  return base_fps * (1.0 + ffr_gain * p.ffr_level) * std::pow(fov_max / p.fov_deg, fov_exponent);
}

double FramerateModel::sample(const ComfortParams& p, double fov_max, Rng& rng) const {
  return std::max(1.0, expected(p, fov_max) + jitter_std * rng.normal());
}

void SicknessModel::validate() const {
  if (!(gain >= 0.0) || !(decay > 0.0)) {
    throw ParameterError("sickness model: gain must be nonnegative and decay positive");
  }
}

double SicknessModel::stimulus(double angular_speed, double fov, double fov_max, double fps,
                               double fps_threshold) {
  return angular_speed * (fov / fov_max) * std::max(1.0, fps_threshold / fps);
}

double SicknessModel::step(double s, double stim, double dt) const {
  const double keep = std::exp(-decay * dt);
  const double next = s * keep + (gain * stim / decay) * (1.0 - keep);
  return std::clamp(next, 0.0, 100.0);
}

void Scenario::validate() const {
  profile.validate();
  controller.validate();
  framerate.validate();
  sickness.validate();
  if (!(window_seconds > 0.0) || !(fps_window > 0.0)) {
    throw ParameterError("scenario: window and fps_window must be positive");
  }
}

Scenario Scenario::from(const KeyValueConfig& kv) {
  Scenario s;
  s.profile.kind = motion_kind_from_string(kv.get_string("profile", to_string(s.profile.kind)));
  s.profile.angular_amplitude = kv.get_double("angular_amplitude", s.profile.angular_amplitude);
  s.profile.positional_amplitude =
      kv.get_double("positional_amplitude", s.profile.positional_amplitude);
  s.profile.frequency = kv.get_double("frequency", s.profile.frequency);
  s.profile.noise = kv.get_double("noise", s.profile.noise);
  s.profile.duration = kv.get_double("duration", s.profile.duration);
  s.profile.rate = kv.get_double("rate", s.profile.rate);
  const long long seed = kv.get_int("seed", static_cast<long long>(s.seed));
  if (seed < 0) throw ParameterError("scenario: seed must be nonnegative");
  s.seed = static_cast<std::uint64_t>(seed);
  s.model_path = kv.get_string("model", s.model_path);
  s.controller_enabled = kv.get_bool("controller", s.controller_enabled);
  s.window_seconds = kv.get_double("window", s.window_seconds);
  s.fps_window = kv.get_double("fps_window", s.fps_window);
  s.framerate.base_fps = kv.get_double("base_fps", s.framerate.base_fps);
  s.framerate.ffr_gain = kv.get_double("ffr_gain", s.framerate.ffr_gain);
  s.framerate.fov_exponent = kv.get_double("fov_exponent", s.framerate.fov_exponent);
  s.framerate.jitter_std = kv.get_double("jitter_std", s.framerate.jitter_std);
  s.sickness.gain = kv.get_double("sickness_gain", s.sickness.gain);
  s.sickness.decay = kv.get_double("sickness_decay", s.sickness.decay);
  s.controller = ControllerConfig::from(kv);
  kv.reject_unused();
  s.validate();
  return s;
}

SessionLog simulate_session(const Scenario& sc, const ForestModel* model) {
  sc.validate();
  if (model && model->n_features != kFeatureCount) {
    throw ParameterError("model expects " + std::to_string(model->n_features) +
                         " features; the kinematic feature set has " +
                         std::to_string(kFeatureCount));
  }
  const Capture motion = generate_motion(sc.profile, derive_seed(sc.seed, 1));
  Rng jitter(derive_seed(sc.seed, 2));
  const double rate = sc.profile.rate;
  const double dt = 1.0 / rate;
  const auto ticks_per_eval =
      std::max<long long>(1, std::llround(sc.controller.eval_period * rate));

  TelemetryStream stream(std::max(10.0, sc.window_seconds + 1.0), rate);
  Controller controller(sc.controller);
  SessionLog log;
  double latent = 0.0;

  for (std::size_t k = 0; k < motion.size(); ++k) {
    const HeadSample& sample = motion[k];
    stream.push_head(sample);
    const ComfortParams params = controller.params();
    const double fps = sc.framerate.sample(params, sc.controller.fov_max, jitter);
    stream.push_frame({sample.t, 1000.0 / fps});

    double speed = 0.0;
    if (k > 0) speed = (motion[k - 1].quat.conjugate() * sample.quat).log().norm() / dt;
    const double stim = SicknessModel::stimulus(speed, params.fov_deg, sc.controller.fov_max, fps,
                                                sc.controller.fps_threshold);
    latent = sc.sickness.step(latent, stim, dt);

    if (k == 0 || k % static_cast<std::size_t>(ticks_per_eval) != 0) continue;
    if (sample.t + 1e-9 < sc.window_seconds) continue;

    double score = latent;
    if (model) score = predict(*model, featurize(stream.window(sc.window_seconds), rate));
    const double measured_fps = stream.current_fps(sc.fps_window);
    const DecisionRecord& rec =
        sc.controller_enabled
            ? controller.step(sample.t, score, measured_fps)
            : controller.record_passive(sample.t, score, measured_fps, "controller disabled");
    log.rows.push_back({rec, latent});
  }
  return log;
}

SessionLog oracle_session(const Scenario& scenario) { return simulate_session(scenario, nullptr); }

SessionSummary summarize(const SessionLog& log, const ControllerConfig& config) {
  SessionSummary s;
  s.rows = log.rows.size();
  if (log.rows.empty()) return s;
  s.duration = log.rows.back().record.t - log.rows.front().record.t;
  s.min_fps = std::numeric_limits<double>::infinity();
  double latent_sum = 0.0;
  double fps_sum = 0.0;
  double restriction_sum = 0.0;
  for (const auto& row : log.rows) {
    const auto& r = row.record;
    latent_sum += row.latent;
    s.max_latent = std::max(s.max_latent, row.latent);
    fps_sum += r.fps;
    s.min_fps = std::min(s.min_fps, r.fps);
    if (r.fps < config.fps_threshold) ++s.fps_violations;
    if (row.latent > config.score_threshold) ++s.score_violations;
    if (r.decision == DecisionKind::IncreaseFfr || r.decision == DecisionKind::ReduceFov ||
        r.decision == DecisionKind::Relax) {
      ++s.adjustments;
    }
    if (r.fov < config.fov_max) ++s.fov_restricted_rows;
    restriction_sum += config.fov_max - r.fov;
  }
  const auto n = static_cast<double>(log.rows.size());
  s.mean_latent = latent_sum / n;
  s.final_latent = log.rows.back().latent;
  s.mean_fps = fps_sum / n;
  s.mean_fov_restriction = restriction_sum / n;
  return s;
}

SessionComparison compare_sessions(const SessionLog& baseline, const SessionLog& adaptive,
                                   const ControllerConfig& config) {
  if (baseline.rows.size() != adaptive.rows.size()) {
    throw ValidationError("session logs differ in tick count (" +
                          std::to_string(baseline.rows.size()) + " vs " +
                          std::to_string(adaptive.rows.size()) + ")");
  }
  for (std::size_t i = 0; i < baseline.rows.size(); ++i) {
    if (std::abs(baseline.rows[i].record.t - adaptive.rows[i].record.t) > 1e-6) {
      throw ValidationError("session logs differ in timing at row " + std::to_string(i));
    }
  }
  return {summarize(baseline, config), summarize(adaptive, config)};
}

std::string format_summary(const SessionSummary& s, const std::string& prefix) {
  std::ostringstream out;
  auto num = [](double v) { return csv::format_double(v); };
  out << prefix << "rows=" << s.rows << '\n'
      << prefix << "duration=" << num(s.duration) << '\n'
      << prefix << "mean_latent=" << num(s.mean_latent) << '\n'
      << prefix << "max_latent=" << num(s.max_latent) << '\n'
      << prefix << "final_latent=" << num(s.final_latent) << '\n'
      << prefix << "min_fps=" << num(s.min_fps) << '\n'
      << prefix << "mean_fps=" << num(s.mean_fps) << '\n'
      << prefix << "fps_violations=" << s.fps_violations << '\n'
      << prefix << "score_violations=" << s.score_violations << '\n'
      << prefix << "adjustments=" << s.adjustments << '\n'
      << prefix << "fov_restricted_rows=" << s.fov_restricted_rows << '\n'
      << prefix << "mean_fov_restriction=" << num(s.mean_fov_restriction) << '\n';
  return out.str();
}

std::string format_comparison(const SessionComparison& c) {
  std::ostringstream out;
  auto num = [](double v) { return csv::format_double(v); };
  const auto& b = c.baseline;
  const auto& a = c.adaptive;
  out << "latent_model=synthetic latent sickness\n";
  out << format_summary(b, "baseline_") << format_summary(a, "adaptive_");
  out << "delta_mean_latent=" << num(a.mean_latent - b.mean_latent) << '\n'
      << "delta_max_latent=" << num(a.max_latent - b.max_latent) << '\n'
      << "delta_final_latent=" << num(a.final_latent - b.final_latent) << '\n'
      << "delta_min_fps=" << num(a.min_fps - b.min_fps) << '\n'
      << "delta_mean_fps=" << num(a.mean_fps - b.mean_fps) << '\n'
      << "delta_fps_violations="
      << static_cast<long long>(a.fps_violations) - static_cast<long long>(b.fps_violations)
      << '\n'
      << "delta_score_violations="
      << static_cast<long long>(a.score_violations) - static_cast<long long>(b.score_violations)
      << '\n';
  return out.str();
}

void write_session_csv(std::ostream& out, const SessionLog& log) {
  csv::Writer w(out);
  auto header = session_log_header();
  header.emplace_back("latent_s");
  w.row(header);
  for (const auto& row : log.rows) {
    auto fields = session_log_fields(row.record);
    fields.push_back(csv::format_double(row.latent));
    w.row(fields);
  }
}

SessionLog read_session_csv(std::istream& in) {
  const csv::Table table = csv::read(in);
  auto header = session_log_header();
  header.emplace_back("latent_s");
  if (table.header != header) {
    throw ValidationError("session CSV header must be t,score,fps,ffr,fov,decision,reason,latent_s");
  }
  SessionLog log;
  for (const auto& row : table.rows) {
    log.rows.push_back({parse_session_log_fields(row), csv::parse_double(row[7], "latent_s")});
  }
  return log;
}

}  // namespace cybersick
