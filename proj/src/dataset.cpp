#include "cybersick/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <optional>
#include <set>

#include "cybersick/csv.hpp"
#include "cybersick/error.hpp"
#include "cybersick/motion.hpp"
#include "cybersick/parallel.hpp"
#include "cybersick/rng.hpp"

namespace cybersick {

namespace {

constexpr double kTimeEps = 1e-9;

}  // namespace

Scaler Scaler::identity(std::size_t n_features) {
  return {std::vector<double>(n_features, 0.0), std::vector<double>(n_features, 1.0),
          std::vector<bool>(n_features, false)};
}

void Scaler::apply_in_place(std::span<double> x) const {
  if (x.size() != mean.size()) {
    throw ParameterError("scaler expects " + std::to_string(mean.size()) + " features, got " +
                         std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!passthrough[i]) x[i] = (x[i] - mean[i]) / std[i];
  }
}

std::vector<double> Scaler::apply(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  apply_in_place(out);
  return out;
}

std::size_t window_count(double duration, const AlignConfig& c) {
  if (duration + kTimeEps < c.window_seconds) return 0;
  return static_cast<std::size_t>(
             std::floor((duration - c.window_seconds) / c.stride_seconds + kTimeEps)) +
         1;
}

AlignResult align(const CaptureSet& captures, const std::map<std::string, double>& scores,
                  const AlignConfig& config) {
  if (!(config.window_seconds > 0.0) || !(config.stride_seconds > 0.0) || !(config.rate > 0.0)) {
    throw ParameterError("window, stride and rate must be positive");
  }
  std::string missing;
  for (const auto& [id, capture] : captures) {
    if (!scores.count(id)) missing += (missing.empty() ? "" : ", ") + id;
  }
  if (!missing.empty()) throw ValidationError("no VRSQ score for participant(s): " + missing);

  struct Job {
    const std::string* id;
    const Capture* capture;
    std::size_t first;  // offset into the output
    std::size_t count;
  };
  std::vector<Job> jobs;
  AlignResult result;
  std::size_t total = 0;
  for (const auto& [id, capture] : captures) {
    const double duration = capture.empty() ? 0.0 : capture.back().t - capture.front().t;
    const std::size_t n = window_count(duration, config);
    if (n == 0) {
      result.warnings.push_back("participant '" + id + "' has " + csv::format_double(duration) +
                                " s of data, shorter than one window; skipped");
      continue;
    }
    jobs.push_back({&id, &capture, total, n});
    total += n;
  }

  std::vector<std::optional<LabeledWindow>> slots(total);
  parallel_for(jobs.size(), [&](std::size_t j) {
    const Job& job = jobs[j];
    const Capture& cap = *job.capture;
    const double label = scores.at(*job.id);
    for (std::size_t w = 0; w < job.count; ++w) {
      const double start = cap.front().t + static_cast<double>(w) * config.stride_seconds;
      const double end = start + config.window_seconds;
      auto lo = std::lower_bound(cap.begin(), cap.end(), start - kTimeEps,
                                 [](const HeadSample& s, double t) { return s.t < t; });
      auto hi = std::upper_bound(cap.begin(), cap.end(), end + kTimeEps,
                                 [](double t, const HeadSample& s) { return t < s.t; });
      TelemetryWindow window;
      window.seconds = config.window_seconds;
      window.samples.assign(lo, hi);
      if (window.samples.size() < 4 || window.span() < 0.9 * config.window_seconds) continue;
      slots[job.first + w] = LabeledWindow{*job.id, featurize(window, config.rate), label};
    }
  });

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    std::size_t dropped = 0;
    for (std::size_t w = 0; w < jobs[j].count; ++w) {
      auto& slot = slots[jobs[j].first + w];
      if (slot) {
        result.windows.push_back(std::move(*slot));
      } else {
        ++dropped;
      }
    }
    if (dropped) {
      result.warnings.push_back("participant '" + *jobs[j].id + "': " + std::to_string(dropped) +
                                " window(s) with gaps skipped");
    }
  }
  return result;
}

Scaler fit_scaler(const Dataset& data) {
  if (data.empty()) throw ValidationError("cannot standardize an empty dataset");
  Scaler s = Scaler::identity(kFeatureCount);
  const auto n = static_cast<double>(data.size());
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    double sum = 0.0;
    for (const auto& row : data) sum += row.features[f];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& row : data) ss += (row.features[f] - mean) * (row.features[f] - mean);
    const double sd = std::sqrt(ss / n);
    s.mean[f] = mean;
    s.std[f] = sd;
    s.passthrough[f] = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
  }
  return s;
}

Dataset apply_scaler(const Dataset& data, const Scaler& scaler) {
  Dataset out = data;
  for (auto& row : out) scaler.apply_in_place(row.features);
  return out;
}

Standardized standardize(const Dataset& data) {
  Scaler scaler = fit_scaler(data);
  return {apply_scaler(data, scaler), std::move(scaler)};
}

Split split(const Dataset& data, double test_fraction, std::uint64_t seed,
            bool group_by_participant) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ParameterError("test fraction must lie strictly between 0 and 1");
  }
  Rng rng(seed);
  std::vector<bool> in_test(data.size(), false);
  if (group_by_participant) {
    std::set<std::string> unique;
    for (const auto& row : data) unique.insert(row.participant_id);
    if (unique.size() < 2) throw ValidationError("grouped split needs at least 2 participants");
    std::vector<std::string> ids(unique.begin(), unique.end());
    rng.shuffle(ids);
    const auto g = static_cast<double>(ids.size());
    const auto n_test = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(g * test_fraction)), 1, ids.size() - 1);
    const std::set<std::string> held(ids.begin(), ids.begin() + static_cast<long>(n_test));
    for (std::size_t i = 0; i < data.size(); ++i) in_test[i] = held.count(data[i].participant_id);
  } else {
    if (data.size() < 2) throw ValidationError("split needs at least 2 rows");
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    const auto n = static_cast<double>(data.size());
    const auto n_test = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(n * test_fraction)), 1, data.size() - 1);
    for (std::size_t i = 0; i < n_test; ++i) in_test[idx[i]] = true;
  }
  Split out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (in_test[i] ? out.test : out.train).push_back(data[i]);
  }
  return out;
}

void SynthConfig::validate() const {
  if (participants == 0) throw ParameterError("synth: participants must be positive");
  if (!(duration > 0.0) || !(rate > 0.0)) {
    throw ParameterError("synth: duration and rate must be positive");
  }
  if (!(intensity_min >= 0.0) || !(intensity_max >= intensity_min)) {
    throw ParameterError("synth: need 0 <= intensity_min <= intensity_max");
  }
  if (!(frequency_min > 0.0) || !(frequency_max >= frequency_min)) {
    throw ParameterError("synth: need 0 < frequency_min <= frequency_max");
  }
  if (!(max_angular >= 0.0) || !(max_positional >= 0.0) || !(motion_noise >= 0.0) ||
      !(label_noise >= 0.0)) {
    throw ParameterError("synth: amplitudes and noise levels must be nonnegative");
  }
}

SynthData synth_dataset(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t width = std::to_string(config.participants).size() < 2
                                ? 2
                                : std::to_string(config.participants).size();
  SynthData out;
  Rng rng(seed);
  for (std::size_t i = 0; i < config.participants; ++i) {
    std::string id = std::to_string(i + 1);
    id = "P" + std::string(width - id.size(), '0') + id;
    const double lambda = rng.uniform(config.intensity_min, config.intensity_max);
    MotionProfile profile;
    profile.kind = MotionKind::Stress;
    profile.angular_amplitude = lambda * config.max_angular;
    profile.positional_amplitude = lambda * config.max_positional;
    profile.frequency = rng.uniform(config.frequency_min, config.frequency_max);
    profile.noise = config.motion_noise;
    profile.duration = config.duration;
    profile.rate = config.rate;
    const std::uint64_t motion_seed = rng.next();
    const double logit =
        config.logit_gain * lambda + config.logit_offset + config.label_noise * rng.normal();
    const double target = std::clamp(100.0 / (1.0 + std::exp(-logit)), 0.0, 100.0);
    out.captures.emplace(id, generate_motion(profile, motion_seed));
    out.scores.emplace(id, target);
    out.intensity.emplace(id, lambda);
  }
  return out;
}

std::vector<std::string> dataset_header() {
  std::vector<std::string> h{"participant_id"};
  for (auto name : kFeatureNames) h.emplace_back(name);
  h.emplace_back("target");
  return h;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  csv::Writer w(out);
  w.row(dataset_header());
  std::vector<std::string> row;
  for (const auto& d : data) {
    row.clear();
    row.push_back(d.participant_id);
    for (double v : d.features) row.push_back(csv::format_double(v));
    row.push_back(csv::format_double(d.target));
    w.row(row);
  }
}

Dataset read_dataset_csv(std::istream& in) {
  const csv::Table table = csv::read(in);
  if (table.header != dataset_header()) {
    throw ValidationError("dataset CSV header does not match feature set " +
                          std::string(kFeatureSetVersion));
  }
  Dataset out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    LabeledWindow w;
    w.participant_id = row[0];
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      w.features[f] = csv::parse_double(row[f + 1], kFeatureNames[f]);
      if (!std::isfinite(w.features[f])) {
        throw ValidationError("dataset CSV line " + std::to_string(table.lines[r]) +
                              ": non-finite feature");
      }
    }
    w.target = csv::parse_double(row[kFeatureCount + 1], "target");
    if (!(w.target >= 0.0 && w.target <= 100.0)) {
      throw ValidationError("dataset CSV line " + std::to_string(table.lines[r]) +
                            ": target outside [0,100]");
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace cybersick
