#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cybersick/kinematics.hpp"
#include "cybersick/telemetry.hpp"

namespace cybersick {

struct LabeledWindow {
  std::string participant_id;
  FeatureVector features{};
  double target = 0.0;  ///< cybersickness score, 0-100

  friend bool operator==(const LabeledWindow&, const LabeledWindow&) = default;
};

using Dataset = std::vector<LabeledWindow>;

/// Per-feature z-scoring parameters. Features whose spread is numerically
/// zero are flagged and passed through unchanged.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> passthrough;

  static Scaler identity(std::size_t n_features);
  std::size_t size() const { return mean.size(); }
  std::vector<double> apply(std::span<const double> x) const;
  void apply_in_place(std::span<double> x) const;

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

struct AlignConfig {
  double window_seconds = kDefaultWindowSeconds;
  double stride_seconds = 1.0;
  double rate = kDefaultRateHz;
};

struct AlignResult {
  Dataset windows;
  std::vector<std::string> warnings;
};

/// Number of windows a capture of `duration` seconds yields.
std::size_t window_count(double duration, const AlignConfig& config);

/// Cuts every capture into overlapping windows, featurizes them and labels
/// each with its participant's VRSQ total. Output is ordered by participant
/// id, then window start. Throws ValidationError listing participants that
/// have no score.
AlignResult align(const CaptureSet& captures, const std::map<std::string, double>& scores,
                  const AlignConfig& config = {});

struct Standardized {
  Dataset data;
  Scaler scaler;
};

/// Population mean / std per feature over the given set.
Scaler fit_scaler(const Dataset& data);
Standardized standardize(const Dataset& data);
Dataset apply_scaler(const Dataset& data, const Scaler& scaler);

struct Split {
  Dataset train;
  Dataset test;
};

/// Deterministic train/test split. With `group_by_participant` whole
/// participants are held out. Both halves keep the input order.
Split split(const Dataset& data, double test_fraction, std::uint64_t seed,
            bool group_by_participant);

struct SynthConfig {
  std::size_t participants = 20;
  double duration = 60.0;  ///< seconds per capture
  double rate = kDefaultRateHz;
  double intensity_min = 0.0;
  double intensity_max = 1.0;
  double max_angular = 2.5;     ///< rad/s at intensity 1
  double max_positional = 0.2;  ///< m at intensity 1
  double frequency_min = 0.2;
  double frequency_max = 0.45;
  double motion_noise = 0.2;
  double logit_gain = 6.0;
  double logit_offset = -3.0;
  double label_noise = 0.15;  ///< std of noise added in logit space

  void validate() const;
};

struct SynthData {
  CaptureSet captures;
  std::map<std::string, double> scores;     ///< planted VRSQ-scale totals
  std::map<std::string, double> intensity;  ///< per-participant lambda
};

/// Head-motion captures with per-participant intensity lambda, labelled
/// target = clamp(100 * sigmoid(gain * lambda + offset + noise), 0, 100).
SynthData synth_dataset(const SynthConfig& config, std::uint64_t seed);

std::vector<std::string> dataset_header();
/// `participant_id,<feature names>,target`.
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in);

}  // namespace cybersick
