#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

namespace cybersick {

/// Nine VRSQ symptom items, each 0 (none) to 3 (severe). Items 0-3 form the
/// oculomotor component and items 4-8 the disorientation component.
struct VrsqResponse {
  std::array<int, 9> items{};
};

inline constexpr std::array<std::string_view, 9> kVrsqItemNames{
    "general_discomfort", "fatigue",        "eyestrain",
    "difficulty_focusing", "headache",      "fullness_of_head",
    "blurred_vision",     "dizzy_eyes_closed", "vertigo"};

struct VrsqScore {
  double oculomotor = 0.0;      ///< 0-100
  double disorientation = 0.0;  ///< 0-100
  double total = 0.0;           ///< mean of the two components
};

/// oculomotor = 100 * sum(items 0-3) / 12, disorientation = 100 * sum(items
/// 4-8) / 15, total = their mean. Throws ValidationError naming the first
/// out-of-range item.
VrsqScore score(const VrsqResponse& response);

/// `participant_id,<9 item names>`.
std::map<std::string, VrsqResponse> read_vrsq_csv(std::istream& in);
void write_vrsq_csv(std::ostream& out, const std::map<std::string, VrsqResponse>& responses);
/// The input columns followed by `oculomotor,disorientation,total`, 2 decimals.
void write_scored_vrsq_csv(std::ostream& out,
                           const std::map<std::string, VrsqResponse>& responses);

/// `participant_id,vrsq_total`: pre-scored totals, e.g. from synthesis.
std::map<std::string, double> read_score_csv(std::istream& in);
void write_score_csv(std::ostream& out, const std::map<std::string, double>& totals);

}  // namespace cybersick
