#include "cybersick/vrsq.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <vector>

#include "cybersick/csv.hpp"
#include "cybersick/error.hpp"

namespace cybersick {

VrsqScore score(const VrsqResponse& response) {
  int oculomotor = 0;
  int disorientation = 0;
  for (std::size_t i = 0; i < response.items.size(); ++i) {
    const int v = response.items[i];
    if (v < 0 || v > 3) {
      throw ValidationError("VRSQ item '" + std::string(kVrsqItemNames[i]) + "' (item " +
                            std::to_string(i + 1) + ") out of range [0,3]: " + std::to_string(v));
    }
    (i < 4 ? oculomotor : disorientation) += v;
  }
  VrsqScore s;
  s.oculomotor = 100.0 * oculomotor / 12.0;
  s.disorientation = 100.0 * disorientation / 15.0;
  s.total = (s.oculomotor + s.disorientation) / 2.0;
  return s;
}

namespace {

std::vector<std::string> vrsq_header() {
  std::vector<std::string> h{"participant_id"};
  for (auto name : kVrsqItemNames) h.emplace_back(name);
  return h;
}

}  // namespace

std::map<std::string, VrsqResponse> read_vrsq_csv(std::istream& in) {
  const csv::Table table = csv::read(in);
  const auto expected = vrsq_header();
  if (table.header.size() < expected.size() ||
      !std::equal(expected.begin(), expected.end(), table.header.begin())) {
    throw ValidationError("VRSQ CSV header must start with participant_id and the 9 item names");
  }
  std::map<std::string, VrsqResponse> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    VrsqResponse resp;
    for (std::size_t i = 0; i < 9; ++i) {
      resp.items[i] = static_cast<int>(csv::parse_int(row[i + 1], kVrsqItemNames[i]));
    }
    score(resp);  // validates ranges
    if (!out.emplace(row[0], resp).second) {
      throw ValidationError("duplicate VRSQ response for participant '" + row[0] + "'");
    }
  }
  return out;
}

void write_vrsq_csv(std::ostream& out, const std::map<std::string, VrsqResponse>& responses) {
  csv::Writer w(out);
  w.row(vrsq_header());
  for (const auto& [id, resp] : responses) {
    std::vector<std::string> row{id};
    for (int v : resp.items) row.push_back(std::to_string(v));
    w.row(row);
  }
}

void write_scored_vrsq_csv(std::ostream& out,
                           const std::map<std::string, VrsqResponse>& responses) {
  csv::Writer w(out);
  auto header = vrsq_header();
  header.insert(header.end(), {"oculomotor", "disorientation", "total"});
  w.row(header);
  for (const auto& [id, resp] : responses) {
    const VrsqScore s = score(resp);
    std::vector<std::string> row{id};
    for (int v : resp.items) row.push_back(std::to_string(v));
    row.push_back(csv::format_fixed(s.oculomotor, 2));
    row.push_back(csv::format_fixed(s.disorientation, 2));
    row.push_back(csv::format_fixed(s.total, 2));
    w.row(row);
  }
}

std::map<std::string, double> read_score_csv(std::istream& in) {
  const csv::Table table = csv::read(in);
  if (table.header != std::vector<std::string>{"participant_id", "vrsq_total"}) {
    throw ValidationError("score CSV header must be participant_id,vrsq_total");
  }
  std::map<std::string, double> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const double v = csv::parse_double(table.rows[r][1], "vrsq_total");
    if (!(v >= 0.0 && v <= 100.0)) {
      throw ValidationError("score CSV line " + std::to_string(table.lines[r]) +
                            ": total outside [0,100]");
    }
    if (!out.emplace(table.rows[r][0], v).second) {
      throw ValidationError("duplicate score for participant '" + table.rows[r][0] + "'");
    }
  }
  return out;
}

void write_score_csv(std::ostream& out, const std::map<std::string, double>& totals) {
  csv::Writer w(out);
  w.row({"participant_id", "vrsq_total"});
  for (const auto& [id, v] : totals) w.row({id, csv::format_double(v)});
}

}  // namespace cybersick
