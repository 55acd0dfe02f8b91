#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "renewalci/errors.hpp"
#include "renewalci/observation.hpp"

namespace renewalci {

/// Shortest decimal representation that round-trips the double exactly.
/// '.' decimal point, no grouping; used for every numeric CSV/JSON field
/// so artifacts are byte-stable.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw invalid_input("malformed number: '" + std::string(text) + "'");
  return value;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

/// Columns n,value; the delta column is emitted only in oracle mode.
/// LF line endings.
inline void write_observation_csv(std::ostream& os, const ObservationRun& run,
                                  bool oracle_mode) {
  os << (oracle_mode ? "n,delta,value\n" : "n,value\n");
  for (std::size_t i = 0; i < run.values.size(); ++i) {
    os << (i + 1);
    if (oracle_mode) os << ',' << int(run.delta_seq[i]);
    os << ',' << format_double(run.values[i]) << '\n';
  }
}

/// Observation values read back from CSV. Only the value column is
/// consumed; a delta column, if present, is never surfaced to callers.
struct ObservationCsv {
  std::int64_t rows = 0;
  double mean = 0.0;
  std::vector<double> values;
};

inline ObservationCsv read_observation_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw invalid_input("empty observation CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  std::size_t value_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == "value") value_col = i;
  if (value_col == header.size())
    throw invalid_input("observation CSV has no 'value' column");

  ObservationCsv out;
  double sum = 0.0;
  std::int64_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw invalid_input("observation CSV row " + std::to_string(line_no) +
                          " has " + std::to_string(fields.size()) +
                          " fields, expected " + std::to_string(header.size()));
    const double v = parse_double(fields[value_col]);
    out.values.push_back(v);
    sum += v;
  }
  if (out.values.empty()) throw invalid_input("observation CSV has no rows");
  out.rows = std::int64_t(out.values.size());
  out.mean = sum / double(out.rows);
  return out;
}

}  // namespace renewalci
