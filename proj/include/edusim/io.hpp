#pragma once

// CSV formats:
//   probabilities  from_state_id,outcome,target_selection,probability
//   records        student_id,academic_year,module_code,outcome
//   intakes        year,intake
//   populations    year,state_id,population
//   loads          year,module_code,load

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "edusim/markov.hpp"
#include "edusim/records.hpp"

namespace edusim {

// Shortest decimal text that parses back to the same double.
inline std::string format_number(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

inline std::optional<double> parse_number(std::string_view s) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::optional<long long> parse_integer(std::string_view s) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

struct CsvRow {
  int line = 0;
  std::vector<std::string> fields;
};

// Minimal RFC 4180 reader: quoted fields with "" escapes, no embedded
// newlines. Blank lines are skipped; surrounding spaces are trimmed from
// unquoted fields.
inline std::vector<CsvRow> read_csv(std::istream& in) {
  std::vector<CsvRow> rows;
  std::string text;
  int number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    CsvRow row{number, {}};
    std::string field;
    bool quoted = false, was_quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      if (quoted) {
        if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          field += c;
        }
      } else if (c == '"') {
        quoted = was_quoted = true;
      } else if (c == ',') {
        row.fields.push_back(was_quoted ? field : std::string(trim(field)));
        field.clear();
        was_quoted = false;
      } else {
        field += c;
      }
    }
    row.fields.push_back(was_quoted ? field : std::string(trim(field)));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace io_detail {

inline void expect_header(const std::vector<CsvRow>& rows, const std::vector<std::string>& header,
                          const char* what) {
  if (rows.empty() || rows.front().fields != header) {
    std::string expected;
    for (std::size_t i = 0; i < header.size(); ++i) expected += (i ? "," : "") + header[i];
    throw Error("csv-header", std::string(what) + " CSV must start with header " + expected);
  }
}

inline Error row_error(const char* what, const CsvRow& row, const std::string& detail) {
  return Error("csv-row", std::string(what) + " CSV line " + std::to_string(row.line) + ": " + detail);
}

}  // namespace io_detail

inline ProbabilityAssignment read_assignment_csv(std::istream& in) {
  const auto rows = read_csv(in);
  io_detail::expect_header(rows, {"from_state_id", "outcome", "target_selection", "probability"},
                           "probability");
  ProbabilityAssignment a;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() != 4) throw io_detail::row_error("probability", r, "expected 4 fields");
    auto kind = parse_outcome_kind(r.fields[1]);
    if (!kind) throw io_detail::row_error("probability", r, "unknown outcome " + r.fields[1]);
    auto value = parse_number(r.fields[3]);
    if (!value) throw io_detail::row_error("probability", r, "bad probability " + r.fields[3]);
    if (!a.emplace(OutcomeKey{r.fields[0], *kind, r.fields[2]}, *value).second)
      throw io_detail::row_error("probability", r, "duplicate outcome");
  }
  return a;
}

// Rows follow the graph's canonical edge order.
inline void write_assignment_csv(std::ostream& out, const StateGraph& g,
                                 const ProbabilityAssignment& a) {
  out << "from_state_id,outcome,target_selection,probability\n";
  for (const auto& e : g.edges()) {
    const OutcomeKey k = key_of(g, e);
    auto it = a.find(k);
    out << k.from_state << ',' << to_string(k.outcome) << ',' << k.target_selection << ','
        << format_number(it == a.end() ? 0.0 : it->second) << '\n';
  }
}

inline std::vector<EnrollmentRecord> read_records_csv(std::istream& in) {
  const auto rows = read_csv(in);
  io_detail::expect_header(rows, {"student_id", "academic_year", "module_code", "outcome"},
                           "records");
  std::map<std::pair<std::string, int>, std::size_t> slot;
  std::vector<EnrollmentRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() != 4) throw io_detail::row_error("records", r, "expected 4 fields");
    auto year = parse_integer(r.fields[1]);
    if (!year) throw io_detail::row_error("records", r, "bad academic_year " + r.fields[1]);
    auto outcome = parse_module_outcome(r.fields[3]);
    if (!outcome) throw io_detail::row_error("records", r, "unknown outcome " + r.fields[3]);
    const auto key = std::make_pair(r.fields[0], static_cast<int>(*year));
    auto [it, fresh] = slot.emplace(key, out.size());
    if (fresh) out.push_back({key.first, key.second, {}});
    if (!out[it->second].outcomes.emplace(r.fields[2], *outcome).second)
      throw io_detail::row_error("records", r, "module listed twice for the same year");
  }
  return out;
}

inline void write_records_csv(std::ostream& out, const std::vector<EnrollmentRecord>& records) {
  out << "student_id,academic_year,module_code,outcome\n";
  for (const auto& r : records)
    for (const auto& [code, o] : r.outcomes)
      out << r.student << ',' << r.academic_year << ',' << code << ',' << to_string(o) << '\n';
}

inline CohortSchedule read_intakes_csv(std::istream& in) {
  const auto rows = read_csv(in);
  io_detail::expect_header(rows, {"year", "intake"}, "intake");
  CohortSchedule s;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() != 2) throw io_detail::row_error("intake", r, "expected 2 fields");
    auto year = parse_integer(r.fields[0]);
    auto count = parse_number(r.fields[1]);
    if (!year || !count) throw io_detail::row_error("intake", r, "bad year or intake");
    if (*count < 0) throw io_detail::row_error("intake", r, "negative intake");
    if (!s.intake.emplace(static_cast<int>(*year), *count).second)
      throw io_detail::row_error("intake", r, "year listed twice");
  }
  return s;
}

inline void write_populations_csv(std::ostream& out, const StateGraph& g,
                                  const std::vector<PopulationVector>& vectors) {
  out << "year,state_id,population\n";
  for (const auto& pv : vectors)
    for (std::size_t s = 0; s < g.size(); ++s)
      out << pv.year_index << ',' << g.state_id(s) << ',' << format_number(pv.v[s]) << '\n';
}

inline void write_loads_csv(std::ostream& out, const std::vector<PopulationVector>& vectors,
                            const std::vector<std::map<std::string, double>>& loads) {
  out << "year,module_code,load\n";
  for (std::size_t t = 0; t < vectors.size(); ++t)
    for (const auto& [code, load] : loads[t])
      out << vectors[t].year_index << ',' << code << ',' << format_number(load) << '\n';
}

}  // namespace edusim
