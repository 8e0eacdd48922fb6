#pragma once

// CSV export of derived readings, 6 significant digits, empty cell for a
// faulted channel:
//
//   timestamp,v_mq3,v_mq4,v_mq135,ppm_ethanol,...,ppm_per_kg_ethanol,...,
//   temp_c,rh,q_methane,q_ammonia,q_ethanol,q_temperature,q_humidity,q_total,category

#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "enose/error.hpp"
#include "enose/quality.hpp"
#include "enose/telemetry.hpp"

namespace enose {

inline constexpr int kCsvSignificantDigits = 6;

namespace detail {

inline auto format_g6(double v) -> std::string {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", kCsvSignificantDigits, v);
  return buf;
}

inline auto split_csv_line(const std::string& line) -> std::vector<std::string> {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

struct CsvRow {
  std::int64_t timestamp = 0;
  std::map<std::string, std::optional<double>> values;
  std::string category;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<CsvRow> rows;
};

/// Column layout for a batch whose gas channels are `channels`.
inline auto export_columns(const std::map<Gas, std::string>& channels) -> std::vector<std::string> {
  std::vector<std::string> cols{"timestamp"};
  for (const auto& [gas, id] : channels) cols.push_back("v_" + id);
  for (const auto& [gas, id] : channels) cols.push_back("ppm_" + std::string(to_string(gas)));
  for (const auto& [gas, id] : channels) cols.push_back("ppm_per_kg_" + std::string(to_string(gas)));
  cols.insert(cols.end(), {"temp_c", "rh"});
  for (Factor f : kAllFactors) cols.push_back("q_" + std::string(to_string(f)));
  cols.insert(cols.end(), {"q_total", "category"});
  return cols;
}

inline void write_csv(std::ostream& out, const std::map<Gas, std::string>& channels,
                      const std::vector<DerivedReading>& readings) {
  const auto cols = export_columns(channels);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  auto cell = [](const std::optional<double>& v) { return v ? detail::format_g6(*v) : std::string(); };
  for (const auto& d : readings) {
    out << d.timestamp;
    for (const auto& [gas, id] : channels) {
      auto it = d.gases.find(gas);
      out << ',' << (it != d.gases.end() ? detail::format_g6(it->second.volts) : "");
    }
    for (const auto& [gas, id] : channels) {
      auto it = d.gases.find(gas);
      out << ',' << (it != d.gases.end() ? cell(it->second.ppm) : "");
    }
    for (const auto& [gas, id] : channels) {
      auto it = d.gases.find(gas);
      out << ',' << (it != d.gases.end() ? cell(it->second.ppm_per_kg) : "");
    }
    out << ',' << detail::format_g6(d.temp_c) << ',' << detail::format_g6(d.rh_pct);
    for (Factor f : kAllFactors) {
      auto it = d.quality.q_per_factor.find(f);
      out << ',' << (it != d.quality.q_per_factor.end() ? detail::format_g6(it->second) : "");
    }
    out << ',' << detail::format_g6(d.quality.q_total) << ',' << to_string(d.quality.category)
        << '\n';
  }
}

inline auto parse_csv(std::istream& in) -> CsvTable {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::invalid_record, "CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.columns = detail::split_csv_line(line);
  if (table.columns.empty() || table.columns.front() != "timestamp") {
    throw Error(ErrorCode::invalid_record, "CSV header must start with 'timestamp'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != table.columns.size()) {
      throw Error(ErrorCode::invalid_record,
                  "CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(table.columns.size()),
                  line_no);
    }
    CsvRow row;
    try {
      row.timestamp = std::stoll(cells[0]);
      for (std::size_t i = 1; i < cells.size(); ++i) {
        const auto& name = table.columns[i];
        if (name == "category") {
          row.category = cells[i];
        } else if (cells[i].empty()) {
          row.values[name] = std::nullopt;
        } else {
          row.values[name] = std::stod(cells[i]);
        }
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::invalid_record, "CSV line " + std::to_string(line_no) + " is not numeric",
                  line_no);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace enose
