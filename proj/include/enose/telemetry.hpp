#pragma once

// Telemetry line format shared by the simulator output, the HTTP ingestion
// body and the raw log:
//
//   {"batch":"b1","ts":1700000000,"v":{"mq3":1.2,"mq4":0.9,"mq135":1.1},"temp_c":32.0,"rh":97.0}
//
// ts is UTC epoch seconds; v maps channel id to output volts.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "enose/calibration.hpp"
#include "enose/error.hpp"
#include "enose/quality.hpp"

namespace enose {

using Json = nlohmann::json;

struct TelemetryRecord {
  std::string batch_id;
  std::int64_t timestamp = 0;
  std::map<std::string, double> voltages;
  double temp_c = 0.0;
  double rh_pct = 0.0;

  auto operator==(const TelemetryRecord&) const -> bool = default;
};

struct GasReading {
  std::string channel_id;
  double volts = 0.0;
  std::optional<double> ppm;  // sensitivity-curve value; absent when faulted
  std::optional<double> ppm_clamped;  // ppm clamped into the rated detection range
  std::optional<double> ppm_per_kg;   // ppm / batch weight, the scored quantity
  bool clamped = false;               // ppm lies outside the rated detection range
  bool faulted = false;

  auto operator==(const GasReading&) const -> bool = default;
};

struct DerivedReading {
  std::string batch_id;
  std::int64_t timestamp = 0;
  std::map<Gas, GasReading> gases;
  double temp_c = 0.0;
  double rh_pct = 0.0;
  bool env_faulted = false;
  QualityScore quality;

  /// Gas channels plus the temperature/humidity sensor that are not faulted.
  [[nodiscard]] auto active_sensors() const -> int {
    int n = env_faulted ? 0 : 1;
    for (const auto& [gas, r] : gases) n += r.faulted ? 0 : 1;
    return n;
  }

  [[nodiscard]] auto total_sensors() const -> int { return static_cast<int>(gases.size()) + 1; }
};

inline auto operator==(const QualityScore& a, const QualityScore& b) -> bool {
  return a.q_per_factor == b.q_per_factor && a.q_total == b.q_total &&
         a.category == b.category && a.timestamp == b.timestamp;
}

inline auto operator==(const DerivedReading& a, const DerivedReading& b) -> bool {
  return a.batch_id == b.batch_id && a.timestamp == b.timestamp && a.gases == b.gases &&
         a.temp_c == b.temp_c && a.rh_pct == b.rh_pct && a.env_faulted == b.env_faulted &&
         a.quality == b.quality;
}

// ---------------------------------------------------------------------------
// JSON codecs

namespace detail {

inline auto require(const Json& j, std::string_view key, ErrorCode code) -> const Json& {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(code, "missing field '" + std::string(key) + "'");
  }
  return j.at(std::string(key));
}

inline auto require_number(const Json& j, std::string_view key, ErrorCode code) -> double {
  const auto& v = require(j, key, code);
  if (!v.is_number()) throw Error(code, "field '" + std::string(key) + "' must be a number");
  return v.get<double>();
}

inline auto optional_number(const std::optional<double>& v) -> Json {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace detail

inline auto to_json(const TelemetryRecord& r) -> Json {
  Json v = Json::object();
  for (const auto& [id, volts] : r.voltages) v[id] = volts;
  return Json{{"batch", r.batch_id}, {"ts", r.timestamp}, {"v", v}, {"temp_c", r.temp_c},
              {"rh", r.rh_pct}};
}

inline auto telemetry_from_json(const Json& j) -> TelemetryRecord {
  constexpr auto code = ErrorCode::invalid_record;
  TelemetryRecord r;
  const auto& batch = detail::require(j, "batch", code);
  if (!batch.is_string()) throw Error(code, "field 'batch' must be a string");
  r.batch_id = batch.get<std::string>();
  const auto& ts = detail::require(j, "ts", code);
  if (!ts.is_number_integer()) throw Error(code, "field 'ts' must be integer epoch seconds");
  r.timestamp = ts.get<std::int64_t>();
  const auto& v = detail::require(j, "v", code);
  if (!v.is_object()) throw Error(code, "field 'v' must be an object");
  for (const auto& [id, volts] : v.items()) {
    if (!volts.is_number()) throw Error(code, "voltage for '" + id + "' must be a number");
    r.voltages[id] = volts.get<double>();
  }
  r.temp_c = detail::require_number(j, "temp_c", code);
  r.rh_pct = detail::require_number(j, "rh", code);
  return r;
}

inline auto to_json(const QualityScore& q) -> Json {
  Json factors = Json::object();
  for (const auto& [f, v] : q.q_per_factor) factors[std::string(to_string(f))] = v;
  return Json{{"factors", factors},
              {"q_total", q.q_total},
              {"category", std::string(to_string(q.category))},
              {"ts", q.timestamp}};
}

inline auto quality_from_json(const Json& j) -> QualityScore {
  constexpr auto code = ErrorCode::invalid_record;
  QualityScore q;
  for (const auto& [name, v] : detail::require(j, "factors", code).items()) {
    auto f = parse_factor(name);
    if (!f) throw Error(code, "unknown quality factor '" + name + "'");
    q.q_per_factor[*f] = v.get<double>();
  }
  q.q_total = detail::require_number(j, "q_total", code);
  auto cat = parse_category(detail::require(j, "category", code).get<std::string>());
  if (!cat) throw Error(code, "unknown category");
  q.category = *cat;
  q.timestamp = detail::require(j, "ts", code).get<std::int64_t>();
  return q;
}

inline auto to_json(const DerivedReading& d) -> Json {
  Json gases = Json::object();
  for (const auto& [gas, r] : d.gases) {
    gases[std::string(to_string(gas))] = Json{{"channel", r.channel_id},
                                              {"volts", r.volts},
                                              {"ppm", detail::optional_number(r.ppm)},
                                              {"ppm_clamped", detail::optional_number(r.ppm_clamped)},
                                              {"ppm_per_kg", detail::optional_number(r.ppm_per_kg)},
                                              {"clamped", r.clamped},
                                              {"faulted", r.faulted}};
  }
  return Json{{"batch", d.batch_id},
              {"ts", d.timestamp},
              {"gases", gases},
              {"temp_c", d.temp_c},
              {"rh", d.rh_pct},
              {"env_faulted", d.env_faulted},
              {"active_sensors", d.active_sensors()},
              {"total_sensors", d.total_sensors()},
              {"quality", to_json(d.quality)}};
}

inline auto derived_from_json(const Json& j) -> DerivedReading {
  constexpr auto code = ErrorCode::invalid_record;
  auto opt = [](const Json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  DerivedReading d;
  d.batch_id = detail::require(j, "batch", code).get<std::string>();
  d.timestamp = detail::require(j, "ts", code).get<std::int64_t>();
  for (const auto& [name, g] : detail::require(j, "gases", code).items()) {
    auto gas = parse_gas(name);
    if (!gas) throw Error(code, "unknown gas '" + name + "'");
    GasReading r;
    r.channel_id = g.at("channel").get<std::string>();
    r.volts = g.at("volts").get<double>();
    r.ppm = opt(g.at("ppm"));
    r.ppm_clamped = opt(g.at("ppm_clamped"));
    r.ppm_per_kg = opt(g.at("ppm_per_kg"));
    r.clamped = g.at("clamped").get<bool>();
    r.faulted = g.at("faulted").get<bool>();
    d.gases[*gas] = r;
  }
  d.temp_c = detail::require_number(j, "temp_c", code);
  d.rh_pct = detail::require_number(j, "rh", code);
  d.env_faulted = detail::require(j, "env_faulted", code).get<bool>();
  d.quality = quality_from_json(detail::require(j, "quality", code));
  return d;
}

}  // namespace enose
