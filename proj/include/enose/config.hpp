#pragma once

// Structured-text (JSON) configuration: sensor calibration blocks, per-fruit
// quality models and the service config that bundles them.
//
// Calibration block:
//   {"channels": [{"id": "mq3", "gas": "ethanol", "rl_ohms": 10000, "vcc": 5.0,
//                  "ro_ohms": 10000, "detection_range_ppm": [25, 500],
//                  "anchors": [[2.30, 25], [1.62, 50], ...]}]}
//   "curve": {"a": ..., "b": ...} may replace "anchors".
//
// Quality model block:
//   {"fruit": "banana",
//    "gases": {"methane": {"ripe": 92, "decomposed": 177}, ...},
//    "environment": {"t_min": 14, "t_max": 16, "s_t1": 2, "s_t2": 9,
//                    "h_min": 90, "h_max": 95, "s_h1": 10, "s_h2": 5},
//    "weights": {"methane": 0.3, "ammonia": 0.325, "ethanol": 0.15,
//                "temperature": 0.125, "humidity": 0.1}}

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "enose/calibration.hpp"
#include "enose/error.hpp"
#include "enose/quality.hpp"
#include "enose/signal_metrics.hpp"

namespace enose {

using Json = nlohmann::json;

struct Calibration {
  std::vector<SensorChannel> channels;

  [[nodiscard]] auto channel_for(Gas gas) const -> const SensorChannel& {
    for (const auto& ch : channels) {
      if (ch.gas == gas) return ch;
    }
    throw Error(ErrorCode::invalid_config, "no channel for " + std::string(to_string(gas)));
  }
};

inline void validate(const Calibration& c) {
  for (Gas g : kAllGases) {
    int count = 0;
    for (const auto& ch : c.channels) count += ch.gas == g ? 1 : 0;
    if (count != 1) {
      throw Error(ErrorCode::invalid_config,
                  "calibration needs exactly one channel for " + std::string(to_string(g)));
    }
  }
  for (std::size_t i = 0; i < c.channels.size(); ++i) {
    validate(c.channels[i]);
    for (std::size_t k = i + 1; k < c.channels.size(); ++k) {
      if (c.channels[i].channel_id == c.channels[k].channel_id) {
        throw Error(ErrorCode::invalid_config, "duplicate channel id " + c.channels[i].channel_id);
      }
    }
  }
}

inline auto default_calibration() -> Calibration {
  return {{default_channel(Gas::ethanol), default_channel(Gas::methane),
           default_channel(Gas::ammonia)}};
}

namespace detail {

template <typename T>
auto get_or(const Json& j, const char* key, T fallback) -> T {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::invalid_config, std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
auto get_required(const Json& j, const char* key, const std::string& where) -> T {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::invalid_config, where + ": missing '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::invalid_config, where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Calibration <-> JSON

inline auto channel_from_json(const Json& j) -> SensorChannel {
  const auto id = detail::get_required<std::string>(j, "id", "channel");
  const auto where = "channel " + id;
  auto gas = parse_gas(detail::get_required<std::string>(j, "gas", where));
  if (!gas) throw Error(ErrorCode::invalid_config, where + ": unknown gas");

  SensorChannel ch = default_channel(*gas);
  ch.channel_id = id;
  ch.load_resistance = detail::get_or(j, "rl_ohms", ch.load_resistance);
  ch.supply_voltage = detail::get_or(j, "vcc", ch.supply_voltage);
  if (!j.contains("ro_ohms")) {
    throw Error(ErrorCode::invalid_config,
                where + ": missing 'ro_ohms' (derive it from a clean-air warm-up with `enose calibrate`)");
  }
  ch.clean_air_resistance = detail::get_required<double>(j, "ro_ohms", where);
  if (j.contains("detection_range_ppm")) {
    const auto r = detail::get_required<std::vector<double>>(j, "detection_range_ppm", where);
    if (r.size() != 2) throw Error(ErrorCode::invalid_config, where + ": range needs [min, max]");
    ch.detection_range = {r[0], r[1]};
  }
  try {
    if (j.contains("curve")) {
      const auto& c = j.at("curve");
      ch.curve = PowerLawCurve(detail::get_required<double>(c, "a", where),
                               detail::get_required<double>(c, "b", where));
    } else if (j.contains("anchors")) {
      std::vector<RatioPoint> points;
      for (const auto& p : j.at("anchors")) {
        if (!p.is_array() || p.size() != 2) {
          throw Error(ErrorCode::invalid_config, where + ": anchors are [ratio, ppm] pairs");
        }
        points.push_back({p[0].get<double>(), p[1].get<double>()});
      }
      ch.curve = fit_power_law(points).curve();
    }
    validate(ch);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_config) throw;
    throw Error(ErrorCode::invalid_config, where + ": " + e.what());
  }
  return ch;
}

inline auto to_json(const SensorChannel& ch) -> Json {
  return Json{{"id", ch.channel_id},
              {"gas", std::string(to_string(ch.gas))},
              {"rl_ohms", ch.load_resistance},
              {"vcc", ch.supply_voltage},
              {"ro_ohms", ch.clean_air_resistance},
              {"detection_range_ppm", {ch.detection_range.min_ppm, ch.detection_range.max_ppm}},
              {"curve", {{"a", ch.curve.coefficient_a()}, {"b", ch.curve.exponent_b()}}}};
}

inline auto calibration_from_json(const Json& j) -> Calibration {
  Calibration c;
  const auto& channels = j.is_object() && j.contains("channels") ? j.at("channels") : Json();
  if (!channels.is_array()) throw Error(ErrorCode::invalid_config, "calibration needs 'channels'");
  for (const auto& ch : channels) c.channels.push_back(channel_from_json(ch));
  validate(c);
  return c;
}

inline auto to_json(const Calibration& c) -> Json {
  Json channels = Json::array();
  for (const auto& ch : c.channels) channels.push_back(to_json(ch));
  return Json{{"channels", channels}};
}

// ---------------------------------------------------------------------------
// Quality model <-> JSON

inline auto quality_model_from_json(const Json& j) -> QualityModel {
  QualityModel m;
  m.fruit = detail::get_required<std::string>(j, "fruit", "quality model");
  const auto where = "quality model " + m.fruit;
  try {
    const auto& gases = j.contains("gases") ? j.at("gases") : Json::object();
    for (const auto& [name, g] : gases.items()) {
      auto gas = parse_gas(name);
      if (!gas) throw Error(ErrorCode::invalid_config, where + ": unknown gas '" + name + "'");
      m.gases[*gas] = GasQualityParams::from_thresholds(
          *gas, detail::get_required<double>(g, "ripe", where),
          detail::get_required<double>(g, "decomposed", where));
    }
    if (j.contains("environment")) {
      const auto& e = j.at("environment");
      auto& p = m.environment;
      p.t_min = detail::get_or(e, "t_min", p.t_min);
      p.t_max = detail::get_or(e, "t_max", p.t_max);
      p.t_tolerance_low = detail::get_or(e, "s_t1", p.t_tolerance_low);
      p.t_tolerance_high = detail::get_or(e, "s_t2", p.t_tolerance_high);
      p.h_min = detail::get_or(e, "h_min", p.h_min);
      p.h_max = detail::get_or(e, "h_max", p.h_max);
      p.h_tolerance_low = detail::get_or(e, "s_h1", p.h_tolerance_low);
      p.h_tolerance_high = detail::get_or(e, "s_h2", p.h_tolerance_high);
    }
    if (j.contains("weights")) {
      const auto& w = j.at("weights");
      auto& q = m.weights;
      q.methane = detail::get_required<double>(w, "methane", where);
      q.ammonia = detail::get_required<double>(w, "ammonia", where);
      q.ethanol = detail::get_required<double>(w, "ethanol", where);
      q.temperature = detail::get_required<double>(w, "temperature", where);
      q.humidity = detail::get_required<double>(w, "humidity", where);
    }
    validate(m);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_config) throw;
    throw Error(ErrorCode::invalid_config, where + ": " + e.what());
  }
  return m;
}

inline auto to_json(const QualityModel& m) -> Json {
  Json gases = Json::object();
  for (const auto& [gas, p] : m.gases) {
    gases[std::string(to_string(gas))] = {{"ripe", p.ripe_threshold},
                                          {"decomposed", p.decomposed_threshold}};
  }
  const auto& e = m.environment;
  const auto& w = m.weights;
  return Json{{"fruit", m.fruit},
              {"gases", gases},
              {"environment",
               {{"t_min", e.t_min},
                {"t_max", e.t_max},
                {"s_t1", e.t_tolerance_low},
                {"s_t2", e.t_tolerance_high},
                {"h_min", e.h_min},
                {"h_max", e.h_max},
                {"s_h1", e.h_tolerance_low},
                {"s_h2", e.h_tolerance_high}}},
              {"weights",
               {{"methane", w.methane},
                {"ammonia", w.ammonia},
                {"ethanol", w.ethanol},
                {"temperature", w.temperature},
                {"humidity", w.humidity}}}};
}

// ---------------------------------------------------------------------------
// Service config

struct SignalParams {
  int degree = kDefaultBaselineDegree;
  std::size_t window = kDefaultRollingWindow;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "data";
  std::string default_locale = "en";
  SignalParams signal;
  std::map<std::string, Calibration> calibrations{{"default", default_calibration()}};
  std::map<std::string, QualityModel> quality_models{{"banana", banana_quality_model()}};
  std::filesystem::path static_dir;  // optional dashboard build served at /
};

inline auto to_json(const ServiceConfig& c) -> Json {
  Json cals = Json::object();
  for (const auto& [id, cal] : c.calibrations) cals[id] = to_json(cal);
  Json models = Json::object();
  for (const auto& [id, m] : c.quality_models) models[id] = to_json(m);
  Json j{{"listen", c.host + ":" + std::to_string(c.port)},
         {"data_dir", c.data_dir.string()},
         {"default_locale", c.default_locale},
         {"signal", {{"degree", c.signal.degree}, {"window", c.signal.window}}},
         {"calibrations", cals},
         {"quality_models", models}};
  if (!c.static_dir.empty()) j["static_dir"] = c.static_dir.string();
  return j;
}

inline auto service_config_from_json(const Json& j, const std::filesystem::path& base_dir = {})
    -> ServiceConfig {
  if (!j.is_object()) throw Error(ErrorCode::invalid_config, "config must be a JSON object");
  ServiceConfig c;
  if (j.contains("listen")) {
    const auto listen = detail::get_required<std::string>(j, "listen", "config");
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::invalid_config, "listen must be host:port");
    }
    c.host = listen.substr(0, colon);
    try {
      c.port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_config, "listen port is not a number");
    }
  }
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  if (j.contains("data_dir")) c.data_dir = resolve(detail::get_required<std::string>(j, "data_dir", "config"));
  if (j.contains("static_dir")) c.static_dir = resolve(detail::get_required<std::string>(j, "static_dir", "config"));
  c.default_locale = detail::get_or<std::string>(j, "default_locale", c.default_locale);
  if (c.default_locale != "en" && c.default_locale != "bn") {
    throw Error(ErrorCode::invalid_config, "default_locale must be en or bn");
  }
  if (j.contains("signal")) {
    const auto& s = j.at("signal");
    c.signal.degree = detail::get_or(s, "degree", c.signal.degree);
    c.signal.window = detail::get_or(s, "window", c.signal.window);
    if (c.signal.degree < 1 || c.signal.window < 2) {
      throw Error(ErrorCode::invalid_config, "signal.degree must be >= 1 and signal.window >= 2");
    }
  }
  if (j.contains("calibrations")) {
    c.calibrations.clear();
    for (const auto& [id, cal] : j.at("calibrations").items()) {
      c.calibrations[id] = calibration_from_json(cal);
    }
  }
  if (j.contains("quality_models")) {
    c.quality_models.clear();
    for (const auto& [id, m] : j.at("quality_models").items()) {
      c.quality_models[id] = quality_model_from_json(m);
    }
  }
  return c;
}

inline auto read_json_file(const std::filesystem::path& path) -> Json {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_config, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::invalid_config, path.string() + ": " + e.what());
  }
}

inline auto load_service_config(const std::filesystem::path& path) -> ServiceConfig {
  return service_config_from_json(read_json_file(path), path.parent_path());
}

/// FNV-1a 64 over the canonical JSON dump, as 16 hex digits.
inline auto config_checksum(const ServiceConfig& c) -> std::string {
  const auto text = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace enose
