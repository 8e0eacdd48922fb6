#pragma once

// Deterministic e-nose telemetry generator. Each gas follows a sum of
// logistic rises (ripening, then decomposition); concentrations are pushed
// back through the sensor calibration to output voltages, and Gaussian noise
// is added in the voltage domain.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "enose/calibration.hpp"
#include "enose/config.hpp"
#include "enose/error.hpp"
#include "enose/random.hpp"
#include "enose/telemetry.hpp"

namespace enose {

struct LogisticPhase {
  double plateau_ppm = 0.0;  // level reached once this phase completes
  double growth_rate = 0.1;  // 1/hour
  double midpoint_h = 0.0;
};

struct GasProfile {
  double initial_ppm = 0.0;
  std::vector<LogisticPhase> phases;

  /// initial + sum_k (plateau_k - plateau_{k-1}) / (1 + exp(-rate_k (t - mid_k)))
  [[nodiscard]] auto ppm_at(double hours) const -> double {
    double level = initial_ppm;
    double previous = initial_ppm;
    for (const auto& p : phases) {
      level += (p.plateau_ppm - previous) / (1.0 + std::exp(-p.growth_rate * (hours - p.midpoint_h)));
      previous = p.plateau_ppm;
    }
    return level;
  }
};

struct RipeningProfile {
  std::string batch_id = "sim";
  std::int64_t start_ts = 1'700'000'000;
  std::map<Gas, GasProfile> gases;
  double mean_temp_c = 32.0;
  double mean_rh_pct = 97.0;
  double voltage_noise_std = 0.0;
  double env_noise_std = 0.0;
  double weight_kg = 0.765;
  double duration_h = 84.0;
  double interval_s = 60.0;
  std::uint64_t seed = 1;

  [[nodiscard]] auto step_count() const -> std::size_t {
    return static_cast<std::size_t>(std::floor(duration_h * 3600.0 / interval_s + 1e-9)) + 1;
  }
};

inline void validate(const RipeningProfile& p) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::invalid_profile, why); };
  if (p.batch_id.empty()) fail("batch id must not be empty");
  if (!(p.weight_kg > 0.0)) fail("weight_kg must be > 0");
  if (!(p.duration_h >= 0.0) || !(p.interval_s > 0.0)) fail("duration must be >= 0 and interval > 0");
  if (!(p.voltage_noise_std >= 0.0) || !(p.env_noise_std >= 0.0)) fail("noise stds must be >= 0");
  for (Gas g : kAllGases) {
    auto it = p.gases.find(g);
    if (it == p.gases.end()) fail("missing trajectory for " + std::string(to_string(g)));
    const auto& gp = it->second;
    if (!(gp.initial_ppm >= 0.0)) fail(std::string(to_string(g)) + ": initial_ppm must be >= 0");
    double previous = gp.initial_ppm;
    for (const auto& ph : gp.phases) {
      if (!(ph.plateau_ppm >= previous)) {
        fail(std::string(to_string(g)) + ": plateaus must not decrease");
      }
      if (!(ph.growth_rate > 0.0)) fail(std::string(to_string(g)) + ": growth_rate must be > 0");
      previous = ph.plateau_ppm;
    }
  }
}

/// Analytic concentration of a gas at `elapsed_s` seconds after start.
inline auto profile_ppm(const RipeningProfile& p, Gas gas, double elapsed_s) -> double {
  return p.gases.at(gas).ppm_at(elapsed_s / 3600.0);
}

inline auto generate_trace(const RipeningProfile& profile, const Calibration& calibration)
    -> std::vector<TelemetryRecord> {
  validate(profile);
  validate(calibration);
  PortableRng rng(profile.seed);
  const auto steps = profile.step_count();
  std::vector<TelemetryRecord> trace;
  trace.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double elapsed = static_cast<double>(k) * profile.interval_s;
    TelemetryRecord r;
    r.batch_id = profile.batch_id;
    r.timestamp = profile.start_ts + static_cast<std::int64_t>(std::llround(elapsed));
    for (const auto& ch : calibration.channels) {
      const double ppm = profile_ppm(profile, ch.gas, elapsed);
      double volts = std::numeric_limits<double>::quiet_NaN();
      if (ppm > 0.0) volts = ppm_to_voltage(ppm, ch);
      if (!(std::isfinite(volts) && volts > 0.0 && volts < ch.supply_voltage)) {
        throw Error(ErrorCode::unencodable_profile,
                    std::string(to_string(ch.gas)) + " at " + std::to_string(ppm) +
                        " ppm has no output voltage in (0, Vcc)",
                    k);
      }
      r.voltages[ch.channel_id] = volts + profile.voltage_noise_std * rng.normal();
    }
    r.temp_c = profile.mean_temp_c + profile.env_noise_std * rng.normal();
    r.rh_pct = std::clamp(profile.mean_rh_pct + profile.env_noise_std * rng.normal(), 0.0, 100.0);
    trace.push_back(std::move(r));
  }
  return trace;
}

inline constexpr double kAsFastAsPossible = std::numeric_limits<double>::infinity();

/// Sink returns false to reject a record; exceptions from the sink are
/// treated as rejections too.
using TelemetrySink = std::function<bool(const TelemetryRecord&)>;

/// Delivers the records in order, sleeping interval_s / speedup between
/// them. Returns the number delivered.
inline auto replay(std::span<const TelemetryRecord> trace, const TelemetrySink& sink,
                   double speedup = kAsFastAsPossible, double interval_s = 60.0) -> std::size_t {
  if (!(speedup > 0.0)) throw Error(ErrorCode::invalid_profile, "speedup must be > 0");
  const bool paced = std::isfinite(speedup);
  const auto delay = std::chrono::duration<double>(paced ? interval_s / speedup : 0.0);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (paced && i > 0) std::this_thread::sleep_for(delay);
    bool accepted = false;
    std::string why = "sink rejected record";
    try {
      accepted = sink(trace[i]);
    } catch (const std::exception& e) {
      why = e.what();
    }
    if (!accepted) {
      throw Error(ErrorCode::replay_aborted, "record " + std::to_string(i) + ": " + why, i);
    }
  }
  return trace.size();
}

// ---------------------------------------------------------------------------
// Presets

/// Banana ripening in a sealed container at 32 °C / 97 %RH. Levels are
/// chosen in ppm/kg around the banana thresholds (ripe 92/81/48, decomposed
/// 177/108/111 for methane/ethanol/ammonia) and scaled by the 765 g
/// specimen weight. Ripening midpoints sit at 24-36 h, decomposition at 60 h.
inline auto banana_profile(std::string batch_id = "banana-1") -> RipeningProfile {
  RipeningProfile p;
  p.batch_id = std::move(batch_id);
  p.weight_kg = 0.765;
  p.duration_h = 84.0;
  p.interval_s = 60.0;
  p.mean_temp_c = 32.0;
  p.mean_rh_pct = 97.0;
  const double w = p.weight_kg;
  p.gases[Gas::methane] = {20.0 * w, {{110.0 * w, 0.15, 36.0}, {260.0 * w, 0.20, 60.0}}};
  p.gases[Gas::ethanol] = {15.0 * w, {{90.0 * w, 0.20, 24.0}, {160.0 * w, 0.20, 60.0}}};
  p.gases[Gas::ammonia] = {8.0 * w, {{60.0 * w, 0.15, 36.0}, {180.0 * w, 0.20, 60.0}}};
  return p;
}

// ---------------------------------------------------------------------------
// Profile file
//
//   {"profile": {"batch": "banana-1", "start_ts": 1700000000, "weight_kg": 0.765,
//                "duration_h": 84, "interval_s": 60, "seed": 42,
//                "env": {"temp_c": 32, "rh": 97},
//                "noise": {"voltage_std": 0.003, "env_std": 0.2},
//                "gases": {"methane": {"initial_ppm": 15.3,
//                                      "phases": [{"plateau_ppm": 84.2, "growth_rate": 0.15,
//                                                  "midpoint_h": 36}]}, ...}},
//    "calibration": {...}}      // optional, defaults to the datasheet channels

inline auto to_json(const RipeningProfile& p) -> Json {
  Json gases = Json::object();
  for (const auto& [gas, gp] : p.gases) {
    Json phases = Json::array();
    for (const auto& ph : gp.phases) {
      phases.push_back({{"plateau_ppm", ph.plateau_ppm},
                        {"growth_rate", ph.growth_rate},
                        {"midpoint_h", ph.midpoint_h}});
    }
    gases[std::string(to_string(gas))] = {{"initial_ppm", gp.initial_ppm}, {"phases", phases}};
  }
  return Json{{"batch", p.batch_id},
              {"start_ts", p.start_ts},
              {"weight_kg", p.weight_kg},
              {"duration_h", p.duration_h},
              {"interval_s", p.interval_s},
              {"seed", p.seed},
              {"env", {{"temp_c", p.mean_temp_c}, {"rh", p.mean_rh_pct}}},
              {"noise", {{"voltage_std", p.voltage_noise_std}, {"env_std", p.env_noise_std}}},
              {"gases", gases}};
}

inline auto profile_from_json(const Json& j) -> RipeningProfile {
  RipeningProfile p;
  try {
    p.batch_id = j.value("batch", p.batch_id);
    p.start_ts = j.value("start_ts", p.start_ts);
    p.weight_kg = j.value("weight_kg", p.weight_kg);
    p.duration_h = j.value("duration_h", p.duration_h);
    p.interval_s = j.value("interval_s", p.interval_s);
    p.seed = j.value("seed", p.seed);
    if (j.contains("env")) {
      p.mean_temp_c = j.at("env").value("temp_c", p.mean_temp_c);
      p.mean_rh_pct = j.at("env").value("rh", p.mean_rh_pct);
    }
    if (j.contains("noise")) {
      p.voltage_noise_std = j.at("noise").value("voltage_std", p.voltage_noise_std);
      p.env_noise_std = j.at("noise").value("env_std", p.env_noise_std);
    }
    for (const auto& [name, g] : j.at("gases").items()) {
      auto gas = parse_gas(name);
      if (!gas) throw Error(ErrorCode::invalid_profile, "unknown gas '" + name + "'");
      GasProfile gp;
      gp.initial_ppm = g.at("initial_ppm").get<double>();
      for (const auto& ph : g.value("phases", Json::array())) {
        gp.phases.push_back({ph.at("plateau_ppm").get<double>(), ph.at("growth_rate").get<double>(),
                             ph.at("midpoint_h").get<double>()});
      }
      p.gases[*gas] = gp;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_profile, e.what());
  }
  validate(p);
  return p;
}

}  // namespace enose
