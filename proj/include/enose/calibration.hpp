#pragma once

// Voltage -> resistance -> Rs/Ro ratio -> ppm conversion for MQ-series
// metal-oxide sensors read through a load-resistor divider.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "enose/error.hpp"

namespace enose {

enum class Gas { ethanol, methane, ammonia };

inline constexpr Gas kAllGases[] = {Gas::methane, Gas::ammonia, Gas::ethanol};

constexpr auto to_string(Gas gas) -> std::string_view {
  switch (gas) {
    case Gas::ethanol: return "ethanol";
    case Gas::methane: return "methane";
    case Gas::ammonia: return "ammonia";
  }
  return "unknown";
}

inline auto parse_gas(std::string_view name) -> std::optional<Gas> {
  for (Gas g : kAllGases) {
    if (to_string(g) == name) return g;
  }
  return std::nullopt;
}

struct DetectionRange {
  double min_ppm = 0.0;
  double max_ppm = 0.0;

  [[nodiscard]] auto contains(double ppm) const noexcept -> bool {
    return ppm >= min_ppm && ppm <= max_ppm;
  }
};

/// Detection ranges of the MQ-3 / MQ-4 / MQ-135 datasheets.
inline auto default_detection_range(Gas gas) -> DetectionRange {
  switch (gas) {
    case Gas::ethanol: return {25.0, 500.0};
    case Gas::methane: return {300.0, 10000.0};
    case Gas::ammonia: return {10.0, 1000.0};
  }
  return {};
}

/// ppm = A * ratio^B. B must be non-zero so the curve is invertible.
class PowerLawCurve {
public:
  PowerLawCurve(double coefficient_a, double exponent_b) : a_(coefficient_a), b_(exponent_b) {
    if (!(std::isfinite(a_) && a_ > 0.0)) {
      throw Error(ErrorCode::invalid_curve, "coefficient A must be finite and > 0");
    }
    if (!std::isfinite(b_) || b_ == 0.0) {
      throw Error(ErrorCode::invalid_curve, "exponent B must be finite and non-zero");
    }
  }

  [[nodiscard]] auto coefficient_a() const noexcept -> double { return a_; }
  [[nodiscard]] auto exponent_b() const noexcept -> double { return b_; }

  [[nodiscard]] auto ppm(double ratio) const -> double { return a_ * std::pow(ratio, b_); }
  [[nodiscard]] auto ratio(double ppm) const -> double { return std::pow(ppm / a_, 1.0 / b_); }

private:
  double a_;
  double b_;
};

struct RatioPoint {
  double ratio = 0.0;
  double concentration = 0.0;
};

struct SensorChannel {
  std::string channel_id;
  Gas gas = Gas::ethanol;
  double load_resistance = 10'000.0;   // RL, ohms
  double supply_voltage = 5.0;          // Vcc, volts
  double clean_air_resistance = 10'000.0;  // Ro, ohms
  DetectionRange detection_range;
  PowerLawCurve curve{1.0, -1.0};
};

inline void validate(const SensorChannel& ch) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (ch.channel_id.empty()) {
    throw Error(ErrorCode::invalid_channel, "channel id must not be empty");
  }
  if (!positive(ch.load_resistance) || !positive(ch.supply_voltage) ||
      !positive(ch.clean_air_resistance)) {
    throw Error(ErrorCode::invalid_channel,
                "channel " + ch.channel_id + ": RL, Vcc and Ro must be > 0");
  }
  const auto& r = ch.detection_range;
  if (!(positive(r.min_ppm) && positive(r.max_ppm) && r.min_ppm < r.max_ppm)) {
    throw Error(ErrorCode::invalid_channel,
                "channel " + ch.channel_id + ": detection range needs 0 < min < max");
  }
}

/// Rs = RL * (Vcc - Vout) / Vout. Vout outside (0, Vcc) means the sensor is
/// disconnected or shorted.
inline auto voltage_to_resistance(double v_out, const SensorChannel& ch) -> double {
  if (!std::isfinite(v_out) || v_out <= 0.0 || v_out >= ch.supply_voltage) {
    throw Error(ErrorCode::out_of_range_voltage,
                "channel " + ch.channel_id + ": output voltage " + std::to_string(v_out) +
                    " V outside (0, " + std::to_string(ch.supply_voltage) + ")");
  }
  return ch.load_resistance * (ch.supply_voltage - v_out) / v_out;
}

inline auto resistance_to_voltage(double rs, const SensorChannel& ch) -> double {
  return ch.supply_voltage * ch.load_resistance / (ch.load_resistance + rs);
}

struct Concentration {
  double ppm = 0.0;      // clamped into the detection range
  double raw_ppm = 0.0;  // value of the sensitivity curve before clamping
  bool clamped = false;
};

inline auto ratio_to_ppm(double ratio, const SensorChannel& ch) -> Concentration {
  if (!std::isfinite(ratio) || ratio <= 0.0) {
    throw Error(ErrorCode::invalid_ratio, "Rs/Ro ratio must be finite and > 0");
  }
  const double raw = ch.curve.ppm(ratio);
  const double clamped = std::clamp(raw, ch.detection_range.min_ppm, ch.detection_range.max_ppm);
  return {clamped, raw, clamped != raw};
}

inline auto voltage_to_ppm(double v_out, const SensorChannel& ch) -> Concentration {
  return ratio_to_ppm(voltage_to_resistance(v_out, ch) / ch.clean_air_resistance, ch);
}

/// Output voltage the channel produces at a given concentration; the inverse
/// of voltage_to_ppm without clamping.
inline auto ppm_to_voltage(double ppm, const SensorChannel& ch) -> double {
  if (!std::isfinite(ppm) || ppm <= 0.0) {
    throw Error(ErrorCode::invalid_concentration, "concentration must be > 0 to invert the curve");
  }
  return resistance_to_voltage(ch.curve.ratio(ppm) * ch.clean_air_resistance, ch);
}

/// Result of a log-log least-squares fit. Kept separate from PowerLawCurve
/// because a flat fit (B == 0) is a valid regression but an unusable curve.
struct PowerLawFit {
  double coefficient_a = 0.0;
  double exponent_b = 0.0;

  [[nodiscard]] auto curve() const -> PowerLawCurve { return {coefficient_a, exponent_b}; }
};

inline auto fit_power_law(std::span<const RatioPoint> points) -> PowerLawFit {
  if (points.size() < 2) {
    throw Error(ErrorCode::degenerate_fit, "need at least two anchor points");
  }
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& p : points) {
    if (!(std::isfinite(p.ratio) && p.ratio > 0.0 && std::isfinite(p.concentration) &&
          p.concentration > 0.0)) {
      throw Error(ErrorCode::invalid_point, "anchor points must have ratio > 0 and ppm > 0");
    }
    xs.push_back(std::log(p.ratio));
    ys.push_back(std::log(p.concentration));
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) {
    throw Error(ErrorCode::degenerate_fit, "anchor points need at least two distinct ratios");
  }
  const double slope = sxy / sxx;
  return {std::exp(my - slope * mx), slope};
}

inline auto normalize_per_kg(double ppm, double weight_kg) -> double {
  if (!std::isfinite(weight_kg) || weight_kg <= 0.0) {
    throw Error(ErrorCode::invalid_weight, "specimen weight must be > 0 kg");
  }
  return ppm / weight_kg;
}

/// Ro from a clean-air warm-up window: mean Rs divided by the datasheet's
/// clean-air Rs/Ro ratio.
inline auto estimate_clean_air_resistance(std::span<const double> warmup_voltages,
                                          const SensorChannel& ch, double clean_air_ratio = 1.0)
    -> double {
  if (warmup_voltages.empty()) {
    throw Error(ErrorCode::series_too_short, "warm-up window is empty", 1);
  }
  if (!(std::isfinite(clean_air_ratio) && clean_air_ratio > 0.0)) {
    throw Error(ErrorCode::invalid_ratio, "clean-air ratio must be > 0");
  }
  double sum = 0.0;
  for (double v : warmup_voltages) sum += voltage_to_resistance(v, ch);
  return sum / static_cast<double>(warmup_voltages.size()) / clean_air_ratio;
}

/// Anchor points read off the datasheet sensitivity curves (Rs/Ro, ppm).
inline auto datasheet_anchor_points(Gas gas) -> std::vector<RatioPoint> {
  switch (gas) {
    case Gas::ethanol:  // MQ-3
      return {{2.30, 25.0}, {1.62, 50.0}, {1.05, 100.0}, {0.66, 200.0}, {0.45, 350.0}, {0.38, 500.0}};
    case Gas::methane:  // MQ-4
      return {{1.75, 200.0}, {1.35, 500.0}, {1.00, 1000.0}, {0.75, 2000.0}, {0.58, 5000.0}, {0.43, 10000.0}};
    case Gas::ammonia:  // MQ-135
      return {{2.55, 10.0}, {1.75, 40.0}, {1.45, 80.0}, {1.20, 150.0}, {0.95, 300.0}, {0.62, 1000.0}};
  }
  return {};
}

inline auto default_channel_id(Gas gas) -> std::string {
  switch (gas) {
    case Gas::ethanol: return "mq3";
    case Gas::methane: return "mq4";
    case Gas::ammonia: return "mq135";
  }
  return {};
}

inline auto default_channel(Gas gas) -> SensorChannel {
  const auto anchors = datasheet_anchor_points(gas);
  SensorChannel ch;
  ch.channel_id = default_channel_id(gas);
  ch.gas = gas;
  ch.detection_range = default_detection_range(gas);
  ch.curve = fit_power_law(anchors).curve();
  return ch;
}

}  // namespace enose
