#pragma once

// Fruit quality index model: per-gas threshold indices, piecewise-linear
// storage-environment indices, and their weighted combination.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "enose/calibration.hpp"
#include "enose/error.hpp"

namespace enose {

/// Quality index value of a gas at its ripe threshold.
inline constexpr double kRipeQuality = 0.98;

enum class Factor { methane, ammonia, ethanol, temperature, humidity };

inline constexpr std::array<Factor, 5> kAllFactors = {Factor::methane, Factor::ammonia,
                                                      Factor::ethanol, Factor::temperature,
                                                      Factor::humidity};

constexpr auto to_string(Factor f) -> std::string_view {
  switch (f) {
    case Factor::methane: return "methane";
    case Factor::ammonia: return "ammonia";
    case Factor::ethanol: return "ethanol";
    case Factor::temperature: return "temperature";
    case Factor::humidity: return "humidity";
  }
  return "unknown";
}

inline auto parse_factor(std::string_view name) -> std::optional<Factor> {
  for (Factor f : kAllFactors) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

constexpr auto factor_of(Gas gas) -> Factor {
  switch (gas) {
    case Gas::methane: return Factor::methane;
    case Gas::ammonia: return Factor::ammonia;
    case Gas::ethanol: return Factor::ethanol;
  }
  return Factor::methane;
}

constexpr auto is_gas_factor(Factor f) -> bool {
  return f == Factor::methane || f == Factor::ammonia || f == Factor::ethanol;
}

enum class Category { excellent, good, moderate, bad, rotten };

inline constexpr std::array<Category, 5> kAllCategories = {
    Category::excellent, Category::good, Category::moderate, Category::bad, Category::rotten};

constexpr auto to_string(Category c) -> std::string_view {
  switch (c) {
    case Category::excellent: return "Excellent";
    case Category::good: return "Good";
    case Category::moderate: return "Moderate";
    case Category::bad: return "Bad";
    case Category::rotten: return "Rotten";
  }
  return "unknown";
}

inline auto parse_category(std::string_view name) -> std::optional<Category> {
  for (Category c : kAllCategories) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Gas index

/// Exponent that makes the gas index equal kRipeQuality at the ripe threshold:
/// 1 - (ripe/decomposed)^a = 0.98.
inline auto derive_exponent(double ripe_threshold, double decomposed_threshold) -> double {
  if (!(std::isfinite(ripe_threshold) && std::isfinite(decomposed_threshold) &&
        ripe_threshold > 0.0 && ripe_threshold < decomposed_threshold)) {
    throw Error(ErrorCode::invalid_threshold, "thresholds need 0 < ripe < decomposed");
  }
  return std::log(1.0 - kRipeQuality) / std::log(ripe_threshold / decomposed_threshold);
}

struct GasQualityParams {
  Gas gas = Gas::methane;
  double ripe_threshold = 0.0;        // ppm/kg
  double decomposed_threshold = 0.0;  // ppm/kg, the b of the index curve
  double exponent = 0.0;              // a

  static auto from_thresholds(Gas gas, double ripe, double decomposed) -> GasQualityParams {
    return {gas, ripe, decomposed, derive_exponent(ripe, decomposed)};
  }
};

inline void validate(const GasQualityParams& p) {
  if (!(p.ripe_threshold > 0.0 && p.ripe_threshold < p.decomposed_threshold &&
        std::isfinite(p.decomposed_threshold))) {
    throw Error(ErrorCode::invalid_threshold,
                std::string(to_string(p.gas)) + ": thresholds need 0 < ripe < decomposed");
  }
  if (!(std::isfinite(p.exponent) && p.exponent > 0.0)) {
    throw Error(ErrorCode::invalid_threshold, std::string(to_string(p.gas)) + ": exponent must be > 0");
  }
}

/// Q = max(0, 1 - (x/b)^a), x in ppm/kg.
inline auto gas_quality(double x, double exponent, double decomposed_threshold) -> double {
  if (!std::isfinite(x) || x < 0.0) {
    throw Error(ErrorCode::invalid_concentration, "concentration must be finite and >= 0");
  }
  if (x >= decomposed_threshold) return 0.0;
  return std::max(0.0, 1.0 - std::pow(x / decomposed_threshold, exponent));
}

inline auto gas_quality(double x, const GasQualityParams& p) -> double {
  return gas_quality(x, p.exponent, p.decomposed_threshold);
}

// ---------------------------------------------------------------------------
// Storage environment indices

struct EnvQualityParams {
  double t_min = 14.0;  // °C
  double t_max = 16.0;
  double t_tolerance_low = 2.0;
  double t_tolerance_high = 9.0;
  double h_min = 90.0;  // %RH
  double h_max = 95.0;
  double h_tolerance_low = 10.0;
  double h_tolerance_high = 5.0;
};

inline void validate(const EnvQualityParams& p) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!(std::isfinite(p.t_min) && std::isfinite(p.t_max) && p.t_min < p.t_max)) {
    throw Error(ErrorCode::invalid_threshold, "temperature band needs t_min < t_max");
  }
  if (!(p.h_min >= 0.0 && p.h_min < p.h_max && p.h_max <= 100.0)) {
    throw Error(ErrorCode::invalid_threshold, "humidity band needs 0 <= h_min < h_max <= 100");
  }
  if (!positive(p.t_tolerance_low) || !positive(p.t_tolerance_high) ||
      !positive(p.h_tolerance_low) || !positive(p.h_tolerance_high)) {
    throw Error(ErrorCode::invalid_threshold, "tolerance factors must be > 0");
  }
}

namespace detail {

inline auto band_quality(double value, double lo, double hi, double tol_lo, double tol_hi)
    -> double {
  if (value < lo) return std::max(1.0 - (lo - value) / tol_lo, 0.0);
  if (value > hi) return std::max(1.0 - (value - hi) / tol_hi, 0.0);
  return 1.0;
}

}  // namespace detail

inline auto temp_quality(double temp_c, const EnvQualityParams& p) -> double {
  if (!std::isfinite(temp_c)) {
    throw Error(ErrorCode::invalid_reading, "temperature must be finite");
  }
  return detail::band_quality(temp_c, p.t_min, p.t_max, p.t_tolerance_low, p.t_tolerance_high);
}

inline auto humidity_quality(double rh_pct, const EnvQualityParams& p) -> double {
  if (!std::isfinite(rh_pct) || rh_pct < 0.0 || rh_pct > 100.0) {
    throw Error(ErrorCode::invalid_reading, "relative humidity must lie in [0, 100]");
  }
  return detail::band_quality(rh_pct, p.h_min, p.h_max, p.h_tolerance_low, p.h_tolerance_high);
}

// ---------------------------------------------------------------------------
// Weighted total

inline constexpr double kWeightSumTolerance = 1e-9;

using FactorMap = std::map<Factor, double>;

struct QualityWeights {
  double methane = 0.3;
  double ammonia = 0.325;
  double ethanol = 0.15;
  double temperature = 0.125;
  double humidity = 0.1;

  [[nodiscard]] auto of(Factor f) const -> double {
    switch (f) {
      case Factor::methane: return methane;
      case Factor::ammonia: return ammonia;
      case Factor::ethanol: return ethanol;
      case Factor::temperature: return temperature;
      case Factor::humidity: return humidity;
    }
    return 0.0;
  }

  [[nodiscard]] auto as_map() const -> FactorMap {
    FactorMap m;
    for (Factor f : kAllFactors) m[f] = of(f);
    return m;
  }
};

inline void validate_weights(const FactorMap& weights) {
  double sum = 0.0;
  for (const auto& [factor, w] : weights) {
    if (!(std::isfinite(w) && w >= 0.0 && w <= 1.0)) {
      throw Error(ErrorCode::invalid_weights,
                  "weight for " + std::string(to_string(factor)) + " must lie in [0, 1]");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw Error(ErrorCode::invalid_weights, "weights must sum to 1, got " + std::to_string(sum));
  }
}

inline void validate(const QualityWeights& w) { validate_weights(w.as_map()); }

/// Sum of w_i * q_i over the factors named in `weights`.
inline auto total_quality(const FactorMap& q_factors, const FactorMap& weights) -> double {
  validate_weights(weights);
  if (q_factors.size() != weights.size()) {
    throw Error(ErrorCode::invalid_weights, "factor set and weight set differ");
  }
  double total = 0.0;
  double lo = 1.0;
  double hi = 0.0;
  for (const auto& [factor, w] : weights) {
    auto it = q_factors.find(factor);
    if (it == q_factors.end()) {
      throw Error(ErrorCode::invalid_weights,
                  "missing quality index for " + std::string(to_string(factor)));
    }
    const double q = it->second;
    if (!(q >= 0.0 && q <= 1.0)) {
      throw Error(ErrorCode::invalid_score, "factor indices must lie in [0, 1]");
    }
    total += w * q;
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  // a convex combination cannot leave [min q, max q]; clamp away rounding
  return std::clamp(total, lo, hi);
}

inline auto total_quality(const FactorMap& q_factors, const QualityWeights& weights) -> double {
  return total_quality(q_factors, weights.as_map());
}

/// Weights restricted to `available` factors. Gas weights are rescaled so
/// the surviving gases keep the combined gas share; if no gas survives, the
/// environment weights are rescaled to sum to one (and vice versa).
inline auto renormalize_weights(const QualityWeights& weights, const std::set<Factor>& available)
    -> FactorMap {
  double gas_total = 0.0;
  double gas_kept = 0.0;
  double env_total = 0.0;
  double env_kept = 0.0;
  for (Factor f : kAllFactors) {
    const bool kept = available.contains(f);
    if (is_gas_factor(f)) {
      gas_total += weights.of(f);
      if (kept) gas_kept += weights.of(f);
    } else {
      env_total += weights.of(f);
      if (kept) env_kept += weights.of(f);
    }
  }
  if (gas_kept + env_kept <= 0.0) {
    throw Error(ErrorCode::invalid_weights, "no weighted factor left to score");
  }
  double gas_scale = gas_kept > 0.0 ? gas_total / gas_kept : 0.0;
  double env_scale = env_kept > 0.0 ? env_total / env_kept : 0.0;
  if (gas_kept <= 0.0) env_scale = 1.0 / env_kept;
  if (env_kept <= 0.0) gas_scale = 1.0 / gas_kept;

  FactorMap out;
  for (Factor f : kAllFactors) {
    if (!available.contains(f)) continue;
    out[f] = weights.of(f) * (is_gas_factor(f) ? gas_scale : env_scale);
  }
  return out;
}

/// Equal 0.2-wide bands, left-closed: [0.8, 1] Excellent ... [0, 0.2) Rotten.
inline auto categorize(double q_total) -> Category {
  if (!(q_total >= 0.0 && q_total <= 1.0)) {
    throw Error(ErrorCode::invalid_score, "quality score must lie in [0, 1]");
  }
  if (q_total >= 0.8) return Category::excellent;
  if (q_total >= 0.6) return Category::good;
  if (q_total >= 0.4) return Category::moderate;
  if (q_total >= 0.2) return Category::bad;
  return Category::rotten;
}

// ---------------------------------------------------------------------------
// Per-fruit model

struct QualityScore {
  FactorMap q_per_factor;
  double q_total = 0.0;
  Category category = Category::rotten;
  std::int64_t timestamp = 0;
};

struct QualityModel {
  std::string fruit = "banana";
  std::map<Gas, GasQualityParams> gases;
  EnvQualityParams environment;
  QualityWeights weights;

  /// Scores one observation. Absent inputs (faulted channels) are dropped and
  /// the remaining weights renormalized.
  [[nodiscard]] auto score(const std::map<Gas, double>& ppm_per_kg, std::optional<double> temp_c,
                           std::optional<double> rh_pct, std::int64_t timestamp = 0) const
      -> QualityScore {
    QualityScore out;
    out.timestamp = timestamp;
    for (const auto& [gas, x] : ppm_per_kg) {
      auto it = gases.find(gas);
      if (it == gases.end()) {
        throw Error(ErrorCode::invalid_reference,
                    "quality model has no parameters for " + std::string(to_string(gas)));
      }
      out.q_per_factor[factor_of(gas)] = gas_quality(x, it->second);
    }
    if (temp_c) out.q_per_factor[Factor::temperature] = temp_quality(*temp_c, environment);
    if (rh_pct) out.q_per_factor[Factor::humidity] = humidity_quality(*rh_pct, environment);

    std::set<Factor> available;
    for (const auto& [f, q] : out.q_per_factor) available.insert(f);
    const FactorMap w = available.size() == kAllFactors.size()
                            ? weights.as_map()
                            : renormalize_weights(weights, available);
    out.q_total = total_quality(out.q_per_factor, w);
    out.category = categorize(out.q_total);
    return out;
  }
};

inline void validate(const QualityModel& m) {
  for (Gas g : kAllGases) {
    auto it = m.gases.find(g);
    if (it == m.gases.end()) {
      throw Error(ErrorCode::invalid_config,
                  m.fruit + ": missing thresholds for " + std::string(to_string(g)));
    }
    validate(it->second);
  }
  validate(m.environment);
  validate(m.weights);
}

/// Banana thresholds (ppm/kg), storage band 14-16 °C / 90-95 %RH.
inline auto banana_quality_model() -> QualityModel {
  QualityModel m;
  m.fruit = "banana";
  m.gases[Gas::methane] = GasQualityParams::from_thresholds(Gas::methane, 92.0, 177.0);
  m.gases[Gas::ethanol] = GasQualityParams::from_thresholds(Gas::ethanol, 81.0, 108.0);
  m.gases[Gas::ammonia] = GasQualityParams::from_thresholds(Gas::ammonia, 48.0, 111.0);
  return m;
}

}  // namespace enose
