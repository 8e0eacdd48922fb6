#pragma once

// Reliability metrics for a sensor voltage series: polynomial-baseline SNR,
// residual noise, rolling standard deviation and lag-1 autocorrelation.
//
// All standard deviations are population (divide by n). Metrics work on
// sample order; gaps in the timestamps do not change the result.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "enose/error.hpp"

namespace enose {

struct SignalSample {
  std::int64_t timestamp = 0;
  double volts = 0.0;
};

struct SignalSeries {
  std::string channel_id;
  std::vector<SignalSample> samples;
  double nominal_interval_s = 60.0;

  [[nodiscard]] auto values() const -> std::vector<double> {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.volts);
    return out;
  }
};

inline void validate(const SignalSeries& series) {
  for (std::size_t i = 1; i < series.samples.size(); ++i) {
    if (series.samples[i].timestamp <= series.samples[i - 1].timestamp) {
      throw Error(ErrorCode::invalid_series,
                  series.channel_id + ": timestamps must be strictly increasing", i);
    }
  }
  for (const auto& s : series.samples) {
    if (!std::isfinite(s.volts)) {
      throw Error(ErrorCode::invalid_series, series.channel_id + ": non-finite sample");
    }
  }
}

namespace detail {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // population
};

/// Two-pass moments, shifted by the first value so constant input yields
/// exactly zero variance.
inline auto moments(std::span<const double> xs) -> Moments {
  if (xs.empty()) return {};
  const double shift = xs.front();
  double sum = 0.0;
  for (double x : xs) sum += x - shift;
  const double n = static_cast<double>(xs.size());
  const double mean_shifted = sum / n;
  double ss = 0.0;
  for (double x : xs) {
    const double d = (x - shift) - mean_shifted;
    ss += d * d;
  }
  return {shift + mean_shifted, ss / n};
}

}  // namespace detail

inline auto population_std(std::span<const double> xs) -> double {
  return std::sqrt(detail::moments(xs).variance);
}

struct Baseline {
  int degree = 0;
  std::vector<double> values;
  std::vector<double> residuals;
};

/// Least-squares polynomial baseline. The sample index is rescaled to [0, 1]
/// for conditioning and values are offset by the first sample, so a constant
/// series fits exactly.
inline auto fit_baseline(std::span<const double> xs, int degree) -> Baseline {
  if (degree < 1) {
    throw Error(ErrorCode::underdetermined_fit, "baseline degree must be >= 1");
  }
  const auto n = xs.size();
  if (n <= static_cast<std::size_t>(degree)) {
    throw Error(ErrorCode::underdetermined_fit,
                "need more than " + std::to_string(degree) + " samples for a degree-" +
                    std::to_string(degree) + " baseline",
                static_cast<std::size_t>(degree) + 1);
  }
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(degree + 1);
  const double offset = xs.front();
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    double p = 1.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      design(i, j) = p;
      p *= t;
    }
    rhs(i) = xs[static_cast<std::size_t>(i)] - offset;
  }
  const Eigen::VectorXd coeffs = design.colPivHouseholderQr().solve(rhs);
  const Eigen::VectorXd fitted = design * coeffs;

  Baseline out;
  out.degree = degree;
  out.values.resize(n);
  out.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = fitted(static_cast<Eigen::Index>(i)) + offset;
    out.residuals[i] = xs[i] - out.values[i];
  }
  return out;
}

inline auto residual_noise(const Baseline& baseline) -> double {
  return population_std(baseline.residuals);
}

/// Residual spread below this fraction of the signal magnitude is treated as
/// no noise at all.
inline constexpr double kNoiselessRelativeThreshold = 1e-12;

/// std(baseline) / std(residual), an amplitude ratio in V/V.
inline auto snr(const Baseline& baseline) -> double {
  const double noise = population_std(baseline.residuals);
  double scale = 0.0;
  for (double v : baseline.values) scale = std::max(scale, std::abs(v));
  if (noise <= kNoiselessRelativeThreshold * scale || noise == 0.0) {
    throw Error(ErrorCode::noiseless_signal, "residual variance is zero; SNR not computable");
  }
  return population_std(baseline.values) / noise;
}

struct RollingStd {
  std::vector<double> per_window;
  double mean = 0.0;
};

inline constexpr std::size_t kDefaultRollingWindow = 120;

/// Population std over every full sliding window (n - window + 1 windows).
inline auto rolling_std(std::span<const double> xs, std::size_t window = kDefaultRollingWindow)
    -> RollingStd {
  if (window < 2) {
    throw Error(ErrorCode::series_too_short, "rolling window must be >= 2", 2);
  }
  if (xs.size() < window) {
    throw Error(ErrorCode::series_too_short,
                "series of " + std::to_string(xs.size()) + " samples is shorter than window " +
                    std::to_string(window),
                window);
  }
  RollingStd out;
  out.per_window.reserve(xs.size() - window + 1);
  double sum = 0.0;
  for (std::size_t start = 0; start + window <= xs.size(); ++start) {
    const double s = population_std(xs.subspan(start, window));
    out.per_window.push_back(s);
    sum += s;
  }
  out.mean = sum / static_cast<double>(out.per_window.size());
  return out;
}

inline auto lag1_autocorr(std::span<const double> xs) -> double {
  if (xs.size() < 3) {
    throw Error(ErrorCode::series_too_short, "lag-1 autocorrelation needs >= 3 samples", 3);
  }
  const auto m = detail::moments(xs);
  if (m.variance == 0.0) {
    throw Error(ErrorCode::constant_series, "series is constant; autocorrelation undefined");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - m.mean;
    den += d * d;
    if (i + 1 < xs.size()) num += d * (xs[i + 1] - m.mean);
  }
  if (den == 0.0) {
    throw Error(ErrorCode::constant_series, "series is constant; autocorrelation undefined");
  }
  return std::clamp(num / den, -1.0, 1.0);
}

struct SignalReport {
  std::string channel_id;
  std::size_t samples = 0;
  std::optional<double> snr;  // absent when the residual is identically zero
  double residual_noise = 0.0;
  double mean_rolling_std = 0.0;
  std::optional<double> lag1_autocorr;  // absent for a constant series
  int baseline_degree = 3;
  std::size_t window = kDefaultRollingWindow;
};

inline constexpr int kDefaultBaselineDegree = 3;

inline auto signal_report(std::span<const double> xs, std::string channel_id = {},
                          int degree = kDefaultBaselineDegree,
                          std::size_t window = kDefaultRollingWindow) -> SignalReport {
  auto with_context = [&](const Error& e) {
    return Error(e.code(), "channel " + channel_id + ": " + e.what(), e.index());
  };
  try {
    SignalReport report;
    report.channel_id = channel_id;
    report.samples = xs.size();
    report.baseline_degree = degree;
    report.window = window;

    const auto rolling = rolling_std(xs, window);
    report.mean_rolling_std = rolling.mean;
    const auto baseline = fit_baseline(xs, degree);
    report.residual_noise = residual_noise(baseline);
    try {
      report.snr = snr(baseline);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::noiseless_signal) throw;
    }
    try {
      report.lag1_autocorr = lag1_autocorr(xs);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::constant_series) throw;
    }
    return report;
  } catch (const Error& e) {
    throw with_context(e);
  }
}

inline auto signal_report(const SignalSeries& series, int degree = kDefaultBaselineDegree,
                          std::size_t window = kDefaultRollingWindow) -> SignalReport {
  validate(series);
  const auto xs = series.values();
  return signal_report(xs, series.channel_id, degree, window);
}

}  // namespace enose
