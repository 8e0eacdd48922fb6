#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "enose/signal_metrics.hpp"

namespace enose {
namespace {

auto expect_code(ErrorCode code, auto&& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

// Independent population std (plain two-pass, no shift) for the oracles.
auto reference_std(const std::vector<double>& xs) -> double {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

auto white_noise(std::size_t n, double sigma, unsigned seed) -> std::vector<double> {
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> out(n);
  for (auto& x : out) x = dist(gen);
  return out;
}

auto ramp(std::size_t n, double lo, double hi) -> std::vector<double> {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

auto add(std::vector<double> a, const std::vector<double>& b) -> std::vector<double> {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

TEST(FitBaseline, ConstantSeriesIsItsOwnBaseline) {
  const std::vector<double> xs(50, 2.0);
  const auto b = fit_baseline(xs, 3);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_EQ(b.values[i], 2.0);
    EXPECT_EQ(b.residuals[i], 0.0);
  }
}

TEST(FitBaseline, RecoversExactCubic) {
  std::vector<double> xs(400);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double t = static_cast<double>(i) / 399.0;
    xs[i] = 1.2 - 0.7 * t + 2.5 * t * t - 1.9 * t * t * t;
  }
  const auto b = fit_baseline(xs, 3);
  double worst = 0.0;
  for (double r : b.residuals) worst = std::max(worst, std::abs(r));
  EXPECT_LT(worst, 1e-9);
}

TEST(FitBaseline, Underdetermined) {
  const std::vector<double> xs{1.0, 2.0, 3.0};
  expect_code(ErrorCode::underdetermined_fit, [&] { (void)fit_baseline(xs, 3); });
  expect_code(ErrorCode::underdetermined_fit, [&] { (void)fit_baseline(xs, 0); });
  EXPECT_NO_THROW((void)fit_baseline(std::vector<double>{1.0, 2.0, 3.0, 5.0}, 3));
}

TEST(Snr, RampOverWhiteNoise) {
  const std::size_t n = 4000;
  // a linear ramp over [-L, L] has population std L / sqrt(3)
  const double half_span = 0.5 * std::sqrt(3.0);
  const auto xs = add(ramp(n, 1.0 - half_span, 1.0 + half_span), white_noise(n, 0.025, 1));
  const double value = snr(fit_baseline(xs, 3));
  EXPECT_NEAR(value, 20.0, 2.0);
}

TEST(Snr, ConstantBaselineGivesZero) {
  Baseline b;
  b.degree = 3;
  b.values.assign(100, 1.5);
  b.residuals = white_noise(100, 0.01, 2);
  EXPECT_EQ(snr(b), 0.0);
}

TEST(Snr, ZeroResidualIsNotComputable) {
  const std::vector<double> xs(200, 3.3);
  expect_code(ErrorCode::noiseless_signal, [&] { (void)snr(fit_baseline(xs, 3)); });
  const auto line = ramp(200, 0.0, 1.0);
  expect_code(ErrorCode::noiseless_signal, [&] { (void)snr(fit_baseline(line, 3)); });
}

TEST(ResidualNoise, Examples) {
  Baseline zero;
  zero.residuals.assign(10, 0.0);
  EXPECT_EQ(residual_noise(zero), 0.0);

  Baseline alternating;
  for (int i = 0; i < 100; ++i) alternating.residuals.push_back(i % 2 ? -0.2 : 0.2);
  EXPECT_NEAR(residual_noise(alternating), 0.2, 1e-15);

  const auto xs = add(ramp(4000, 1.0, 2.0), white_noise(4000, 0.0031, 3));
  EXPECT_NEAR(residual_noise(fit_baseline(xs, 3)), 0.0031, 0.00031);
}

TEST(RollingStd, ConstantSeries) {
  const std::vector<double> xs(300, 0.1);
  const auto r = rolling_std(xs, 120);
  EXPECT_EQ(r.per_window.size(), 181U);
  for (double s : r.per_window) EXPECT_EQ(s, 0.0);
  EXPECT_EQ(r.mean, 0.0);
}

TEST(RollingStd, WindowCount) {
  const auto xs = white_noise(121, 1.0, 4);
  EXPECT_EQ(rolling_std(xs, 120).per_window.size(), 2U);
  const auto long_series = white_noise(4000, 1.0, 5);
  EXPECT_EQ(rolling_std(long_series, 120).per_window.size(), 4000U - 119U);
}

TEST(RollingStd, MatchesReferencePerWindow) {
  const auto xs = add(ramp(500, 0.0, 3.0), white_noise(500, 0.05, 6));
  const auto r = rolling_std(xs, 120);
  for (std::size_t start : {0UL, 17UL, 380UL}) {
    const std::vector<double> window(xs.begin() + static_cast<long>(start),
                                     xs.begin() + static_cast<long>(start) + 120);
    EXPECT_NEAR(r.per_window[start], reference_std(window), 1e-12);
  }
}

TEST(RollingStd, WhiteNoiseMeanNearSigma) {
  const auto xs = white_noise(2000, 0.01, 7);
  EXPECT_NEAR(rolling_std(xs, 120).mean, 0.01, 0.0015);
}

TEST(RollingStd, TooShort) {
  const auto xs = white_noise(119, 1.0, 8);
  try {
    (void)rolling_std(xs, 120);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::series_too_short);
    EXPECT_EQ(e.index(), 120U);
  }
}

TEST(Lag1Autocorr, SlowTrendNearOne) {
  const auto xs = add(ramp(4000, 0.5, 2.5), white_noise(4000, 0.002, 9));
  EXPECT_GT(lag1_autocorr(xs), 0.99);
}

TEST(Lag1Autocorr, WhiteNoiseNearZero) {
  EXPECT_LT(std::abs(lag1_autocorr(white_noise(4000, 1.0, 10))), 0.05);
}

TEST(Lag1Autocorr, AlternatingClosedForm) {
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) xs.push_back(i % 2 ? -1.0 : 1.0);
  // mean 0, numerator -(n-1), denominator n
  EXPECT_NEAR(lag1_autocorr(xs), -999.0 / 1000.0, 1e-12);
}

TEST(Lag1Autocorr, Errors) {
  expect_code(ErrorCode::constant_series, [] { (void)lag1_autocorr(std::vector<double>(10, 0.7)); });
  expect_code(ErrorCode::series_too_short, [] { (void)lag1_autocorr(std::vector<double>{1.0, 2.0}); });
}

TEST(SignalMetricsProperties, OffsetScaleAndReversal) {
  const auto base = add(ramp(1500, 0.2, 1.4), white_noise(1500, 0.03, 11));
  const auto report = signal_report(base, "x");
  ASSERT_TRUE(report.snr && report.lag1_autocorr);

  std::vector<double> shifted = base;
  for (auto& x : shifted) x += 2.75;
  const auto shifted_report = signal_report(shifted, "x");
  EXPECT_NEAR(*shifted_report.snr / *report.snr, 1.0, 1e-9);

  for (double k : {0.1, 3.0, 250.0}) {
    std::vector<double> scaled = base;
    for (auto& x : scaled) x *= k;
    const auto r = signal_report(scaled, "x");
    EXPECT_NEAR(r.residual_noise / report.residual_noise, k, 1e-9 * k);
    EXPECT_NEAR(r.mean_rolling_std / report.mean_rolling_std, k, 1e-9 * k);
    EXPECT_NEAR(*r.snr, *report.snr, 1e-9 * *report.snr);
    EXPECT_NEAR(*r.lag1_autocorr, *report.lag1_autocorr, 1e-12);
  }

  std::vector<double> reversed(base.rbegin(), base.rend());
  EXPECT_NEAR(lag1_autocorr(reversed), *report.lag1_autocorr, 1e-12);

  // least-squares residual can never spread more than the raw series
  EXPECT_LE(report.residual_noise, reference_std(base));

  // deterministic
  const auto again = signal_report(base, "x");
  EXPECT_EQ(*again.snr, *report.snr);
  EXPECT_EQ(again.mean_rolling_std, report.mean_rolling_std);
}

TEST(SignalReport, RipeningSigmoidTrace) {
  std::vector<double> xs(4000);
  std::mt19937 gen(12);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double t = static_cast<double>(i) / 3999.0;
    xs[i] = 0.9 + 1.4 / (1.0 + std::exp(-10.0 * (t - 0.55))) + noise(gen);
  }
  const auto r = signal_report(xs, "mq4");
  EXPECT_EQ(r.channel_id, "mq4");
  ASSERT_TRUE(r.snr.has_value());
  EXPECT_GT(*r.snr, 1.0);
  EXPECT_TRUE(std::isfinite(r.residual_noise));
  EXPECT_TRUE(std::isfinite(r.mean_rolling_std));
  ASSERT_TRUE(r.lag1_autocorr.has_value());
  EXPECT_TRUE(std::isfinite(*r.lag1_autocorr));
  EXPECT_EQ(r.baseline_degree, 3);
  EXPECT_EQ(r.window, 120U);
}

TEST(SignalReport, ConstantTrace) {
  const auto r = signal_report(std::vector<double>(500, 1.25), "mq3");
  EXPECT_EQ(r.residual_noise, 0.0);
  EXPECT_EQ(r.mean_rolling_std, 0.0);
  EXPECT_FALSE(r.lag1_autocorr.has_value());
  EXPECT_FALSE(r.snr.has_value());
}

TEST(SignalReport, Mq135LikeRatio) {
  // cubic trend (exactly representable by the baseline) plus white noise
  // sized so std(trend) / std(noise) = 44.24
  const std::size_t n = 4000;
  std::vector<double> trend(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    trend[i] = 1.0 + 0.4 * t + 1.8 * t * t - 1.1 * t * t * t;
  }
  const double sigma = reference_std(trend) / 44.24;
  const auto r = signal_report(add(trend, white_noise(n, sigma, 13)), "mq135");
  ASSERT_TRUE(r.snr.has_value());
  EXPECT_NEAR(*r.snr, 44.24, 0.10 * 44.24);
}

TEST(SignalReport, ErrorsCarryChannelContext) {
  try {
    (void)signal_report(std::vector<double>(10, 1.0), "mq3");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::series_too_short);
    EXPECT_NE(std::string(e.what()).find("mq3"), std::string::npos);
  }
}

TEST(SignalSeries, RejectsNonIncreasingTimestamps) {
  SignalSeries s{"mq3", {{0, 1.0}, {60, 1.1}, {60, 1.2}}, 60.0};
  expect_code(ErrorCode::invalid_series, [&] { validate(s); });
}

}  // namespace
}  // namespace enose
