#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace enose {

enum class ErrorCode {
  // sensor calibration
  out_of_range_voltage,
  invalid_ratio,
  invalid_point,
  degenerate_fit,
  invalid_curve,
  invalid_channel,
  invalid_weight,
  // quality model
  invalid_threshold,
  invalid_concentration,
  invalid_reading,
  invalid_weights,
  invalid_score,
  // signal metrics
  underdetermined_fit,
  noiseless_signal,
  series_too_short,
  constant_series,
  invalid_series,
  // simulator
  invalid_profile,
  unencodable_profile,
  replay_aborted,
  // store / service
  not_found,
  conflict,
  invalid_reference,
  rejected_stale,
  invalid_record,
  invalid_config,
  io_failure,
};

constexpr auto to_string(ErrorCode code) -> std::string_view {
  switch (code) {
    case ErrorCode::out_of_range_voltage: return "out_of_range_voltage";
    case ErrorCode::invalid_ratio: return "invalid_ratio";
    case ErrorCode::invalid_point: return "invalid_point";
    case ErrorCode::degenerate_fit: return "degenerate_fit";
    case ErrorCode::invalid_curve: return "invalid_curve";
    case ErrorCode::invalid_channel: return "invalid_channel";
    case ErrorCode::invalid_weight: return "invalid_weight";
    case ErrorCode::invalid_threshold: return "invalid_threshold";
    case ErrorCode::invalid_concentration: return "invalid_concentration";
    case ErrorCode::invalid_reading: return "invalid_reading";
    case ErrorCode::invalid_weights: return "invalid_weights";
    case ErrorCode::invalid_score: return "invalid_score";
    case ErrorCode::underdetermined_fit: return "underdetermined_fit";
    case ErrorCode::noiseless_signal: return "noiseless_signal";
    case ErrorCode::series_too_short: return "series_too_short";
    case ErrorCode::constant_series: return "constant_series";
    case ErrorCode::invalid_series: return "invalid_series";
    case ErrorCode::invalid_profile: return "invalid_profile";
    case ErrorCode::unencodable_profile: return "unencodable_profile";
    case ErrorCode::replay_aborted: return "replay_aborted";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::invalid_reference: return "invalid_reference";
    case ErrorCode::rejected_stale: return "rejected_stale";
    case ErrorCode::invalid_record: return "invalid_record";
    case ErrorCode::invalid_config: return "invalid_config";
    case ErrorCode::io_failure: return "io_failure";
  }
  return "unknown";
}

/// Every failure in the library is reported as an `Error` carrying a
/// machine-readable code. `index` is set where a position is meaningful
/// (failing replay record, required sample count for too-short series).
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), index_(index) {}

  [[nodiscard]] auto code() const noexcept -> ErrorCode { return code_; }
  [[nodiscard]] auto index() const noexcept -> std::optional<std::size_t> { return index_; }

private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace enose
