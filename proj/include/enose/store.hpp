#pragma once

// Append-only per-batch telemetry store.
//
// Layout under the data directory:
//   batches/<id>/batch.json     batch metadata, written once
//   batches/<id>/raw.jsonl      one telemetry line per accepted record
//   batches/<id>/derived.jsonl  one derived reading per raw line, same order
//
// A record is appended to raw.jsonl before its derived line. On open, a
// trailing line without its newline is a torn write: it is cut off, and
// derived lines missing for surviving raw lines are recomputed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "enose/calibration.hpp"
#include "enose/config.hpp"
#include "enose/csv.hpp"
#include "enose/error.hpp"
#include "enose/quality.hpp"
#include "enose/telemetry.hpp"

namespace enose {

struct Batch {
  std::string batch_id;
  std::string fruit = "banana";
  double weight_kg = 0.0;
  std::int64_t started_at = 0;
  std::string quality_config_id = "banana";
  std::string calibration_id = "default";

  auto operator==(const Batch&) const -> bool = default;
};

inline auto to_json(const Batch& b) -> Json {
  return Json{{"id", b.batch_id},          {"fruit", b.fruit},
              {"weight_kg", b.weight_kg},  {"started_at", b.started_at},
              {"quality_config", b.quality_config_id}, {"calibration", b.calibration_id}};
}

/// Missing quality_config defaults to the fruit name, calibration to "default".
inline auto batch_from_json(const Json& j) -> Batch {
  constexpr auto code = ErrorCode::invalid_record;
  if (!j.is_object()) throw Error(code, "batch must be a JSON object");
  Batch b;
  try {
    b.batch_id = detail::require(j, "id", code).get<std::string>();
    b.fruit = j.value("fruit", b.fruit);
    b.weight_kg = detail::require_number(j, "weight_kg", code);
    b.started_at = j.value("started_at", b.started_at);
    b.quality_config_id = j.value("quality_config", b.fruit);
    b.calibration_id = j.value("calibration", b.calibration_id);
  } catch (const nlohmann::json::exception& e) {
    throw Error(code, std::string("batch field has the wrong type: ") + e.what());
  }
  return b;
}

inline auto valid_batch_id(const std::string& id) -> bool {
  if (id.empty() || id.size() > 128 || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '-' || c == '_' || c == '.';
  });
}

/// Computes the derived reading of one raw record. A gas channel whose
/// voltage is outside (0, Vcc) is marked faulted; a temperature or humidity
/// value that cannot be scored marks the environment sensor faulted. Faulted
/// inputs are left out of the quality total and the remaining weights are
/// renormalized. Scoring uses the sensitivity-curve ppm, also when it lies
/// outside the rated detection range (flagged as clamped).
inline auto derive_reading(const TelemetryRecord& record, const Batch& batch,
                           const Calibration& calibration, const QualityModel& model)
    -> DerivedReading {
  DerivedReading d;
  d.batch_id = record.batch_id;
  d.timestamp = record.timestamp;
  std::map<Gas, double> per_kg;
  for (const auto& ch : calibration.channels) {
    auto it = record.voltages.find(ch.channel_id);
    if (it == record.voltages.end()) {
      throw Error(ErrorCode::invalid_record, "missing voltage for channel " + ch.channel_id);
    }
    GasReading r;
    r.channel_id = ch.channel_id;
    r.volts = it->second;
    try {
      const auto c = voltage_to_ppm(r.volts, ch);
      r.ppm = c.raw_ppm;
      r.ppm_clamped = c.ppm;
      r.clamped = c.clamped;
      r.ppm_per_kg = normalize_per_kg(c.raw_ppm, batch.weight_kg);
      per_kg[ch.gas] = *r.ppm_per_kg;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::out_of_range_voltage) throw;
      r.faulted = true;
    }
    d.gases[ch.gas] = r;
  }
  d.temp_c = record.temp_c;
  d.rh_pct = record.rh_pct;
  d.env_faulted = !std::isfinite(record.temp_c) || !(record.rh_pct >= 0.0 && record.rh_pct <= 100.0);
  if (per_kg.empty() && d.env_faulted) {
    throw Error(ErrorCode::invalid_record, "every sensor channel is faulted; nothing to score");
  }
  std::optional<double> temp;
  std::optional<double> rh;
  if (!d.env_faulted) {
    temp = record.temp_c;
    rh = record.rh_pct;
  }
  d.quality = model.score(per_kg, temp, rh, record.timestamp);
  return d;
}

/// Uniform-stride selection of at most `max_points` indices out of `count`,
/// always keeping the first and last. max_points == 1 keeps only the last.
inline auto downsample_indices(std::size_t count, std::size_t max_points) -> std::vector<std::size_t> {
  std::vector<std::size_t> idx;
  if (count == 0 || max_points == 0) return idx;
  if (count <= max_points) {
    idx.resize(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    return idx;
  }
  if (max_points == 1) return {count - 1};
  idx.reserve(max_points);
  const double step = static_cast<double>(count - 1) / static_cast<double>(max_points - 1);
  for (std::size_t i = 0; i < max_points; ++i) {
    const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(i) * step));
    if (idx.empty() || k != idx.back()) idx.push_back(std::min(k, count - 1));
  }
  idx.back() = count - 1;
  return idx;
}

struct TimeRange {
  std::optional<std::int64_t> from;  // inclusive
  std::optional<std::int64_t> to;    // inclusive

  [[nodiscard]] auto contains(std::int64_t ts) const -> bool {
    return (!from || ts >= *from) && (!to || ts <= *to);
  }
};

class BatchStore {
public:
  /// Opens (creating if needed) the data directory and replays every batch
  /// log found there.
  BatchStore(std::filesystem::path data_dir, std::map<std::string, Calibration> calibrations,
             std::map<std::string, QualityModel> quality_models)
      : root_(std::move(data_dir)),
        calibrations_(std::move(calibrations)),
        quality_models_(std::move(quality_models)) {
    std::error_code ec;
    std::filesystem::create_directories(root_ / "batches", ec);
    if (ec) throw Error(ErrorCode::io_failure, "cannot create " + (root_ / "batches").string());
    for (const auto& entry : std::filesystem::directory_iterator(root_ / "batches")) {
      if (entry.is_directory() && std::filesystem::exists(entry.path() / "batch.json")) {
        load_batch(entry.path());
      }
    }
  }

  BatchStore(std::filesystem::path data_dir, const ServiceConfig& config)
      : BatchStore(std::move(data_dir), config.calibrations, config.quality_models) {}

  [[nodiscard]] auto data_dir() const -> const std::filesystem::path& { return root_; }

  auto register_batch(const Batch& batch) -> std::string {
    if (!valid_batch_id(batch.batch_id)) {
      throw Error(ErrorCode::invalid_record,
                  "batch id must be 1-128 characters of [A-Za-z0-9._-]");
    }
    if (!(std::isfinite(batch.weight_kg) && batch.weight_kg > 0.0)) {
      throw Error(ErrorCode::invalid_weight, "batch weight must be > 0 kg");
    }
    if (!calibrations_.contains(batch.calibration_id)) {
      throw Error(ErrorCode::invalid_reference, "unknown calibration '" + batch.calibration_id + "'");
    }
    if (!quality_models_.contains(batch.quality_config_id)) {
      throw Error(ErrorCode::invalid_reference,
                  "unknown quality config '" + batch.quality_config_id + "'");
    }
    std::unique_lock lock(batches_mutex_);
    if (batches_.contains(batch.batch_id)) {
      throw Error(ErrorCode::conflict, "batch '" + batch.batch_id + "' already exists");
    }
    const auto dir = root_ / "batches" / batch.batch_id;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io_failure, "cannot create " + dir.string());
    {
      const auto tmp = dir / "batch.json.tmp";
      std::ofstream out(tmp, std::ios::trunc);
      out << to_json(batch).dump() << '\n';
      out.close();
      if (!out) throw Error(ErrorCode::io_failure, "cannot write " + tmp.string());
      std::filesystem::rename(tmp, dir / "batch.json");
    }
    auto state = std::make_shared<BatchState>();
    state->batch = batch;
    state->dir = dir;
    open_logs(*state);
    batches_.emplace(batch.batch_id, std::move(state));
    return batch.batch_id;
  }

  [[nodiscard]] auto batch(const std::string& batch_id) const -> Batch {
    return state(batch_id)->batch;
  }

  [[nodiscard]] auto batch_ids() const -> std::vector<std::string> {
    std::shared_lock lock(batches_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, s] : batches_) ids.push_back(id);
    return ids;
  }

  /// Appends the raw record and its derived reading. Re-sending a record
  /// identical to a stored one returns the stored reading without writing.
  auto ingest(const TelemetryRecord& record) -> DerivedReading {
    auto s = state(record.batch_id);
    std::unique_lock lock(s->mutex);
    if (record.timestamp < s->batch.started_at) {
      throw Error(ErrorCode::rejected_stale, "timestamp precedes the batch start");
    }
    if (!s->raw.empty()) {
      const auto last_ts = s->raw.back().timestamp;
      if (record.timestamp < last_ts) {
        throw Error(ErrorCode::rejected_stale,
                    "timestamp " + std::to_string(record.timestamp) + " is older than the last stored " +
                        std::to_string(last_ts));
      }
      for (std::size_t i = s->raw.size(); i-- > 0 && s->raw[i].timestamp == record.timestamp;) {
        if (s->raw[i] == record) return s->derived[i];
      }
    }
    const auto& cal = calibrations_.at(s->batch.calibration_id);
    if (record.voltages.size() != cal.channels.size()) {
      throw Error(ErrorCode::invalid_record, "record must carry exactly the calibrated channels");
    }
    auto derived = derive_reading(record, s->batch, cal, quality_models_.at(s->batch.quality_config_id));
    append_line(s->raw_out, to_json(record), s->dir / "raw.jsonl");
    append_line(s->derived_out, to_json(derived), s->dir / "derived.jsonl");
    s->raw.push_back(record);
    s->derived.push_back(derived);
    return derived;
  }

  [[nodiscard]] auto query_history(const std::string& batch_id, const TimeRange& range,
                                   std::size_t max_points) const -> std::vector<DerivedReading> {
    if (max_points < 1) throw Error(ErrorCode::invalid_record, "max_points must be >= 1");
    auto s = state(batch_id);
    std::shared_lock lock(s->mutex);
    std::vector<const DerivedReading*> selected;
    for (const auto& d : s->derived) {
      if (range.contains(d.timestamp)) selected.push_back(&d);
    }
    std::vector<DerivedReading> out;
    for (auto i : downsample_indices(selected.size(), max_points)) out.push_back(*selected[i]);
    return out;
  }

  [[nodiscard]] auto latest(const std::string& batch_id) const -> std::optional<DerivedReading> {
    auto s = state(batch_id);
    std::shared_lock lock(s->mutex);
    if (s->derived.empty()) return std::nullopt;
    return s->derived.back();
  }

  [[nodiscard]] auto raw_records(const std::string& batch_id) const -> std::vector<TelemetryRecord> {
    auto s = state(batch_id);
    std::shared_lock lock(s->mutex);
    return s->raw;
  }

  [[nodiscard]] auto derived_readings(const std::string& batch_id) const
      -> std::vector<DerivedReading> {
    auto s = state(batch_id);
    std::shared_lock lock(s->mutex);
    return s->derived;
  }

  /// Derived readings rebuilt from the raw log and the current config.
  [[nodiscard]] auto recompute(const std::string& batch_id) const -> std::vector<DerivedReading> {
    auto s = state(batch_id);
    std::shared_lock lock(s->mutex);
    std::vector<DerivedReading> out;
    out.reserve(s->raw.size());
    for (const auto& r : s->raw) out.push_back(derive(s->batch, r));
    return out;
  }

  [[nodiscard]] auto channel_ids(const std::string& batch_id) const -> std::map<Gas, std::string> {
    const auto b = batch(batch_id);
    std::map<Gas, std::string> out;
    for (const auto& ch : calibrations_.at(b.calibration_id).channels) out[ch.gas] = ch.channel_id;
    return out;
  }

  void export_csv(const std::string& batch_id, std::ostream& out) const {
    const auto channels = channel_ids(batch_id);
    write_csv(out, channels, derived_readings(batch_id));
  }

  [[nodiscard]] auto export_csv(const std::string& batch_id) const -> std::string {
    std::ostringstream out;
    export_csv(batch_id, out);
    return out.str();
  }

  /// True when a file can be created in the data directory.
  [[nodiscard]] auto writable() const -> bool {
    const auto probe = root_ / ".write-probe";
    {
      std::ofstream out(probe, std::ios::trunc);
      out << "ok";
      out.close();
      if (!out) return false;
    }
    std::error_code ec;
    std::filesystem::remove(probe, ec);
    return true;
  }

private:
  struct BatchState {
    Batch batch;
    std::filesystem::path dir;
    std::vector<TelemetryRecord> raw;
    std::vector<DerivedReading> derived;
    std::ofstream raw_out;
    std::ofstream derived_out;
    mutable std::shared_mutex mutex;
  };

  [[nodiscard]] auto state(const std::string& batch_id) const -> std::shared_ptr<BatchState> {
    std::shared_lock lock(batches_mutex_);
    auto it = batches_.find(batch_id);
    if (it == batches_.end()) throw Error(ErrorCode::not_found, "unknown batch '" + batch_id + "'");
    return it->second;
  }

  [[nodiscard]] auto derive(const Batch& b, const TelemetryRecord& r) const -> DerivedReading {
    return derive_reading(r, b, calibrations_.at(b.calibration_id),
                          quality_models_.at(b.quality_config_id));
  }

  static void append_line(std::ofstream& out, const Json& j, const std::filesystem::path& path) {
    const auto line = j.dump() + '\n';
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::io_failure, "append to " + path.string() + " failed");
  }

  static void open_logs(BatchState& s) {
    s.raw_out.open(s.dir / "raw.jsonl", std::ios::app | std::ios::binary);
    s.derived_out.open(s.dir / "derived.jsonl", std::ios::app | std::ios::binary);
    if (!s.raw_out || !s.derived_out) {
      throw Error(ErrorCode::io_failure, "cannot open logs in " + s.dir.string());
    }
  }

  /// Complete lines of a log; a torn trailing line is truncated away.
  static auto read_complete_lines(const std::filesystem::path& path) -> std::vector<std::string> {
    std::vector<std::string> lines;
    if (!std::filesystem::exists(path)) return lines;
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t start = 0;
    std::size_t kept = 0;
    while (start < content.size()) {
      const auto nl = content.find('\n', start);
      if (nl == std::string::npos) break;
      lines.push_back(content.substr(start, nl - start));
      start = nl + 1;
      kept = start;
    }
    if (kept != content.size()) std::filesystem::resize_file(path, kept);
    return lines;
  }

  void load_batch(const std::filesystem::path& dir) {
    auto s = std::make_shared<BatchState>();
    s->dir = dir;
    try {
      s->batch = batch_from_json(read_json_file(dir / "batch.json"));
    } catch (const Error& e) {
      throw Error(ErrorCode::io_failure, dir.string() + ": unreadable batch.json: " + e.what());
    }
    if (!calibrations_.contains(s->batch.calibration_id) ||
        !quality_models_.contains(s->batch.quality_config_id)) {
      throw Error(ErrorCode::invalid_reference,
                  "stored batch '" + s->batch.batch_id + "' references a config that no longer exists");
    }
    const auto raw_lines = read_complete_lines(dir / "raw.jsonl");
    for (std::size_t i = 0; i < raw_lines.size(); ++i) {
      try {
        s->raw.push_back(telemetry_from_json(Json::parse(raw_lines[i])));
      } catch (const std::exception& e) {
        throw Error(ErrorCode::io_failure,
                    (dir / "raw.jsonl").string() + " line " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    auto derived_lines = read_complete_lines(dir / "derived.jsonl");
    if (derived_lines.size() > s->raw.size()) {
      throw Error(ErrorCode::io_failure, dir.string() + ": derived log is ahead of the raw log");
    }
    for (std::size_t i = 0; i < derived_lines.size(); ++i) {
      try {
        s->derived.push_back(derived_from_json(Json::parse(derived_lines[i])));
      } catch (const std::exception& e) {
        throw Error(ErrorCode::io_failure, (dir / "derived.jsonl").string() + " line " +
                                               std::to_string(i + 1) + ": " + e.what());
      }
    }
    open_logs(*s);
    for (std::size_t i = s->derived.size(); i < s->raw.size(); ++i) {
      auto d = derive(s->batch, s->raw[i]);
      append_line(s->derived_out, to_json(d), dir / "derived.jsonl");
      s->derived.push_back(std::move(d));
    }
    batches_.emplace(s->batch.batch_id, std::move(s));
  }

  std::filesystem::path root_;
  std::map<std::string, Calibration> calibrations_;
  std::map<std::string, QualityModel> quality_models_;
  mutable std::shared_mutex batches_mutex_;
  std::map<std::string, std::shared_ptr<BatchState>> batches_;
};

}  // namespace enose
