#pragma once

// HTTP API over the batch store.
//
//   POST /batches                         register a batch            201 / 409 / 422
//   GET  /batches                         list batch ids
//   GET  /batches/{id}                    batch metadata              200 / 404
//   POST /telemetry                       ingest one record           200 / 404 / 409 / 422
//   GET  /batches/{id}/latest             newest reading              200 / 204 / 404
//   GET  /batches/{id}/history            ?from&to&max_points         200 / 404 / 422
//   GET  /batches/{id}/signal-report      per-channel metrics         200 / 404 / 409
//   GET  /batches/{id}/export.csv         CSV export                  200 / 404
//   GET  /i18n/{locale}                   label bundle (en, bn)       200 / 404
//   GET  /health                          writability + config sum    200 / 503
//
// Errors are {"error": <code>, "message": <text>} plus "required" for
// series-too-short.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "enose/config.hpp"
#include "enose/error.hpp"
#include "enose/locale.hpp"
#include "enose/signal_metrics.hpp"
#include "enose/store.hpp"
#include "enose/telemetry.hpp"

// after Eigen: <resolv.h> defines a _res macro
#include <httplib.h>

namespace enose {

inline constexpr std::size_t kMaxHistoryPoints = 5000;

inline auto to_json(const SignalReport& r) -> Json {
  return Json{{"channel", r.channel_id},
              {"samples", r.samples},
              {"snr", r.snr ? Json(*r.snr) : Json(nullptr)},
              {"snr_status", r.snr ? "ok" : "not_computable"},
              {"residual_noise", r.residual_noise},
              {"mean_rolling_std", r.mean_rolling_std},
              {"lag1_autocorr", r.lag1_autocorr ? Json(*r.lag1_autocorr) : Json(nullptr)},
              {"lag1_status", r.lag1_autocorr ? "ok" : "not_computable"},
              {"baseline_degree", r.baseline_degree},
              {"window", r.window}};
}

inline auto to_json(const LocaleBundle& b) -> Json {
  return Json{{"locale", b.locale}, {"strings", b.strings}};
}

inline auto http_status(ErrorCode code) -> int {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict:
    case ErrorCode::rejected_stale:
    case ErrorCode::series_too_short: return 409;
    case ErrorCode::io_failure: return 500;
    default: return 422;
  }
}

/// Per-channel reports over the stored raw voltages of a batch.
inline auto batch_signal_report(const BatchStore& store, const std::string& batch_id,
                                const SignalParams& params) -> std::vector<SignalReport> {
  const auto raw = store.raw_records(batch_id);
  std::vector<SignalReport> reports;
  for (const auto& [gas, channel] : store.channel_ids(batch_id)) {
    std::vector<double> volts;
    volts.reserve(raw.size());
    for (const auto& r : raw) volts.push_back(r.voltages.at(channel));
    reports.push_back(signal_report(volts, channel, params.degree, params.window));
  }
  return reports;
}

class Service {
public:
  explicit Service(ServiceConfig config)
      : config_(std::move(config)),
        checksum_(config_checksum(config_)),
        store_(std::make_unique<BatchStore>(config_.data_dir, config_)) {
    routes();
  }

  [[nodiscard]] auto store() -> BatchStore& { return *store_; }
  [[nodiscard]] auto config() const -> const ServiceConfig& { return config_; }
  [[nodiscard]] auto server() -> httplib::Server& { return server_; }

  auto listen() -> bool { return server_.listen(config_.host, config_.port); }

  /// Binds an ephemeral port on host and returns it; serve with listen_after_bind().
  auto bind_any_port(const std::string& host = "127.0.0.1") -> int {
    return server_.bind_to_any_port(host);
  }
  auto listen_after_bind() -> bool { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }

private:
  static void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, const Error& e) {
    Json body{{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
    if (e.code() == ErrorCode::series_too_short && e.index()) body["required"] = *e.index();
    send_json(res, http_status(e.code()), body);
  }

  template <typename Handler>
  static auto guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const nlohmann::json::parse_error& e) {
        send_json(res, 400, {{"error", "malformed_json"}, {"message", e.what()}});
      } catch (const std::exception& e) {
        send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
      }
    };
  }

  static auto int_param(const httplib::Request& req, const char* name)
      -> std::optional<std::int64_t> {
    if (!req.has_param(name)) return std::nullopt;
    const auto text = req.get_param_value(name);
    try {
      std::size_t used = 0;
      const auto v = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument(name);
      return v;
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::invalid_record, std::string("query parameter '") + name + "' must be an integer");
    }
  }

  void routes() {
    constexpr auto kId = "([A-Za-z0-9._-]+)";
    const std::string batch_path = std::string("/batches/") + kId;

    server_.Post("/batches", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto batch = batch_from_json(Json::parse(req.body));
      const auto id = store_->register_batch(batch);
      send_json(res, 201, {{"batch_id", id}, {"batch", to_json(store_->batch(id))}});
    }));

    server_.Get("/batches", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"batches", store_->batch_ids()}});
    }));

    server_.Get(batch_path, guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, to_json(store_->batch(req.matches[1])));
    }));

    server_.Post("/telemetry", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto record = telemetry_from_json(Json::parse(req.body));
      send_json(res, 200, to_json(store_->ingest(record)));
    }));

    server_.Get(batch_path + "/latest",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  const auto batch = store_->batch(id);
                  const auto latest = store_->latest(id);
                  if (!latest) {
                    res.status = 204;
                    return;
                  }
                  send_json(res, 200,
                            {{"reading", to_json(*latest)},
                             {"active_sensors", latest->active_sensors()},
                             {"total_sensors", latest->total_sensors()},
                             {"weight_kg", batch.weight_kg}});
                }));

    server_.Get(batch_path + "/history",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  TimeRange range{int_param(req, "from"), int_param(req, "to")};
                  const auto requested = int_param(req, "max_points").value_or(kMaxHistoryPoints);
                  if (requested < 1) {
                    throw Error(ErrorCode::invalid_record, "max_points must be >= 1");
                  }
                  const auto max_points =
                      std::min<std::size_t>(static_cast<std::size_t>(requested), kMaxHistoryPoints);
                  Json readings = Json::array();
                  for (const auto& d : store_->query_history(id, range, max_points)) {
                    readings.push_back(to_json(d));
                  }
                  send_json(res, 200,
                            {{"batch", id}, {"count", readings.size()}, {"readings", readings}});
                }));

    server_.Get(batch_path + "/signal-report",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  Json channels = Json::array();
                  for (const auto& r : batch_signal_report(*store_, id, config_.signal)) {
                    channels.push_back(to_json(r));
                  }
                  send_json(res, 200,
                            {{"batch", id},
                             {"baseline_degree", config_.signal.degree},
                             {"window", config_.signal.window},
                             {"channels", channels}});
                }));

    server_.Get(batch_path + "/export.csv",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  res.set_content(store_->export_csv(req.matches[1]), "text/csv");
                }));

    server_.Get("/i18n/([A-Za-z_-]+)",
                guarded([](const httplib::Request& req, httplib::Response& res) {
                  auto bundle = locale_bundle(req.matches[1].str());
                  if (!bundle) {
                    throw Error(ErrorCode::not_found, "unknown locale '" + req.matches[1].str() + "'");
                  }
                  send_json(res, 200, to_json(*bundle));
                }));

    server_.Get("/health", guarded([this](const httplib::Request&, httplib::Response& res) {
      const bool writable = store_->writable();
      send_json(res, writable ? 200 : 503,
                {{"status", writable ? "ok" : "unavailable"},
                 {"data_dir", config_.data_dir.string()},
                 {"data_dir_writable", writable},
                 {"config_checksum", checksum_},
                 {"default_locale", config_.default_locale}});
    }));

    if (!config_.static_dir.empty()) server_.set_mount_point("/", config_.static_dir.string());
  }

  ServiceConfig config_;
  std::string checksum_;
  std::unique_ptr<BatchStore> store_;
  httplib::Server server_;
};

}  // namespace enose
