#include <filesystem>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "enose/service.hpp"
#include "enose/simulator.hpp"

namespace enose {
namespace {

namespace fs = std::filesystem;

// Structural checks on response bodies.
void expect_reading_shape(const Json& d) {
  ASSERT_TRUE(d.is_object());
  EXPECT_TRUE(d.at("batch").is_string());
  EXPECT_TRUE(d.at("ts").is_number_integer());
  EXPECT_TRUE(d.at("env_faulted").is_boolean());
  EXPECT_TRUE(d.at("active_sensors").is_number_unsigned());
  EXPECT_TRUE(d.at("total_sensors").is_number_unsigned());
  ASSERT_TRUE(d.at("gases").is_object());
  EXPECT_EQ(d.at("gases").size(), 3U);
  for (const auto& [gas, g] : d.at("gases").items()) {
    EXPECT_TRUE(parse_gas(gas).has_value()) << gas;
    EXPECT_TRUE(g.at("channel").is_string());
    EXPECT_TRUE(g.at("volts").is_number());
    EXPECT_TRUE(g.at("faulted").is_boolean());
    EXPECT_TRUE(g.at("clamped").is_boolean());
    for (const char* k : {"ppm", "ppm_clamped", "ppm_per_kg"}) {
      EXPECT_TRUE(g.at(k).is_number() || (g.at(k).is_null() && g.at("faulted").get<bool>())) << k;
    }
  }
  const auto& q = d.at("quality");
  EXPECT_TRUE(q.at("q_total").is_number());
  EXPECT_GE(q.at("q_total").get<double>(), 0.0);
  EXPECT_LE(q.at("q_total").get<double>(), 1.0);
  EXPECT_TRUE(parse_category(q.at("category").get<std::string>()).has_value());
  ASSERT_TRUE(q.at("factors").is_object());
  for (const auto& [name, v] : q.at("factors").items()) {
    EXPECT_TRUE(v.is_number()) << name;
  }
}

void expect_error_shape(const httplib::Result& res, int status, const std::string& code) {
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, status) << res->body;
  const auto j = Json::parse(res->body);
  EXPECT_EQ(j.at("error"), code);
  EXPECT_TRUE(j.at("message").is_string());
}

class ServiceTest : public ::testing::Test {
protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("enose-service-" + std::string(info->name()) + "-" + std::to_string(std::random_device{}()));
    ServiceConfig config;
    config.data_dir = dir_;
    service_ = std::make_unique<Service>(config);
    port_ = service_->bind_any_port();
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { service_->listen_after_bind(); });
    service_->server().wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override {
    service_->stop();
    thread_.join();
    fs::remove_all(dir_);
  }

  auto post(const std::string& path, const Json& body) -> httplib::Result {
    return client_->Post(path, body.dump(), "application/json");
  }

  auto get(const std::string& path) -> httplib::Result { return client_->Get(path); }

  auto register_banana(const std::string& id = "b1") -> httplib::Result {
    return post("/batches", {{"id", id}, {"fruit", "banana"}, {"weight_kg", 0.765},
                             {"started_at", 1'700'000'000}});
  }

  static auto trace(double hours, double noise = 0.0) -> std::vector<TelemetryRecord> {
    auto p = banana_profile("b1");
    p.duration_h = hours;
    p.voltage_noise_std = noise;
    p.seed = 21;
    return generate_trace(p, default_calibration());
  }

  fs::path dir_;
  std::unique_ptr<Service> service_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(ServiceTest, RegisterBatch) {
  auto res = register_banana();
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  const auto j = Json::parse(res->body);
  EXPECT_EQ(j.at("batch_id"), "b1");
  EXPECT_EQ(j.at("batch").at("weight_kg"), 0.765);
  EXPECT_EQ(j.at("batch").at("quality_config"), "banana");

  expect_error_shape(register_banana(), 409, "conflict");
  expect_error_shape(post("/batches", {{"id", "b2"}, {"weight_kg", 0}}), 422, "invalid_weight");
  expect_error_shape(post("/batches", {{"id", "b3"}, {"weight_kg", 1}, {"quality_config", "kiwi"}}),
                     422, "invalid_reference");
  expect_error_shape(post("/batches", {{"weight_kg", 1}}), 422, "invalid_record");
  auto bad = client_->Post("/batches", "{not json", "application/json");
  expect_error_shape(bad, 400, "malformed_json");

  res = get("/batches");
  ASSERT_TRUE(res);
  EXPECT_EQ(Json::parse(res->body).at("batches"), Json::array({"b1"}));
  res = get("/batches/b1");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body).at("id"), "b1");
  expect_error_shape(get("/batches/zz"), 404, "not_found");
}

TEST_F(ServiceTest, TelemetryIngest) {
  register_banana();
  const auto t = trace(1.0);
  auto res = post("/telemetry", to_json(t[1]));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto body = Json::parse(res->body);
  expect_reading_shape(body);
  EXPECT_EQ(body.at("quality").at("category"), "Excellent");

  // duplicate is accepted and returns the same reading
  res = post("/telemetry", to_json(t[1]));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body), body);

  expect_error_shape(post("/telemetry", to_json(t[0])), 409, "rejected_stale");
  auto unknown = t[2];
  unknown.batch_id = "zz";
  expect_error_shape(post("/telemetry", to_json(unknown)), 404, "not_found");
  auto j = to_json(t[2]);
  j.erase("v");
  expect_error_shape(post("/telemetry", j), 422, "invalid_record");
  j = to_json(t[2]);
  j["ts"] = "yesterday";
  expect_error_shape(post("/telemetry", j), 422, "invalid_record");
}

TEST_F(ServiceTest, Latest) {
  register_banana();
  auto res = get("/batches/b1/latest");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 204);
  EXPECT_TRUE(res->body.empty());

  auto r = trace(1.0)[4];
  r.voltages.at("mq135") = 5.0;
  post("/telemetry", to_json(r));
  res = get("/batches/b1/latest");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto j = Json::parse(res->body);
  EXPECT_EQ(j.at("active_sensors"), 3);
  EXPECT_EQ(j.at("total_sensors"), 4);
  EXPECT_EQ(j.at("weight_kg"), 0.765);
  expect_reading_shape(j.at("reading"));
  EXPECT_TRUE(j.at("reading").at("gases").at("ammonia").at("faulted").get<bool>());
  EXPECT_TRUE(j.at("reading").at("gases").at("ammonia").at("ppm").is_null());
  EXPECT_FALSE(j.at("reading").at("quality").at("factors").contains("ammonia"));
  expect_error_shape(get("/batches/zz/latest"), 404, "not_found");
}

TEST_F(ServiceTest, History) {
  register_banana();
  const auto t = trace(2.0);
  for (const auto& r : t) service_->store().ingest(r);

  auto res = get("/batches/b1/history");
  ASSERT_TRUE(res);
  auto j = Json::parse(res->body);
  EXPECT_EQ(j.at("count"), t.size());
  EXPECT_EQ(j.at("readings").size(), t.size());
  expect_reading_shape(j.at("readings").front());

  res = get("/batches/b1/history?max_points=10");
  j = Json::parse(res->body);
  ASSERT_EQ(j.at("count"), 10);
  EXPECT_EQ(j.at("readings").front().at("ts"), t.front().timestamp);
  EXPECT_EQ(j.at("readings").back().at("ts"), t.back().timestamp);

  res = get("/batches/b1/history?max_points=1");
  j = Json::parse(res->body);
  ASSERT_EQ(j.at("count"), 1);
  EXPECT_EQ(j.at("readings").front().at("ts"), t.back().timestamp);

  const auto from = std::to_string(t[10].timestamp);
  const auto to = std::to_string(t[14].timestamp);
  res = get("/batches/b1/history?from=" + from + "&to=" + to);
  EXPECT_EQ(Json::parse(res->body).at("count"), 5);
  res = get("/batches/b1/history?from=0&to=5");
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body).at("count"), 0);

  expect_error_shape(get("/batches/b1/history?max_points=0"), 422, "invalid_record");
  expect_error_shape(get("/batches/b1/history?from=soon"), 422, "invalid_record");
  expect_error_shape(get("/batches/zz/history"), 404, "not_found");
}

TEST_F(ServiceTest, HistoryIsCapped) {
  register_banana();
  for (const auto& r : trace(84.0)) service_->store().ingest(r);
  const auto res = get("/batches/b1/history?max_points=100000");
  ASSERT_TRUE(res);
  const auto j = Json::parse(res->body);
  EXPECT_EQ(j.at("count"), kMaxHistoryPoints);
  EXPECT_EQ(j.at("readings").back().at("ts"), 1'700'000'000 + 84 * 3600);
}

TEST_F(ServiceTest, SignalReportFullBatch) {
  register_banana();
  for (const auto& r : trace(84.0, 0.005)) service_->store().ingest(r);
  const auto res = get("/batches/b1/signal-report");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto j = Json::parse(res->body);
  EXPECT_EQ(j.at("baseline_degree"), 3);
  EXPECT_EQ(j.at("window"), 120);
  ASSERT_EQ(j.at("channels").size(), 3U);
  for (const auto& ch : j.at("channels")) {
    EXPECT_EQ(ch.at("samples"), 5041);
    EXPECT_EQ(ch.at("snr_status"), "ok");
    EXPECT_TRUE(ch.at("snr").is_number());
    EXPECT_GT(ch.at("snr").get<double>(), 0.0);
    EXPECT_TRUE(ch.at("residual_noise").is_number());
    EXPECT_TRUE(ch.at("mean_rolling_std").is_number());
    EXPECT_EQ(ch.at("lag1_status"), "ok");
    EXPECT_TRUE(ch.at("lag1_autocorr").is_number());
  }
}

TEST_F(ServiceTest, SignalReportShortAndConstant) {
  register_banana();
  const auto t = trace(84.0);
  for (std::size_t i = 0; i < 10; ++i) service_->store().ingest(t[i]);
  const auto res = get("/batches/b1/signal-report");
  expect_error_shape(res, 409, "series_too_short");
  EXPECT_EQ(Json::parse(res->body).at("required"), 120);
  expect_error_shape(get("/batches/zz/signal-report"), 404, "not_found");

  post("/batches", {{"id", "flat"}, {"weight_kg", 1.0}});
  auto r = t[0];
  r.batch_id = "flat";
  for (int i = 0; i < 200; ++i) {
    r.timestamp = 1'700'000'000 + 60 * i;
    service_->store().ingest(r);
  }
  const auto flat = get("/batches/flat/signal-report");
  ASSERT_TRUE(flat);
  EXPECT_EQ(flat->status, 200);
  for (const auto& ch : Json::parse(flat->body).at("channels")) {
    EXPECT_EQ(ch.at("snr_status"), "not_computable");
    EXPECT_TRUE(ch.at("snr").is_null());
    EXPECT_EQ(ch.at("lag1_status"), "not_computable");
    EXPECT_EQ(ch.at("residual_noise"), 0.0);
  }
}

TEST_F(ServiceTest, CsvExport) {
  register_banana();
  const auto t = trace(1.0);
  for (std::size_t i = 0; i < 3; ++i) service_->store().ingest(t[i]);
  const auto res = get("/batches/b1/export.csv");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "text/csv");
  EXPECT_EQ(std::count(res->body.begin(), res->body.end(), '\n'), 4);
  EXPECT_EQ(res->body, service_->store().export_csv("b1"));
  expect_error_shape(get("/batches/zz/export.csv"), 404, "not_found");
}

TEST_F(ServiceTest, Locales) {
  auto en = get("/i18n/en");
  auto bn = get("/i18n/bn");
  ASSERT_TRUE(en && bn);
  EXPECT_EQ(en->status, 200);
  EXPECT_EQ(bn->status, 200);
  const auto ej = Json::parse(en->body);
  const auto bj = Json::parse(bn->body);
  EXPECT_EQ(ej.at("locale"), "en");
  EXPECT_EQ(ej.at("strings").at("category.excellent"), "Excellent");
  ASSERT_EQ(ej.at("strings").size(), bj.at("strings").size());
  for (const auto& [k, v] : ej.at("strings").items()) EXPECT_TRUE(bj.at("strings").contains(k)) << k;
  expect_error_shape(get("/i18n/fr"), 404, "not_found");
}

TEST_F(ServiceTest, HealthReportsChecksumAndWritability) {
  auto res = get("/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  auto j = Json::parse(res->body);
  EXPECT_EQ(j.at("status"), "ok");
  EXPECT_TRUE(j.at("data_dir_writable").get<bool>());
  EXPECT_EQ(j.at("config_checksum"), config_checksum(service_->config()));
  EXPECT_EQ(j.at("default_locale"), "en");

  fs::remove_all(dir_);
  res = get("/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 503);
  j = Json::parse(res->body);
  EXPECT_EQ(j.at("status"), "unavailable");
  EXPECT_FALSE(j.at("data_dir_writable").get<bool>());
}

TEST_F(ServiceTest, StateSurvivesRestart) {
  register_banana();
  const auto t = trace(1.0);
  for (std::size_t i = 0; i < 5; ++i) post("/telemetry", to_json(t[i]));
  const auto before = Json::parse(get("/batches/b1/history")->body);

  ServiceConfig config;
  config.data_dir = dir_;
  Service restarted(config);
  const auto readings = restarted.store().derived_readings("b1");
  ASSERT_EQ(readings.size(), 5U);
  for (std::size_t i = 0; i < readings.size(); ++i) {
    EXPECT_EQ(to_json(readings[i]), before.at("readings").at(i));
  }
}

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status(ErrorCode::not_found), 404);
  EXPECT_EQ(http_status(ErrorCode::conflict), 409);
  EXPECT_EQ(http_status(ErrorCode::rejected_stale), 409);
  EXPECT_EQ(http_status(ErrorCode::series_too_short), 409);
  EXPECT_EQ(http_status(ErrorCode::invalid_weight), 422);
  EXPECT_EQ(http_status(ErrorCode::invalid_record), 422);
  EXPECT_EQ(http_status(ErrorCode::io_failure), 500);
}

}  // namespace
}  // namespace enose
