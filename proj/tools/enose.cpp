// enose: service, simulator and offline analysis front end.
//
// Exit codes: 0 ok, 1 config invalid, 2 data directory unavailable,
// 3 any other failure.

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include "enose/enose.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDataDir = 2;
constexpr int kExitFailure = 3;

auto load_config(const std::string& path) -> enose::ServiceConfig {
  std::string chosen = path;
  if (chosen.empty()) {
    if (const char* env = std::getenv("ENOSE_CONFIG")) chosen = env;
  }
  if (chosen.empty()) return {};
  return enose::load_service_config(chosen);
}

auto exit_code_for(const enose::Error& e) -> int {
  switch (e.code()) {
    case enose::ErrorCode::invalid_config:
    case enose::ErrorCode::invalid_reference: return kExitConfig;
    case enose::ErrorCode::io_failure: return kExitDataDir;
    default: return kExitFailure;
  }
}

enose::Service* g_service = nullptr;

void handle_signal(int) {
  if (g_service) g_service->stop();
}

auto run_serve(const std::string& config_path, const std::string& listen,
               const std::string& data_dir) -> int {
  enose::ServiceConfig config;
  try {
    config = load_config(config_path);
    if (!listen.empty()) {
      const auto parsed = enose::service_config_from_json(enose::Json{{"listen", listen}});
      config.host = parsed.host;
      config.port = parsed.port;
    }
  } catch (const enose::Error& e) {
    std::cerr << "config: " << e.what() << '\n';
    return kExitConfig;
  }
  if (!data_dir.empty()) config.data_dir = data_dir;

  std::optional<enose::Service> service;
  try {
    service.emplace(config);
  } catch (const enose::Error& e) {
    std::cerr << "startup: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data dir: " << e.what() << '\n';
    return kExitDataDir;
  }
  if (!service->store().writable()) {
    std::cerr << "data dir " << config.data_dir << " is not writable\n";
    return kExitDataDir;
  }
  g_service = &*service;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cerr << "listening on " << config.host << ':' << config.port << " (data in "
            << config.data_dir << ")\n";
  if (!service->listen()) {
    std::cerr << "cannot listen on " << config.host << ':' << config.port << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

struct SimulateOptions {
  std::string profile_path;
  std::string out = "-";
  std::string speedup = "inf";
  std::optional<std::uint64_t> seed;
  bool register_batch = false;
};

auto run_simulate(const SimulateOptions& opts) -> int {
  enose::RipeningProfile profile = enose::banana_profile();
  enose::Calibration calibration = enose::default_calibration();
  try {
    if (!opts.profile_path.empty()) {
      const auto j = enose::read_json_file(opts.profile_path);
      profile = enose::profile_from_json(j.contains("profile") ? j.at("profile") : j);
      if (j.contains("calibration")) calibration = enose::calibration_from_json(j.at("calibration"));
    }
  } catch (const enose::Error& e) {
    std::cerr << "profile: " << e.what() << '\n';
    return kExitConfig;
  }
  if (opts.seed) profile.seed = *opts.seed;

  double speedup = std::numeric_limits<double>::infinity();
  if (opts.speedup != "inf") {
    try {
      speedup = std::stod(opts.speedup);
    } catch (const std::exception&) {
      std::cerr << "--speedup must be a number or 'inf'\n";
      return kExitFailure;
    }
  }

  try {
    const auto trace = enose::generate_trace(profile, calibration);
    const bool http = opts.out.rfind("http://", 0) == 0;
    if (http) {
      httplib::Client client(opts.out);
      client.set_read_timeout(30, 0);
      if (opts.register_batch) {
        const enose::Batch b{profile.batch_id, "banana", profile.weight_kg, profile.start_ts,
                             "banana", "default"};
        auto res = client.Post("/batches", enose::to_json(b).dump(), "application/json");
        if (!res || (res->status != 201 && res->status != 409)) {
          std::cerr << "batch registration failed\n";
          return kExitFailure;
        }
      }
      enose::replay(trace,
                    [&](const enose::TelemetryRecord& r) {
                      auto res = client.Post("/telemetry", enose::to_json(r).dump(), "application/json");
                      return res && res->status == 200;
                    },
                    speedup, profile.interval_s);
    } else {
      std::ofstream file;
      if (opts.out != "-") {
        file.open(opts.out, std::ios::trunc);
        if (!file) {
          std::cerr << "cannot write " << opts.out << '\n';
          return kExitFailure;
        }
      }
      std::ostream& out = opts.out == "-" ? std::cout : file;
      enose::replay(trace,
                    [&](const enose::TelemetryRecord& r) {
                      out << enose::to_json(r).dump() << '\n';
                      out.flush();
                      return static_cast<bool>(out);
                    },
                    speedup, profile.interval_s);
    }
    std::cerr << "delivered " << trace.size() << " records for batch " << profile.batch_id << '\n';
  } catch (const enose::Error& e) {
    std::cerr << "simulate: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

void print_report_table(const std::vector<enose::SignalReport>& reports) {
  std::printf("%-10s %12s %16s %18s %16s\n", "Sensor", "SNR (V/V)", "Residual Noise", "Mean Rolling Std",
              "Autocorrelation");
  for (const auto& r : reports) {
    char snr[32] = "n/a";
    char ac[32] = "stable";
    if (r.snr) std::snprintf(snr, sizeof snr, "%.2f", *r.snr);
    if (r.lag1_autocorr) std::snprintf(ac, sizeof ac, "%.3f", *r.lag1_autocorr);
    std::printf("%-10s %12s %16.4f %18.4f %16s\n", r.channel_id.c_str(), snr, r.residual_noise,
                r.mean_rolling_std, ac);
  }
}

auto run_analyze(const std::string& csv_path, bool json, int degree, std::size_t window) -> int {
  try {
    std::ifstream in(csv_path);
    if (!in) {
      std::cerr << "cannot open " << csv_path << '\n';
      return kExitFailure;
    }
    const auto table = enose::parse_csv(in);
    std::vector<enose::SignalReport> reports;
    for (const auto& col : table.columns) {
      if (col.rfind("v_", 0) != 0) continue;
      std::vector<double> volts;
      for (const auto& row : table.rows) {
        const auto& v = row.values.at(col);
        if (v) volts.push_back(*v);
      }
      reports.push_back(enose::signal_report(volts, col.substr(2), degree, window));
    }
    if (reports.empty()) {
      std::cerr << "no voltage columns (v_<channel>) in " << csv_path << '\n';
      return kExitFailure;
    }
    if (json) {
      enose::Json out = enose::Json::array();
      for (const auto& r : reports) out.push_back(enose::to_json(r));
      std::cout << out.dump(2) << '\n';
    } else {
      print_report_table(reports);
    }
  } catch (const enose::Error& e) {
    std::cerr << "analyze: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

auto run_export(const std::string& batch_id, const std::string& config_path,
                const std::string& data_dir, const std::string& out_path) -> int {
  enose::ServiceConfig config;
  try {
    config = load_config(config_path);
  } catch (const enose::Error& e) {
    std::cerr << "config: " << e.what() << '\n';
    return kExitConfig;
  }
  if (!data_dir.empty()) config.data_dir = data_dir;
  if (!std::filesystem::is_directory(config.data_dir)) {
    std::cerr << "data dir " << config.data_dir << " does not exist\n";
    return kExitDataDir;
  }
  try {
    enose::BatchStore store(config.data_dir, config);
    if (out_path.empty() || out_path == "-") {
      store.export_csv(batch_id, std::cout);
    } else {
      std::ofstream out(out_path, std::ios::trunc);
      store.export_csv(batch_id, out);
    }
  } catch (const enose::Error& e) {
    std::cerr << "export: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitOk;
}

struct IngestOptions {
  std::string trace_path;
  std::string config_path;
  std::string data_dir;
  std::optional<double> weight_kg;
  std::string fruit = "banana";
};

auto run_ingest(const IngestOptions& opts) -> int {
  enose::ServiceConfig config;
  try {
    config = load_config(opts.config_path);
  } catch (const enose::Error& e) {
    std::cerr << "config: " << e.what() << '\n';
    return kExitConfig;
  }
  if (!opts.data_dir.empty()) config.data_dir = opts.data_dir;
  std::ifstream in(opts.trace_path);
  if (!in) {
    std::cerr << "cannot open " << opts.trace_path << '\n';
    return kExitFailure;
  }
  std::size_t line_no = 0;
  try {
    enose::BatchStore store(config.data_dir, config);
    std::size_t count = 0;
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto record = enose::telemetry_from_json(enose::Json::parse(line));
      if (opts.weight_kg) {
        const auto ids = store.batch_ids();
        if (std::find(ids.begin(), ids.end(), record.batch_id) == ids.end()) {
          store.register_batch({record.batch_id, opts.fruit, *opts.weight_kg, record.timestamp,
                                opts.fruit, "default"});
        }
      }
      store.ingest(record);
      ++count;
    }
    std::cerr << "ingested " << count << " records into " << config.data_dir << '\n';
  } catch (const enose::Error& e) {
    std::cerr << "ingest: line " << line_no << ": " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "ingest: line " << line_no << ": " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

auto run_calibrate(const std::string& trace_path, std::size_t warmup, double clean_air_ratio,
                   const std::string& config_path) -> int {
  enose::ServiceConfig config;
  try {
    config = load_config(config_path);
  } catch (const enose::Error& e) {
    std::cerr << "config: " << e.what() << '\n';
    return kExitConfig;
  }
  std::ifstream in(trace_path);
  if (!in) {
    std::cerr << "cannot open " << trace_path << '\n';
    return kExitFailure;
  }
  try {
    std::vector<enose::TelemetryRecord> records;
    std::string line;
    while (records.size() < warmup && std::getline(in, line)) {
      if (!line.empty()) records.push_back(enose::telemetry_from_json(enose::Json::parse(line)));
    }
    if (records.size() < warmup) {
      std::cerr << "trace has only " << records.size() << " records, warm-up needs " << warmup << '\n';
      return kExitFailure;
    }
    auto calibration = config.calibrations.begin()->second;
    for (auto& ch : calibration.channels) {
      std::vector<double> volts;
      for (const auto& r : records) volts.push_back(r.voltages.at(ch.channel_id));
      ch.clean_air_resistance = enose::estimate_clean_air_resistance(volts, ch, clean_air_ratio);
    }
    std::cout << enose::to_json(calibration).dump(2) << '\n';
  } catch (const std::exception& e) {
    std::cerr << "calibrate: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"e-nose telemetry ingestion, fruit quality scoring and signal analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string listen;
  std::string data_dir;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--config", config_path, "Service config file (default: $ENOSE_CONFIG)");
  serve->add_option("--listen", listen, "host:port, overrides the config");
  serve->add_option("--data-dir", data_dir, "Data directory, overrides the config");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic ripening trace");
  simulate->add_option("--profile", sim.profile_path, "Profile file (default: banana preset)");
  simulate->add_option("--out", sim.out, "Output file, '-' for stdout, or http://host:port");
  simulate->add_option("--speedup", sim.speedup, "Replay speed factor, 'inf' for no pacing");
  simulate->add_option("--seed", sim.seed, "Override the profile seed");
  simulate->add_flag("--register", sim.register_batch, "POST /batches before streaming (http only)");

  std::string csv_path;
  bool report = false;
  bool json = false;
  int degree = enose::kDefaultBaselineDegree;
  std::size_t window = enose::kDefaultRollingWindow;
  auto* analyze = app.add_subcommand("analyze", "Signal quality report from an exported CSV");
  analyze->add_option("csv", csv_path, "CSV with timestamp and v_<channel> columns")->required();
  analyze->add_flag("--report", report, "Print the per-sensor signal quality table");
  analyze->add_flag("--json", json, "Emit the report as JSON");
  analyze->add_option("--degree", degree, "Baseline polynomial degree")->check(CLI::PositiveNumber);
  analyze->add_option("--window", window, "Rolling std window (samples)")->check(CLI::Range(2, 1 << 20));

  std::string batch_id;
  std::string out_path;
  auto* export_cmd = app.add_subcommand("export", "Write a batch as CSV");
  export_cmd->add_option("batch", batch_id, "Batch id")->required();
  export_cmd->add_option("--config", config_path, "Service config file (default: $ENOSE_CONFIG)");
  export_cmd->add_option("--data-dir", data_dir, "Data directory, overrides the config");
  export_cmd->add_option("--out", out_path, "Output file (default: stdout)");

  IngestOptions ingest_opts;
  auto* ingest = app.add_subcommand("ingest", "Append telemetry lines to the store without the server");
  ingest->add_option("trace", ingest_opts.trace_path, "Telemetry lines (JSONL)")->required();
  ingest->add_option("--config", ingest_opts.config_path, "Service config file (default: $ENOSE_CONFIG)");
  ingest->add_option("--data-dir", ingest_opts.data_dir, "Data directory, overrides the config");
  ingest->add_option("--weight", ingest_opts.weight_kg, "Register unknown batches with this weight (kg)")
      ->check(CLI::PositiveNumber);
  ingest->add_option("--fruit", ingest_opts.fruit, "Fruit and quality config for registered batches");

  std::string trace_path;
  std::size_t warmup = 30;
  double clean_air_ratio = 1.0;
  auto* calibrate = app.add_subcommand("calibrate", "Derive Ro from a clean-air warm-up trace");
  calibrate->add_option("trace", trace_path, "Telemetry lines recorded in clean air")->required();
  calibrate->add_option("--warmup", warmup, "Number of leading records to average");
  calibrate->add_option("--clean-air-ratio", clean_air_ratio, "Datasheet Rs/Ro in clean air");
  calibrate->add_option("--config", config_path, "Service config file (default: $ENOSE_CONFIG)");

  app.add_subcommand("sample-config", "Print the default service config");
  app.add_subcommand("sample-profile", "Print the banana simulator profile");

  CLI11_PARSE(app, argc, argv);

  if (*serve) return run_serve(config_path, listen, data_dir);
  if (*simulate) return run_simulate(sim);
  if (*analyze) {
    (void)report;  // the table is the default output; --report is accepted for clarity
    return run_analyze(csv_path, json, degree, window);
  }
  if (*export_cmd) return run_export(batch_id, config_path, data_dir, out_path);
  if (*ingest) return run_ingest(ingest_opts);
  if (*calibrate) return run_calibrate(trace_path, warmup, clean_air_ratio, config_path);
  if (app.got_subcommand("sample-config")) {
    std::cout << enose::to_json(enose::ServiceConfig{}).dump(2) << '\n';
    return kExitOk;
  }
  if (app.got_subcommand("sample-profile")) {
    enose::Json j{{"profile", enose::to_json(enose::banana_profile())},
                  {"calibration", enose::to_json(enose::default_calibration())}};
    std::cout << j.dump(2) << '\n';
    return kExitOk;
  }
  return kExitOk;
}
