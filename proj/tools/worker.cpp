#include <httplib.h>
#include <spdlog/spdlog.h>

#include <iostream>
#include <thread>

#include "cityio/codec.hpp"
#include "cityio/server.hpp"
#include "cityio/worker.hpp"
#include "tool_util.hpp"

using namespace cityio;

namespace {

std::string sun_json(const SunPosition& sun) {
  return ObjectWriter().field("azimuth_deg", sun.azimuth_deg).field("elevation_deg", sun.elevation_deg).finish();
}

// GET /sun and POST /sun {"azimuth_deg":..,"elevation_deg":..}; a change
// republishes the newest commit's layers.
void install_control(httplib::Server& svr, Worker& worker) {
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  svr.Options("/sun", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  svr.Get("/sun", [&worker](const httplib::Request&, httplib::Response& res) {
    res.set_content(sun_json(worker.sun()), "application/json");
  });
  svr.Post("/sun", [&worker](const httplib::Request& req, httplib::Response& res) {
    try {
      Json body = parse_json(req.body);
      field::expect_keys(body, {"azimuth_deg", "elevation_deg"}, "sun");
      SunPosition sun;
      sun.azimuth_deg = field::as_double(field::require(body, "azimuth_deg"), "azimuth_deg");
      sun.elevation_deg = field::as_double(field::require(body, "elevation_deg"), "elevation_deg");
      worker.set_sun(sun);
      res.set_content(sun_json(sun), "application/json");
    } catch (const Error& e) {
      res.status = 400;
      res.set_content(error_body(e.code(), e.what()), "application/json");
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analysis worker: publishes layers for each commit of a table"};
  WorkerOptions options;
  std::string control;
  app.add_option("--server", options.server, "Server base URL")->required();
  app.add_option("--table", options.table)->required();
  app.add_option("--token", options.token, "Worker token")->envname("WORKER_TOKEN")->required();
  app.add_option("--sun-azimuth", options.sun.azimuth_deg, "Degrees clockwise from north")->capture_default_str();
  app.add_option("--sun-elevation", options.sun.elevation_deg, "Degrees above the horizon")->capture_default_str();
  app.add_option("--road-speed", options.speeds.road_mps, "m/s")->capture_default_str();
  app.add_option("--walk-speed", options.speeds.walk_mps, "m/s")->capture_default_str();
  app.add_option("--control", control, "host:port for the sun control endpoint");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? tools::kOk : tools::kUsage;
  }

  try {
    const sigset_t signals = tools::block_stop_signals();
    Worker worker(options);
    httplib::Server control_server;
    std::thread control_thread;
    if (!control.empty()) {
      auto [host, port] = tools::parse_addr(control);
      install_control(control_server, worker);
      const int bound = port == 0 ? control_server.bind_to_any_port(host)
                                  : (control_server.bind_to_port(host, port) ? port : -1);
      if (bound <= 0) throw Error(Errc::bad_request, "cannot listen on " + control);
      spdlog::info("sun control on {}:{}", host, bound);
      control_thread = std::thread([&] { control_server.listen_after_bind(); });
    }
    std::jthread runner([&worker](std::stop_token stop) { worker.run(stop); });
    spdlog::info("worker following table '{}' on {}", options.table, options.server);
    tools::wait_for_signal(signals);
    runner.request_stop();
    runner.join();
    control_server.stop();
    if (control_thread.joinable()) control_thread.join();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::invalid_sun || e.code() == Errc::invalid_speeds ? tools::kUsage : tools::kFailure;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return tools::kUsage;
  }
  return tools::kOk;
}
