#pragma once

// HTTP front end for a Hub. Paths live under /api/tables; bodies use the
// canonical encoding; errors are {"error":<code>,"message":<text>}.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "cityio/error.hpp"
#include "cityio/hub.hpp"

namespace httplib {
class Server;
}

namespace cityio {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::size_t threads = 64;
  std::chrono::milliseconds heartbeat{10000};
  // A live subscriber this many events behind is disconnected.
  std::size_t max_lag = 4096;
  // Optional static files served at /.
  std::filesystem::path web_root;
};

int http_status(Errc code);
std::string error_body(Errc code, std::string_view message);

class ApiServer {
 public:
  ApiServer(Hub& hub, ServerOptions options);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  // Throws Error(bad_request) when the address cannot be bound.
  int start();
  // Stops accepting, ends open streams and joins the listener.
  void stop();

  int port() const noexcept { return port_; }

 private:
  void install_routes();

  Hub& hub_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> svr_;
  std::thread listener_;
  int port_ = 0;
};

}  // namespace cityio
