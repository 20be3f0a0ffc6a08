#pragma once

// Compute client: follows one table's event stream and publishes the
// analysis layers for the newest commit it has seen. Backlogged commits are
// skipped; only the latest pending one is computed.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>

#include "cityio/analysis.hpp"
#include "cityio/history.hpp"

namespace cityio {

struct WorkerOptions {
  std::string server;  // base URL
  std::string table;
  std::string token;
  SunPosition sun;
  TravelSpeeds speeds;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds max_backoff{30000};
};

struct WorkerStats {
  std::uint64_t last_published_version = 0;
  std::uint64_t layer_sets_published = 0;
  std::uint64_t reconnects = 0;
};

class Worker {
 public:
  explicit Worker(WorkerOptions options);

  // Runs until `stop` is requested. Connection failures are retried with
  // exponential backoff.
  void run(std::stop_token stop);

  // Changes the sun and recomputes the newest known commit.
  void set_sun(const SunPosition& sun);
  SunPosition sun() const;
  WorkerStats stats() const;

 private:
  void stream_loop(std::stop_token stop);
  void compute_loop(std::stop_token stop);
  void offer(CommitPtr commit);

  WorkerOptions options_;
  mutable std::mutex mu_;
  std::condition_variable_any cv_;
  CommitPtr latest_;
  CommitPtr pending_;
  WorkerStats stats_;
};

}  // namespace cityio
