#include "cityio/worker.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <memory>
#include <thread>

#include "cityio/client.hpp"
#include "cityio/codec.hpp"

namespace cityio {

namespace {

// Sleeps up to `d`; false when stopped first.
bool pause(std::stop_token stop, std::chrono::milliseconds d) {
  std::mutex m;
  std::condition_variable_any cv;
  std::unique_lock lock(m);
  return !cv.wait_for(lock, stop, d, [] { return false; }) && !stop.stop_requested();
}

}  // namespace

Worker::Worker(WorkerOptions options) : options_(std::move(options)) {
  validate_sun(options_.sun);
  validate_speeds(options_.speeds);
}

void Worker::set_sun(const SunPosition& sun) {
  validate_sun(sun);
  std::lock_guard lock(mu_);
  options_.sun = sun;
  if (latest_) pending_ = latest_;
  cv_.notify_all();
}

SunPosition Worker::sun() const {
  std::lock_guard lock(mu_);
  return options_.sun;
}

WorkerStats Worker::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

void Worker::offer(CommitPtr commit) {
  std::lock_guard lock(mu_);
  if (latest_ && latest_->version >= commit->version) return;
  latest_ = commit;
  pending_ = std::move(commit);
  cv_.notify_all();
}

void Worker::run(std::stop_token stop) {
  std::jthread compute([this](std::stop_token s) { compute_loop(s); });
  std::stop_callback forward(stop, [&compute] { compute.request_stop(); });
  stream_loop(stop);
}

void Worker::stream_loop(std::stop_token stop) {
  std::optional<std::uint64_t> since;
  auto backoff = options_.initial_backoff;
  while (!stop.stop_requested()) {
    ApiClient client(options_.server);
    std::stop_callback abort(stop, [&client] { client.stop(); });
    bool received = false;
    try {
      const TableSpec spec = client.spec(options_.table);
      client.stream(options_.table, since, [&](const SseEvent& e) {
        if (stop.stop_requested()) return false;
        if (!received) {
          received = true;
          backoff = options_.initial_backoff;
        }
        if (e.event == "heartbeat") return true;
        Json data = parse_json(e.data);
        if (e.event == "snapshot") {
          offer(std::make_shared<const Commit>(decode_commit(canonical_dump(data["head"]), spec)));
        } else if (e.event == "commit") {
          offer(std::make_shared<const Commit>(decode_commit(canonical_dump(data["payload"]["commit"]), spec)));
        }
        if (e.id) since = *e.id;
        return true;
      });
    } catch (const ApiError& e) {
      if (e.status() == 400 && since) {
        // The server no longer has our cursor; start over from a snapshot.
        spdlog::warn("worker: resume point {} rejected, resubscribing", *since);
        since.reset();
        continue;
      }
      if (!stop.stop_requested()) spdlog::warn("worker: {}", e.what());
    } catch (const std::exception& e) {
      if (!stop.stop_requested()) spdlog::warn("worker: stream error: {}", e.what());
    }
    if (stop.stop_requested()) break;
    {
      std::lock_guard lock(mu_);
      ++stats_.reconnects;
    }
    if (!pause(stop, backoff)) break;
    backoff = std::min(backoff * 2, options_.max_backoff);
  }
}

void Worker::compute_loop(std::stop_token stop) {
  ApiClient client(options_.server);
  std::stop_callback abort(stop, [&client] { client.stop(); });
  auto backoff = options_.initial_backoff;
  while (true) {
    CommitPtr commit;
    SunPosition sun;
    {
      std::unique_lock lock(mu_);
      if (!cv_.wait(lock, stop, [&] { return pending_ != nullptr; })) return;
      commit = std::exchange(pending_, nullptr);
      sun = options_.sun;
    }
    try {
      const TableSpec spec = client.spec(options_.table);
      for (const Layer& layer : compute_layers(commit->grid, spec, sun, options_.speeds, commit->version)) {
        try {
          client.post_layer(options_.table, layer, options_.token);
        } catch (const ApiError& e) {
          // A newer layer already landed; nothing to do.
          if (e.status() != 409) throw;
        }
      }
      std::lock_guard lock(mu_);
      stats_.last_published_version = std::max(stats_.last_published_version, commit->version);
      ++stats_.layer_sets_published;
      backoff = options_.initial_backoff;
    } catch (const std::exception& e) {
      if (stop.stop_requested()) return;
      spdlog::warn("worker: publishing version {} failed: {}", commit->version, e.what());
      {
        std::lock_guard lock(mu_);
        if (!pending_) pending_ = commit;
      }
      if (!pause(stop, backoff)) return;
      backoff = std::min(backoff * 2, options_.max_backoff);
    }
  }
}

}  // namespace cityio
