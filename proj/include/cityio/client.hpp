#pragma once

// Blocking HTTP client for the table API, plus the event-stream reader used
// by workers, the CLI and tests. One ApiClient per thread.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cityio/feedback.hpp"
#include "cityio/history.hpp"
#include "cityio/hub.hpp"
#include "cityio/layer.hpp"

namespace httplib {
class Client;
}

namespace cityio {

// Non-2xx answer, or no answer at all (status 0).
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string body);

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }
  // The "error" field of the body, if it has one.
  std::string code() const;

 private:
  int status_;
  std::string body_;
};

// One server-sent event. `id` is absent for frames without an id line.
struct SseEvent {
  std::optional<std::uint64_t> id;
  std::string event;
  std::string data;
};

// Incremental text/event-stream parser.
class SseParser {
 public:
  void feed(std::string_view bytes, const std::function<void(SseEvent)>& on_event);

 private:
  void line(std::string_view line, const std::function<void(SseEvent)>& on_event);

  std::string buffer_;
  SseEvent pending_;
  bool has_data_ = false;
};

struct HeadResult {
  int status = 0;                 // 200 or 304
  std::optional<Commit> commit;   // set on 200
};

struct GridPostResult {
  int status = 0;   // 200 or 409
  Commit commit;    // the new commit, or the current head on 409
};

class ApiClient {
 public:
  // base_url like "http://127.0.0.1:8080".
  explicit ApiClient(const std::string& base_url);
  ~ApiClient();
  ApiClient(const ApiClient&) = delete;
  ApiClient& operator=(const ApiClient&) = delete;

  std::vector<TableSummary> list_tables();
  Commit create_table(const TableSpec& spec);
  // Spec via list_tables, cached.
  TableSpec spec(const std::string& table);

  HeadResult head(const std::string& table, std::optional<std::uint64_t> if_none_match = std::nullopt);
  GridPostResult post_grid(const std::string& table, const GridPost& post);
  Commit commit(const std::string& table, std::uint64_t version);
  std::vector<Commit> commits(const std::string& table, std::uint64_t from, std::uint64_t to);

  void post_layer(const std::string& table, const Layer& layer, const std::string& token);
  Layer layer(const std::string& table, const std::string& name);

  Comment add_comment(const std::string& table, const Anchor& anchor, const std::string& text,
                      const std::string& author);
  std::size_t react(const std::string& table, std::uint64_t comment_id, const std::string& author);
  std::vector<RankedComment> top_comments(const std::string& table, std::optional<std::size_t> k = std::nullopt);
  Heatmap heatmap(const std::string& table);

  // Reads the event stream until `on_event` returns false, the server ends
  // it, or stop() is called. Throws ApiError when the server refuses the
  // subscription. Returns normally otherwise.
  void stream(const std::string& table, std::optional<std::uint64_t> since,
              const std::function<bool(const SseEvent&)>& on_event);
  // Aborts an in-flight request from another thread.
  void stop();

 private:
  std::unique_ptr<httplib::Client> http_;
  std::mutex specs_mu_;
  std::map<std::string, TableSpec> specs_;
};

std::string grid_post_body(const GridPost& post);

}  // namespace cityio
