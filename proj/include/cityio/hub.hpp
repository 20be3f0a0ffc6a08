#pragma once

// The authoritative state behind the HTTP API: named tables, each with its
// commit history, feedback, layers and one gap-free event sequence. All
// mutations of a table go through a single writer lock; persistence happens
// before a mutation becomes visible.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cityio/error.hpp"
#include "cityio/feedback.hpp"
#include "cityio/history.hpp"
#include "cityio/layer.hpp"
#include "cityio/log_file.hpp"

namespace cityio {

enum class EventKind { commit, comment, reaction, layer };

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

struct Event {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::commit;
  // Canonical {"seq":..,"kind":..,"payload":{..}} object; also the event-log line.
  std::string data;
};

using EventPtr = std::shared_ptr<const Event>;

std::string encode_event(std::uint64_t seq, EventKind kind, std::string_view payload);
std::string commit_event_payload(const Commit& commit, const GridState& previous);

// Checks an event log against already-restored commits and comments without
// modifying anything. Returns the number of consistent events; a trailing
// run describing mutations missing from the other logs is not counted.
// Throws ChainBrokenError(k) on a bad record.
std::size_t verify_event_log(std::span<const std::string> records, const TableSpec& spec, const History& history,
                             const FeedbackBook& feedback);

class ConflictError : public Error {
 public:
  explicit ConflictError(CommitPtr head)
      : Error(Errc::conflict, "base_version is stale; head is version " + std::to_string(head->version)),
        head_(std::move(head)) {}

  const CommitPtr& head() const noexcept { return head_; }

 private:
  CommitPtr head_;
};

class CorruptTableError : public Error {
 public:
  CorruptTableError(std::string table, std::string file, std::size_t record, std::string reason)
      : Error(Errc::chain_broken, "table '" + table + "': " + file + " record " + std::to_string(record) + ": " +
                                      reason),
        table_(std::move(table)),
        file_(std::move(file)),
        record_(record) {}

  const std::string& table() const noexcept { return table_; }
  const std::string& file() const noexcept { return file_; }
  std::size_t record() const noexcept { return record_; }

 private:
  std::string table_;
  std::string file_;
  std::size_t record_;
};

struct HubOptions {
  // Empty: in-memory only.
  std::filesystem::path data_dir;
  // Layer writes need this token; empty disables them.
  std::string worker_token;
  bool sync_writes = false;
  std::function<std::int64_t()> clock;
};

struct GridPost {
  std::optional<GridState> grid;
  std::vector<CellEdit> edits;
  std::optional<std::uint64_t> base_version;
  std::string author;
  Source source = Source::table;
};

struct PostOutcome {
  CommitPtr commit;
  bool appended = false;
};

struct StreamSnapshot {
  CommitPtr head;
  std::uint64_t seq = 0;
};

namespace table_files {

std::filesystem::path spec(const std::filesystem::path& dir, std::string_view table);
std::filesystem::path commits(const std::filesystem::path& dir, std::string_view table);
std::filesystem::path comments(const std::filesystem::path& dir, std::string_view table);
std::filesystem::path events(const std::filesystem::path& dir, std::string_view table);

}  // namespace table_files

class Table {
 public:
  Table(TableSpec spec, History history, FeedbackBook feedback, std::vector<EventPtr> events,
        std::map<std::string, Layer> layers, const HubOptions& options, std::shared_ptr<std::atomic<bool>> stopping);

  const TableSpec& spec() const noexcept { return spec_; }

  // Commits the empty grid when the history is still empty; returns head.
  CommitPtr commit_genesis();

  CommitPtr head() const;
  CommitPtr commit_at(std::uint64_t version) const;
  // Inclusive range; unknown_version when `to` exceeds head.
  std::vector<CommitPtr> commit_range(std::uint64_t from, std::uint64_t to) const;

  // Throws ConflictError, bad_request (edits without base_version), grid/edit
  // validation errors, storage_failure.
  PostOutcome post(GridPost post);

  Comment add_comment(Anchor anchor, std::string text, std::string author);
  std::size_t react(std::uint64_t comment_id, std::string author);
  std::vector<RankedComment> top_comments(std::size_t k) const;
  std::size_t comment_count() const;
  Heatmap heatmap() const;

  // Replaces a same-named layer only when produced_from_version is not
  // older; otherwise stale_layer.
  void post_layer(Layer layer);
  std::optional<Layer> layer(const std::string& name) const;

  std::uint64_t last_seq() const;
  StreamSnapshot snapshot() const;
  // Events with seq > after (at most max_batch), waiting up to `timeout`
  // for the first one. Empty on timeout or shutdown.
  std::vector<EventPtr> wait_events(std::uint64_t after, std::chrono::milliseconds timeout,
                                    std::size_t max_batch = 256) const;

  bool read_only() const;
  // Wakes wait_events callers so they re-check the stop flag.
  void wake();

 private:
  void ensure_writable() const;
  void emit(EventKind kind, std::string_view payload);
  template <typename Fn>
  auto guarded_write(Fn&& fn);

  TableSpec spec_;
  History history_;
  FeedbackBook feedback_;
  std::vector<EventPtr> events_;
  std::map<std::string, Layer> layers_;
  std::function<std::int64_t()> clock_;
  std::shared_ptr<std::atomic<bool>> stopping_;

  AppendLog commit_log_;
  AppendLog comment_log_;
  AppendLog event_log_;
  bool persistent_ = false;
  bool read_only_ = false;

  mutable std::shared_mutex mu_;
  mutable std::condition_variable_any events_cv_;
};

struct TableSummary {
  std::string name;
  std::uint64_t head_version = 0;
  TableSpec spec;
};

class Hub {
 public:
  // Loads every table found in data_dir, replaying and verifying its logs.
  // Throws CorruptTableError on a broken chain or undecodable record.
  explicit Hub(HubOptions options);
  ~Hub();
  Hub(const Hub&) = delete;
  Hub& operator=(const Hub&) = delete;

  std::vector<TableSummary> list_tables() const;
  // Throws table_exists or invalid_spec.
  CommitPtr create_table(TableSpec spec);
  // Throws unknown_table.
  std::shared_ptr<Table> table(std::string_view name) const;

  // Throws unauthorized.
  void check_worker_token(std::string_view token) const;

  const HubOptions& options() const noexcept { return options_; }

  // Wakes every waiting subscriber; further waits return immediately.
  void shutdown();
  bool stopping() const noexcept { return stopping_->load(); }

 private:
  std::shared_ptr<Table> load_table(const TableSpec& spec);

  HubOptions options_;
  std::shared_ptr<std::atomic<bool>> stopping_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Table>, std::less<>> tables_;
};

}  // namespace cityio
