#include "cityio/hub.hpp"

#include <spdlog/spdlog.h>

#include <chrono>

#include "cityio/codec.hpp"

namespace cityio {

namespace {

std::int64_t system_now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string reaction_payload(const Reaction& r, std::size_t like_count) {
  return ObjectWriter()
      .field("comment_id", r.comment_id)
      .field("author", r.author)
      .field("like_count", like_count)
      .finish();
}

std::string comment_payload(const Comment& c) { return ObjectWriter().raw("comment", encode_comment(c)).finish(); }

std::string layer_payload(const Layer& l) { return ObjectWriter().raw("layer", encode_layer(l)).finish(); }

void keep_newest(std::map<std::string, Layer>& layers, Layer layer) {
  auto it = layers.find(layer.name);
  if (it != layers.end() && it->second.produced_from_version > layer.produced_from_version) {
    throw Error(Errc::stale_layer, "layer '" + layer.name + "' already stored from version " +
                                       std::to_string(it->second.produced_from_version));
  }
  layers[layer.name] = std::move(layer);
}

// Event-log recovery. Returns the events that agree with the commit and
// comment logs. A suffix describing mutations missing from those logs (a
// crash between the two appends) is dropped; anything else that disagrees
// is corruption.
struct RecoveredEvents {
  std::vector<EventPtr> events;
  std::map<std::string, Layer> layers;
  std::uint64_t commits = 0;
  std::uint64_t comments = 0;
  std::uint64_t reactions = 0;
  bool truncated = false;
};

RecoveredEvents recover_events(std::span<const std::string> records, const TableSpec& spec, const History& history,
                               const FeedbackBook& feedback) {
  using namespace field;
  RecoveredEvents out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t k = i + 1;
    Json j;
    EventKind kind;
    try {
      j = parse_json(records[i]);
      expect_keys(j, {"seq", "kind", "payload"}, "event");
      if (as_uint(require(j, "seq"), "seq") != k) throw Error(Errc::malformed_encoding, "seq is not dense");
      auto parsed = parse_event_kind(as_string(require(j, "kind"), "kind"));
      if (!parsed) throw Error(Errc::malformed_encoding, "unknown event kind");
      kind = *parsed;
      if (encode_event(k, kind, canonical_dump(require(j, "payload"))) != records[i]) {
        throw Error(Errc::malformed_encoding, "record is not canonical");
      }
    } catch (const Error& e) {
      throw ChainBrokenError(k, e.what());
    }
    const Json& payload = j["payload"];
    bool ahead = false;
    try {
      switch (kind) {
        case EventKind::commit: {
          const Json& c = require(payload, "commit");
          const std::uint64_t v = as_uint(require(c, "version"), "version");
          if (v != out.commits + 1) throw Error(Errc::malformed_encoding, "commit events out of order");
          if (v > history.head_version()) {
            ahead = true;
            break;
          }
          if (as_string(require(c, "commit_hash"), "commit_hash") != history.get(v)->commit_hash.hex()) {
            throw Error(Errc::malformed_encoding, "commit event disagrees with the commit log");
          }
          ++out.commits;
          break;
        }
        case EventKind::comment: {
          const std::uint64_t id = as_uint(require(require(payload, "comment"), "id"), "id");
          if (id != out.comments + 1) throw Error(Errc::malformed_encoding, "comment events out of order");
          if (id > feedback.comments().size()) {
            ahead = true;
            break;
          }
          ++out.comments;
          break;
        }
        case EventKind::reaction: {
          if (out.reactions >= feedback.reactions().size()) {
            ahead = true;
            break;
          }
          const Reaction& r = feedback.reactions()[out.reactions];
          if (as_uint(require(payload, "comment_id"), "comment_id") != r.comment_id ||
              as_string(require(payload, "author"), "author") != r.author) {
            throw Error(Errc::malformed_encoding, "reaction event disagrees with the comment log");
          }
          ++out.reactions;
          break;
        }
        case EventKind::layer: {
          Layer layer = layer_from_json(require(payload, "layer"));
          validate_layer(layer, spec);
          keep_newest(out.layers, std::move(layer));
          break;
        }
      }
    } catch (const Error& e) {
      throw ChainBrokenError(k, e.what());
    }
    if (ahead) {
      out.truncated = true;
      break;
    }
    out.events.push_back(std::make_shared<const Event>(Event{k, kind, records[i]}));
  }
  return out;
}

}  // namespace

std::size_t verify_event_log(std::span<const std::string> records, const TableSpec& spec, const History& history,
                             const FeedbackBook& feedback) {
  return recover_events(records, spec, history, feedback).events.size();
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::commit: return "commit";
    case EventKind::comment: return "comment";
    case EventKind::reaction: return "reaction";
    case EventKind::layer: return "layer";
  }
  return "commit";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  if (text == "commit") return EventKind::commit;
  if (text == "comment") return EventKind::comment;
  if (text == "reaction") return EventKind::reaction;
  if (text == "layer") return EventKind::layer;
  return std::nullopt;
}

std::string encode_event(std::uint64_t seq, EventKind kind, std::string_view payload) {
  return ObjectWriter().field("seq", seq).field("kind", std::string(to_string(kind))).raw("payload", payload).finish();
}

std::string commit_event_payload(const Commit& commit, const GridState& previous) {
  return ObjectWriter()
      .raw("commit", encode_commit(commit))
      .raw("diff", encode_changes(diff(previous, commit.grid)))
      .finish();
}

namespace table_files {

std::filesystem::path spec(const std::filesystem::path& dir, std::string_view table) {
  return dir / (std::string(table) + ".spec");
}
std::filesystem::path commits(const std::filesystem::path& dir, std::string_view table) {
  return dir / (std::string(table) + ".log");
}
std::filesystem::path comments(const std::filesystem::path& dir, std::string_view table) {
  return dir / (std::string(table) + ".comments.log");
}
std::filesystem::path events(const std::filesystem::path& dir, std::string_view table) {
  return dir / (std::string(table) + ".events.log");
}

}  // namespace table_files

Table::Table(TableSpec spec, History history, FeedbackBook feedback, std::vector<EventPtr> events,
             std::map<std::string, Layer> layers, const HubOptions& options,
             std::shared_ptr<std::atomic<bool>> stopping)
    : spec_(std::move(spec)),
      history_(std::move(history)),
      feedback_(std::move(feedback)),
      events_(std::move(events)),
      layers_(std::move(layers)),
      clock_(options.clock ? options.clock : system_now_ms),
      stopping_(std::move(stopping)),
      persistent_(!options.data_dir.empty()) {
  if (persistent_) {
    commit_log_ = AppendLog(table_files::commits(options.data_dir, spec_.name), options.sync_writes);
    comment_log_ = AppendLog(table_files::comments(options.data_dir, spec_.name), options.sync_writes);
    event_log_ = AppendLog(table_files::events(options.data_dir, spec_.name), options.sync_writes);
  }
}

void Table::ensure_writable() const {
  if (read_only_) throw Error(Errc::storage_failure, "table '" + spec_.name + "' is read-only after a storage failure");
}

template <typename Fn>
auto Table::guarded_write(Fn&& fn) {
  std::unique_lock lock(mu_);
  ensure_writable();
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == Errc::storage_failure) {
      read_only_ = true;
      spdlog::error("table '{}' is now read-only: {}", spec_.name, e.what());
    }
    throw;
  }
}

void Table::emit(EventKind kind, std::string_view payload) {
  const std::uint64_t seq = events_.size() + 1;
  auto event = std::make_shared<const Event>(Event{seq, kind, encode_event(seq, kind, payload)});
  if (persistent_) event_log_.append(event->data);
  events_.push_back(std::move(event));
  events_cv_.notify_all();
}

CommitPtr Table::commit_genesis() {
  return guarded_write([&] {
    if (!history_.empty()) return history_.head();
    auto outcome = history_.commit(new_grid(spec_), "", Source::cli, clock_(), [&](const std::string& record) {
      if (persistent_) commit_log_.append(record);
    });
    emit(EventKind::commit, commit_event_payload(*outcome.commit, new_grid(spec_)));
    return outcome.commit;
  });
}

CommitPtr Table::head() const {
  std::shared_lock lock(mu_);
  return history_.head();
}

CommitPtr Table::commit_at(std::uint64_t version) const {
  std::shared_lock lock(mu_);
  return history_.get(version);
}

std::vector<CommitPtr> Table::commit_range(std::uint64_t from, std::uint64_t to) const {
  std::shared_lock lock(mu_);
  if (from == 0 || from > to) throw Error(Errc::bad_request, "range needs 1 <= from <= to");
  if (to > history_.head_version()) throw Error(Errc::unknown_version, "unknown version " + std::to_string(to));
  const auto& all = history_.commits();
  return {all.begin() + static_cast<std::ptrdiff_t>(from - 1), all.begin() + static_cast<std::ptrdiff_t>(to)};
}

PostOutcome Table::post(GridPost post) {
  if (post.grid && !post.edits.empty()) throw Error(Errc::bad_request, "send either a grid or an edit list");
  if (!post.grid && !post.base_version) throw Error(Errc::bad_request, "edit lists require base_version");
  validate_author(post.author, true);
  return guarded_write([&] {
    CommitPtr head = history_.head();
    if (post.base_version && *post.base_version != head->version) throw ConflictError(head);
    GridState next = post.grid ? std::move(*post.grid) : apply_edits(spec_, head->grid, post.edits);
    auto outcome = history_.commit(std::move(next), std::move(post.author), post.source, clock_(),
                                   [&](const std::string& record) {
                                     if (persistent_) commit_log_.append(record);
                                   });
    if (outcome.appended) emit(EventKind::commit, commit_event_payload(*outcome.commit, head->grid));
    return PostOutcome{outcome.commit, outcome.appended};
  });
}

Comment Table::add_comment(Anchor anchor, std::string text, std::string author) {
  return guarded_write([&] {
    const Comment& c = feedback_.add(spec_, anchor, std::move(text), std::move(author), clock_(),
                                     history_.head_version(), [&](const std::string& record) {
                                       if (persistent_) comment_log_.append(record);
                                     });
    emit(EventKind::comment, comment_payload(c));
    return c;
  });
}

std::size_t Table::react(std::uint64_t comment_id, std::string author) {
  return guarded_write([&] {
    auto outcome = feedback_.react(comment_id, std::move(author), [&](const std::string& record) {
      if (persistent_) comment_log_.append(record);
    });
    if (outcome.added) emit(EventKind::reaction, reaction_payload(feedback_.reactions().back(), outcome.like_count));
    return outcome.like_count;
  });
}

std::vector<RankedComment> Table::top_comments(std::size_t k) const {
  std::shared_lock lock(mu_);
  return cityio::top_comments(feedback_.ranked(), k);
}

std::size_t Table::comment_count() const {
  std::shared_lock lock(mu_);
  return feedback_.comments().size();
}

Heatmap Table::heatmap() const {
  std::shared_lock lock(mu_);
  return comment_heatmap(spec_, feedback_.comments(), history_.head_version());
}

void Table::post_layer(Layer layer) {
  validate_layer(layer, spec_);
  guarded_write([&] {
    if (layer.produced_from_version == 0 || layer.produced_from_version > history_.head_version()) {
      throw Error(Errc::invalid_layer, "produced_from_version " + std::to_string(layer.produced_from_version) +
                                           " is not a committed version");
    }
    std::string payload = layer_payload(layer);
    keep_newest(layers_, std::move(layer));
    emit(EventKind::layer, payload);
  });
}

std::optional<Layer> Table::layer(const std::string& name) const {
  std::shared_lock lock(mu_);
  auto it = layers_.find(name);
  if (it == layers_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Table::last_seq() const {
  std::shared_lock lock(mu_);
  return events_.size();
}

StreamSnapshot Table::snapshot() const {
  std::shared_lock lock(mu_);
  return {history_.head(), events_.size()};
}

std::vector<EventPtr> Table::wait_events(std::uint64_t after, std::chrono::milliseconds timeout,
                                         std::size_t max_batch) const {
  std::shared_lock lock(mu_);
  events_cv_.wait_for(lock, timeout, [&] { return events_.size() > after || stopping_->load(); });
  std::vector<EventPtr> out;
  for (std::uint64_t i = after; i < events_.size() && out.size() < max_batch; ++i) out.push_back(events_[i]);
  return out;
}

bool Table::read_only() const {
  std::shared_lock lock(mu_);
  return read_only_;
}

void Table::wake() {
  { std::unique_lock lock(mu_); }
  events_cv_.notify_all();
}

Hub::Hub(HubOptions options)
    : options_(std::move(options)), stopping_(std::make_shared<std::atomic<bool>>(false)) {
  if (!options_.clock) options_.clock = system_now_ms;
  if (options_.data_dir.empty()) return;
  std::filesystem::create_directories(options_.data_dir);
  std::vector<std::filesystem::path> spec_files;
  for (const auto& entry : std::filesystem::directory_iterator(options_.data_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".spec") spec_files.push_back(entry.path());
  }
  std::sort(spec_files.begin(), spec_files.end());
  for (const auto& path : spec_files) {
    const std::string name = path.stem().string();
    TableSpec spec;
    try {
      std::string text = read_file(path);
      if (!text.empty() && text.back() == '\n') text.pop_back();
      spec = spec_from_json(parse_json(text));
    } catch (const Error& e) {
      throw CorruptTableError(name, path.filename().string(), 1, e.what());
    }
    if (spec.name != name) throw CorruptTableError(name, path.filename().string(), 1, "name does not match file");
    tables_.emplace(name, load_table(spec));
  }
}

Hub::~Hub() { shutdown(); }

std::shared_ptr<Table> Hub::load_table(const TableSpec& spec) {
  const auto& dir = options_.data_dir;
  const auto commits_path = table_files::commits(dir, spec.name);
  const auto comments_path = table_files::comments(dir, spec.name);
  const auto events_path = table_files::events(dir, spec.name);

  auto corrupt = [&](const std::filesystem::path& p, const ChainBrokenError& e) {
    return CorruptTableError(spec.name, p.filename().string(), e.record(), e.reason());
  };
  auto warn_tail = [&](const LoadedLog& log, const std::filesystem::path& p) {
    if (log.discarded_tail) spdlog::warn("{}: discarded incomplete final record", p.string());
  };

  LoadedLog commit_log = load_log(commits_path);
  warn_tail(commit_log, commits_path);
  std::optional<History> history;
  try {
    history.emplace(replay(commit_log.records, spec));
  } catch (const ChainBrokenError& e) {
    throw corrupt(commits_path, e);
  }
  if (commit_log.needs_repair()) rewrite_log(commits_path, commit_log.records);

  LoadedLog comment_log = load_log(comments_path);
  warn_tail(comment_log, comments_path);
  FeedbackBook feedback;
  try {
    feedback.restore(comment_log.records, spec);
  } catch (const ChainBrokenError& e) {
    throw corrupt(comments_path, e);
  }
  if (comment_log.needs_repair()) rewrite_log(comments_path, comment_log.records);

  LoadedLog event_log = load_log(events_path);
  warn_tail(event_log, events_path);
  RecoveredEvents rec;
  try {
    rec = recover_events(event_log.records, spec, *history, feedback);
  } catch (const ChainBrokenError& e) {
    throw corrupt(events_path, e);
  }
  if (rec.truncated || event_log.needs_repair()) {
    if (rec.truncated) spdlog::warn("{}: dropped events past the end of the commit/comment logs", events_path.string());
    std::vector<std::string> kept;
    for (const auto& e : rec.events) kept.push_back(e->data);
    rewrite_log(events_path, kept);
  }

  // Re-emit events for mutations that reached their own log but not the
  // event log.
  std::vector<std::string> missing;
  auto next_seq = [&] { return rec.events.size() + missing.size() + 1; };
  for (std::uint64_t v = rec.commits + 1; v <= history->head_version(); ++v) {
    const GridState previous = v == 1 ? new_grid(spec) : history->get(v - 1)->grid;
    missing.push_back(encode_event(next_seq(), EventKind::commit, commit_event_payload(*history->get(v), previous)));
  }
  for (std::uint64_t id = rec.comments + 1; id <= feedback.comments().size(); ++id) {
    missing.push_back(encode_event(next_seq(), EventKind::comment, comment_payload(feedback.comment(id))));
  }
  for (std::uint64_t i = rec.reactions; i < feedback.reactions().size(); ++i) {
    const Reaction& r = feedback.reactions()[i];
    std::size_t likes = 0;
    for (std::uint64_t j = 0; j <= i; ++j) likes += feedback.reactions()[j].comment_id == r.comment_id ? 1 : 0;
    missing.push_back(encode_event(next_seq(), EventKind::reaction, reaction_payload(r, likes)));
  }
  if (!missing.empty()) {
    spdlog::warn("table '{}': restoring {} missing events", spec.name, missing.size());
    AppendLog log(events_path, options_.sync_writes);
    for (std::string& data : missing) {
      log.append(data);
      const std::uint64_t seq = rec.events.size() + 1;
      auto kind = parse_event_kind(field::as_string(parse_json(data)["kind"], "kind"));
      rec.events.push_back(std::make_shared<const Event>(Event{seq, *kind, std::move(data)}));
    }
  }

  auto table = std::make_shared<Table>(spec, std::move(*history), std::move(feedback), std::move(rec.events),
                                       std::move(rec.layers), options_, stopping_);
  table->commit_genesis();
  return table;
}

std::vector<TableSummary> Hub::list_tables() const {
  std::shared_lock lock(mu_);
  std::vector<TableSummary> out;
  for (const auto& [name, table] : tables_) out.push_back({name, table->head()->version, table->spec()});
  return out;
}

CommitPtr Hub::create_table(TableSpec spec) {
  validate_spec(spec);
  std::unique_lock lock(mu_);
  if (tables_.contains(spec.name)) throw Error(Errc::table_exists, "table '" + spec.name + "' already exists");
  if (!options_.data_dir.empty()) {
    const auto spec_path = table_files::spec(options_.data_dir, spec.name);
    if (std::filesystem::exists(spec_path)) {
      throw Error(Errc::table_exists, "table '" + spec.name + "' already exists on disk");
    }
    for (const auto& p : {table_files::commits(options_.data_dir, spec.name),
                          table_files::comments(options_.data_dir, spec.name),
                          table_files::events(options_.data_dir, spec.name)}) {
      std::filesystem::remove(p);
    }
    write_file_atomic(spec_path, canonical_dump(spec_to_json(spec)) + "\n");
  }
  auto table = std::make_shared<Table>(spec, History(spec), FeedbackBook{}, std::vector<EventPtr>{},
                                       std::map<std::string, Layer>{}, options_, stopping_);
  CommitPtr genesis = table->commit_genesis();
  tables_.emplace(spec.name, std::move(table));
  return genesis;
}

std::shared_ptr<Table> Hub::table(std::string_view name) const {
  std::shared_lock lock(mu_);
  auto it = tables_.find(name);
  if (it == tables_.end()) throw Error(Errc::unknown_table, "unknown table '" + std::string(name) + "'");
  return it->second;
}

void Hub::check_worker_token(std::string_view token) const {
  if (options_.worker_token.empty() || token != options_.worker_token) {
    throw Error(Errc::unauthorized, "missing or wrong worker token");
  }
}

void Hub::shutdown() {
  stopping_->store(true);
  std::shared_lock lock(mu_);
  for (const auto& [name, table] : tables_) table->wake();
}

}  // namespace cityio
