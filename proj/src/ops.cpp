#include "cityio/ops.hpp"

#include "cityio/codec.hpp"
#include "cityio/error.hpp"
#include "cityio/feedback.hpp"
#include "cityio/hub.hpp"
#include "cityio/log_file.hpp"

namespace cityio {

namespace {

constexpr std::string_view kBundlePrefix = "{\"table_spec\":";

std::string join_records(std::span<const std::string> records) {
  std::size_t n = 0;
  for (const auto& r : records) n += r.size() + 1;
  std::string out;
  out.reserve(n);
  for (const auto& r : records) {
    out += r;
    out += '\n';
  }
  return out;
}

VerifyReport check_records(std::string file, const LoadedLog& log, const std::function<void()>& verify) {
  VerifyReport report;
  report.file = std::move(file);
  report.records = log.records.size();
  report.torn_tail = log.discarded_tail;
  try {
    verify();
  } catch (const ChainBrokenError& e) {
    report.ok = false;
    report.broken_at = e.record();
    report.reason = e.reason();
  }
  return report;
}

}  // namespace

std::string encode_bundle(const TableSpec& spec, std::span<const std::string> records) {
  return ObjectWriter().field("table_spec", spec_to_json(spec)).finish() + "\n" + join_records(records);
}

Bundle decode_bundle(std::string_view bytes) {
  const std::size_t nl = bytes.find('\n');
  if (!bytes.starts_with(kBundlePrefix) || nl == std::string_view::npos) {
    throw Error(Errc::malformed_encoding, "not a table bundle: missing {\"table_spec\":...} header line");
  }
  Bundle b;
  try {
    Json header = parse_json(bytes.substr(0, nl));
    field::expect_keys(header, {"table_spec"}, "bundle header");
    b.spec = spec_from_json(field::require(header, "table_spec"));
  } catch (const Error& e) {
    throw Error(Errc::malformed_encoding, std::string("bundle header: ") + e.what());
  }
  b.records = parse_log(bytes.substr(nl + 1)).records;
  return b;
}

TableSpec read_table_spec(const std::filesystem::path& data_dir, const std::string& table) {
  const auto path = table_files::spec(data_dir, table);
  if (!std::filesystem::exists(path)) throw Error(Errc::unknown_table, "no table '" + table + "' in " + data_dir.string());
  std::string text = read_file(path);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return spec_from_json(parse_json(text));
}

std::size_t export_table(const std::filesystem::path& data_dir, const std::string& table,
                         const std::filesystem::path& out) {
  const TableSpec spec = read_table_spec(data_dir, table);
  LoadedLog log = load_log(table_files::commits(data_dir, table));
  replay(log.records, spec);
  write_file_atomic(out, encode_bundle(spec, log.records));
  return log.records.size();
}

std::size_t import_bundle(const std::filesystem::path& data_dir, const std::filesystem::path& in) {
  Bundle b = decode_bundle(read_file(in));
  History history = replay(b.records, b.spec);
  if (history.empty()) throw Error(Errc::empty_history, "bundle has no commits");
  std::filesystem::create_directories(data_dir);
  const auto spec_path = table_files::spec(data_dir, b.spec.name);
  if (std::filesystem::exists(spec_path)) {
    throw Error(Errc::table_exists, "table '" + b.spec.name + "' already exists in " + data_dir.string());
  }
  std::vector<std::string> events;
  events.reserve(b.records.size());
  const GridState empty = new_grid(b.spec);
  for (const CommitPtr& c : history.commits()) {
    const GridState& previous = c->version == 1 ? empty : history.get(c->version - 1)->grid;
    events.push_back(encode_event(c->version, EventKind::commit, commit_event_payload(*c, previous)));
  }
  std::filesystem::remove(table_files::comments(data_dir, b.spec.name));
  write_file_atomic(table_files::commits(data_dir, b.spec.name), join_records(b.records));
  write_file_atomic(table_files::events(data_dir, b.spec.name), join_records(events));
  // The spec goes last: a table only exists once its spec file does.
  write_file_atomic(spec_path, canonical_dump(spec_to_json(b.spec)) + "\n");
  return b.records.size();
}

VerifyReport verify_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(Errc::storage_failure, "no such file: " + path.string());
  const std::string bytes = read_file(path);
  if (std::string_view(bytes).starts_with(kBundlePrefix)) {
    const Bundle b = decode_bundle(bytes);
    const std::size_t nl = bytes.find('\n');
    const LoadedLog log = parse_log(std::string_view(bytes).substr(nl + 1));
    return check_records(path.filename().string(), log, [&] { replay(log.records, b.spec); });
  }
  // <table>.log, <table>.comments.log or <table>.events.log
  const std::string name = path.filename().string();
  auto strip = [&](std::string_view suffix) -> std::optional<std::string> {
    if (name.size() > suffix.size() && name.ends_with(suffix)) return name.substr(0, name.size() - suffix.size());
    return std::nullopt;
  };
  const auto dir = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  if (auto t = strip(".comments.log"); t) {
    const TableSpec spec = read_table_spec(dir, *t);
    const LoadedLog log = parse_log(bytes);
    return check_records(name, log, [&] {
      FeedbackBook book;
      book.restore(log.records, spec);
    });
  }
  if (auto t = strip(".events.log"); t) {
    for (VerifyReport& r : verify_table(dir, *t)) {
      if (r.file == name || !r.ok) return r;
    }
    throw Error(Errc::storage_failure, "event log not checked");
  }
  if (auto t = strip(".log"); t) {
    const TableSpec spec = read_table_spec(dir, *t);
    const LoadedLog log = parse_log(bytes);
    return check_records(name, log, [&] { replay(log.records, spec); });
  }
  throw Error(Errc::bad_request, "cannot tell what kind of file " + path.string() + " is");
}

std::vector<VerifyReport> verify_table(const std::filesystem::path& data_dir, const std::string& table) {
  const TableSpec spec = read_table_spec(data_dir, table);
  std::vector<VerifyReport> out;

  const auto commits_path = table_files::commits(data_dir, table);
  const LoadedLog commit_log = load_log(commits_path);
  std::optional<History> history;
  out.push_back(check_records(commits_path.filename().string(), commit_log,
                              [&] { history.emplace(replay(commit_log.records, spec)); }));
  if (!out.back().ok) return out;

  const auto comments_path = table_files::comments(data_dir, table);
  const LoadedLog comment_log = load_log(comments_path);
  FeedbackBook book;
  out.push_back(check_records(comments_path.filename().string(), comment_log,
                              [&] { book.restore(comment_log.records, spec); }));
  if (!out.back().ok) return out;

  const auto events_path = table_files::events(data_dir, table);
  const LoadedLog event_log = load_log(events_path);
  out.push_back(check_records(events_path.filename().string(), event_log,
                              [&] { verify_event_log(event_log.records, spec, *history, book); }));
  return out;
}

ReplaySummary replay_table(const std::filesystem::path& data_dir, const std::string& table) {
  const TableSpec spec = read_table_spec(data_dir, table);
  History history = replay(load_log(table_files::commits(data_dir, table)).records, spec);
  FeedbackBook book;
  book.restore(load_log(table_files::comments(data_dir, table)).records, spec);
  ReplaySummary s;
  s.table = table;
  s.head_version = history.head_version();
  if (!history.empty()) {
    s.head_commit_hash = history.head()->commit_hash;
    s.head_grid_hash = history.head()->grid_hash;
  }
  s.comments = book.comments().size();
  s.reactions = book.reactions().size();
  return s;
}

}  // namespace cityio
