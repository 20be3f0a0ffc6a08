#include "cityio/history.hpp"

#include <array>

#include "cityio/codec.hpp"
#include "cityio/error.hpp"

namespace cityio {

namespace {

void put_be(Sha256& h, std::uint64_t v, int bytes) {
  std::array<std::uint8_t, 8> buf{};
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * (bytes - 1 - i)));
  h.update(std::span(buf.data(), static_cast<std::size_t>(bytes)));
}

void put_sized(Sha256& h, std::string_view s) {
  put_be(h, s.size(), 4);
  h.update(s);
}

Digest parse_digest(const Json& value, std::string_view what) {
  auto d = Digest::from_hex(field::as_string(value, what));
  if (!d) throw Error(Errc::malformed_encoding, std::string(what) + " must be 64 lowercase hex characters");
  return *d;
}

// Checks one decoded record against its predecessor. Returns an empty string
// when the link is sound.
std::string link_problem(const Commit& c, const Commit* prev, std::string_view grid_encoding) {
  const std::uint64_t expected_version = prev ? prev->version + 1 : 1;
  if (c.version != expected_version) {
    return "version " + std::to_string(c.version) + ", expected " + std::to_string(expected_version);
  }
  const Digest expected_parent = prev ? prev->commit_hash : Digest{};
  if (c.parent_hash != expected_parent) return "parent_hash does not match predecessor";
  if (prev && c.timestamp_ms < prev->timestamp_ms) return "timestamp decreases";
  if (c.grid_hash != sha256(grid_encoding)) return "grid_hash does not match grid";
  if (c.commit_hash !=
      compute_commit_hash(c.parent_hash, c.version, c.timestamp_ms, grid_encoding, c.author, c.source)) {
    return "commit_hash does not match contents";
  }
  return {};
}

}  // namespace

std::string_view to_string(Source source) {
  switch (source) {
    case Source::table: return "table";
    case Source::ui: return "ui";
    case Source::worker: return "worker";
    case Source::cli: return "cli";
  }
  return "cli";
}

std::optional<Source> parse_source(std::string_view text) {
  if (text == "table") return Source::table;
  if (text == "ui") return Source::ui;
  if (text == "worker") return Source::worker;
  if (text == "cli") return Source::cli;
  return std::nullopt;
}

void validate_author(std::string_view author, bool allow_empty) {
  if (!allow_empty && author.empty()) throw Error(Errc::invalid_author, "author must not be empty");
  if (utf8_length(author) > kMaxAuthorLength) throw Error(Errc::invalid_author, "author longer than 64 characters");
  for (unsigned char c : author) {
    if (c < 0x20 || c == 0x7f) throw Error(Errc::invalid_author, "author contains control characters");
  }
}

Digest compute_commit_hash(const Digest& parent_hash, std::uint64_t version, std::int64_t timestamp_ms,
                           std::string_view grid_encoding, std::string_view author, Source source) {
  Sha256 h;
  h.update(std::span<const std::uint8_t>(parent_hash.bytes));
  put_be(h, version, 8);
  put_be(h, static_cast<std::uint64_t>(timestamp_ms), 8);
  put_sized(h, grid_encoding);
  put_sized(h, author);
  put_sized(h, to_string(source));
  return h.finish();
}

std::string encode_commit(const Commit& c) {
  return ObjectWriter()
      .field("version", c.version)
      .field("parent_hash", c.parent_hash.hex())
      .field("grid_hash", c.grid_hash.hex())
      .field("commit_hash", c.commit_hash.hex())
      .field("author", c.author)
      .field("source", std::string(to_string(c.source)))
      .field("timestamp_ms", c.timestamp_ms)
      .raw("grid", canonical_encode(c.grid))
      .finish();
}

Commit decode_commit(std::string_view record, const TableSpec& spec) {
  using namespace field;
  const Json j = parse_json(record);
  expect_keys(j, {"version", "parent_hash", "grid_hash", "commit_hash", "author", "source", "timestamp_ms", "grid"},
              "commit");
  Commit c;
  c.version = as_uint(require(j, "version"), "version");
  c.parent_hash = parse_digest(require(j, "parent_hash"), "parent_hash");
  c.grid_hash = parse_digest(require(j, "grid_hash"), "grid_hash");
  c.commit_hash = parse_digest(require(j, "commit_hash"), "commit_hash");
  c.author = as_string(require(j, "author"), "author");
  validate_author(c.author, true);
  auto source = parse_source(as_string(require(j, "source"), "source"));
  if (!source) throw Error(Errc::malformed_encoding, "unknown source");
  c.source = *source;
  c.timestamp_ms = as_int(require(j, "timestamp_ms"), "timestamp_ms");
  c.grid = grid_from_json(require(j, "grid"), spec);
  return c;
}

History::History(TableSpec spec) : spec_(std::move(spec)) {}

History::Outcome History::commit(GridState grid, std::string author, Source source, std::int64_t now_ms,
                                 const Persist& persist) {
  validate_grid(spec_, grid);
  validate_author(author, true);
  std::string encoding = canonical_encode(grid);
  const Digest grid_hash = sha256(encoding);

  const Commit* prev = commits_.empty() ? nullptr : commits_.back().get();
  if (prev && prev->grid_hash == grid_hash) return {commits_.back(), false};

  auto c = std::make_shared<Commit>();
  c->version = prev ? prev->version + 1 : 1;
  c->parent_hash = prev ? prev->commit_hash : Digest{};
  c->grid_hash = grid_hash;
  c->author = std::move(author);
  c->source = source;
  // Ordering comes from the version counter; the clamp only keeps the
  // recorded timestamps non-decreasing.
  c->timestamp_ms = prev ? std::max(now_ms, prev->timestamp_ms) : now_ms;
  c->commit_hash = compute_commit_hash(c->parent_hash, c->version, c->timestamp_ms, encoding, c->author, c->source);
  c->grid = std::move(grid);

  if (persist) persist(encode_commit(*c));
  commits_.push_back(c);
  return {std::move(c), true};
}

CommitPtr History::head() const {
  if (commits_.empty()) throw Error(Errc::empty_history, "table has no commits");
  return commits_.back();
}

CommitPtr History::get(std::uint64_t version) const {
  if (version == 0 || version > commits_.size()) {
    throw Error(Errc::unknown_version, "unknown version " + std::to_string(version));
  }
  return commits_[version - 1];
}

ChainCheck verify_chain(std::span<const std::string> records, const TableSpec& spec) {
  try {
    replay(records, spec);
  } catch (const ChainBrokenError& e) {
    return {false, e.record(), e.reason()};
  }
  return {};
}

History replay(std::span<const std::string> records, const TableSpec& spec) {
  History history(spec);
  history.commits_.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t k = i + 1;
    Commit c;
    try {
      c = decode_commit(records[i], spec);
    } catch (const Error& e) {
      throw ChainBrokenError(k, std::string("undecodable record: ") + e.what());
    }
    // Re-encoding must reproduce the stored bytes exactly; this catches
    // edits that decode to the same values (whitespace, escapes).
    const std::string grid_encoding = canonical_encode(c.grid);
    if (encode_commit(c) != records[i]) throw ChainBrokenError(k, "record is not in canonical form");
    const Commit* prev = history.commits_.empty() ? nullptr : history.commits_.back().get();
    if (std::string problem = link_problem(c, prev, grid_encoding); !problem.empty()) {
      throw ChainBrokenError(k, problem);
    }
    history.commits_.push_back(std::make_shared<const Commit>(std::move(c)));
  }
  return history;
}

}  // namespace cityio
