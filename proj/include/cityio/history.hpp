#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cityio/digest.hpp"
#include "cityio/grid.hpp"

namespace cityio {

enum class Source { table, ui, worker, cli };

std::string_view to_string(Source source);
std::optional<Source> parse_source(std::string_view text);

inline constexpr std::size_t kMaxAuthorLength = 64;

// At most 64 code points and no control characters. Throws invalid_author.
void validate_author(std::string_view author, bool allow_empty);

struct Commit {
  std::uint64_t version = 0;
  Digest parent_hash;
  Digest grid_hash;
  Digest commit_hash;
  std::string author;
  Source source = Source::cli;
  std::int64_t timestamp_ms = 0;
  GridState grid;

  friend bool operator==(const Commit&, const Commit&) = default;
};

using CommitPtr = std::shared_ptr<const Commit>;

// SHA-256 over parent hash (32 raw bytes), version and timestamp (8-byte
// big-endian each), then grid encoding, author and source, each prefixed by
// its 4-byte big-endian length.
Digest compute_commit_hash(const Digest& parent_hash, std::uint64_t version, std::int64_t timestamp_ms,
                           std::string_view grid_encoding, std::string_view author, Source source);

// One log line, without the trailing newline.
std::string encode_commit(const Commit& commit);

// Structural decode plus grid validation against the spec; hashes are not
// checked here (see verify_chain).
Commit decode_commit(std::string_view record, const TableSpec& spec);

// In-memory linear chain for one table. Not synchronized: callers funnel all
// writes through one writer.
class History {
 public:
  using Persist = std::function<void(const std::string& record)>;

  struct Outcome {
    CommitPtr commit;
    bool appended = false;
  };

  explicit History(TableSpec spec);

  // Idempotent on the head grid. `persist` runs before the commit becomes
  // visible; if it throws nothing is appended.
  Outcome commit(GridState grid, std::string author, Source source, std::int64_t now_ms, const Persist& persist);

  bool empty() const noexcept { return commits_.empty(); }
  std::uint64_t head_version() const noexcept { return commits_.size(); }
  CommitPtr head() const;
  CommitPtr get(std::uint64_t version) const;
  const std::vector<CommitPtr>& commits() const noexcept { return commits_; }
  const TableSpec& spec() const noexcept { return spec_; }

 private:
  friend History replay(std::span<const std::string> records, const TableSpec& spec);

  TableSpec spec_;
  std::vector<CommitPtr> commits_;
};

struct ChainCheck {
  bool ok = true;
  std::size_t broken_at = 0;  // 1-based record index when !ok
  std::string reason;
};

ChainCheck verify_chain(std::span<const std::string> records, const TableSpec& spec);

// Rebuilds the chain; throws ChainBrokenError at the first bad record.
// An empty record list yields an empty history awaiting genesis.
History replay(std::span<const std::string> records, const TableSpec& spec);

}  // namespace cityio
