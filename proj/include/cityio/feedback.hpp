#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cityio/codec.hpp"
#include "cityio/grid.hpp"
#include "cityio/layer.hpp"

namespace cityio {

struct CellAnchor {
  int col = 0;
  int row = 0;

  friend bool operator==(const CellAnchor&, const CellAnchor&) = default;
};

struct GeoAnchor {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoAnchor&, const GeoAnchor&) = default;
};

using Anchor = std::variant<CellAnchor, GeoAnchor>;

inline constexpr std::size_t kMaxCommentLength = 500;

struct Comment {
  std::uint64_t id = 0;
  Anchor anchor;
  std::string text;
  std::string author;
  std::int64_t created_at_ms = 0;
  std::uint64_t version_at_creation = 0;

  friend bool operator==(const Comment&, const Comment&) = default;
};

struct Reaction {
  std::uint64_t comment_id = 0;
  std::string author;

  friend bool operator==(const Reaction&, const Reaction&) = default;
};

struct RankedComment {
  Comment comment;
  std::size_t like_count = 0;
};

Json anchor_to_json(const Anchor& anchor);
Anchor anchor_from_json(const Json& value);

std::string encode_comment(const Comment& comment);
Comment comment_from_json(const Json& value);
std::string encode_reaction(const Reaction& reaction);

// Comment-log framing: {"comment":{...}} or {"reaction":{...}} per line.
std::string comment_record(const Comment& comment);
std::string reaction_record(const Reaction& reaction);

// empty_text / text_too_long / invalid_author / invalid_anchor.
void validate_comment(const TableSpec& spec, const Anchor& anchor, std::string_view text, std::string_view author);

// Likes descending, then created_at_ms ascending, then id ascending.
bool ranks_before(const RankedComment& a, const RankedComment& b);

std::vector<RankedComment> top_comments(std::vector<RankedComment> all, std::size_t k);

struct Heatmap {
  Layer layer;
  std::size_t out_of_extent = 0;
};

// Counts per cell; geo anchors go through geo_to_cell and out-of-extent ones
// are counted separately instead of being snapped to an edge.
Heatmap comment_heatmap(const TableSpec& spec, std::span<const Comment> comments, std::uint64_t head_version);

// Per-table comment store. Not synchronized; the table funnels writes.
class FeedbackBook {
 public:
  using Persist = std::function<void(const std::string& record)>;

  struct ReactOutcome {
    std::size_t like_count = 0;
    bool added = false;
  };

  const Comment& add(const TableSpec& spec, Anchor anchor, std::string text, std::string author,
                     std::int64_t now_ms, std::uint64_t head_version, const Persist& persist);

  // Idempotent per (comment, author); persists only first applications.
  ReactOutcome react(std::uint64_t comment_id, std::string author, const Persist& persist);

  // Restores from comment-log records. Throws ChainBrokenError(k) on a
  // record that does not decode or breaks id density / reaction rules.
  void restore(std::span<const std::string> records, const TableSpec& spec);

  const std::vector<Comment>& comments() const noexcept { return comments_; }
  const std::vector<Reaction>& reactions() const noexcept { return reactions_; }
  const Comment& comment(std::uint64_t id) const;
  std::size_t like_count(std::uint64_t id) const;
  std::vector<RankedComment> ranked() const;

 private:
  std::vector<Comment> comments_;
  std::vector<std::set<std::string>> likers_;
  std::vector<Reaction> reactions_;
};

}  // namespace cityio
