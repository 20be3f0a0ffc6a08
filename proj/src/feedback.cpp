#include "cityio/feedback.hpp"

#include <algorithm>
#include <cmath>

#include "cityio/error.hpp"
#include "cityio/geo.hpp"
#include "cityio/history.hpp"

namespace cityio {

namespace {

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

bool is_valid_utf8(const std::string& text) {
  try {
    (void)Json(text).dump();
    return true;
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

}  // namespace

Json anchor_to_json(const Anchor& anchor) {
  Json j;
  if (const auto* cell = std::get_if<CellAnchor>(&anchor)) {
    j["col"] = cell->col;
    j["row"] = cell->row;
  } else {
    const auto& geo = std::get<GeoAnchor>(anchor);
    j["lat"] = geo.lat;
    j["lon"] = geo.lon;
  }
  return j;
}

Anchor anchor_from_json(const Json& value) {
  using namespace field;
  expect_object(value, "anchor");
  if (value.contains("col") || value.contains("row")) {
    expect_keys(value, {"col", "row"}, "cell anchor");
    const std::int64_t col = as_int(require(value, "col"), "col");
    const std::int64_t row = as_int(require(value, "row"), "row");
    if (col < 0 || row < 0 || col > kMaxGridSide || row > kMaxGridSide) {
      throw Error(Errc::invalid_anchor, "cell anchor out of bounds");
    }
    return CellAnchor{static_cast<int>(col), static_cast<int>(row)};
  }
  expect_keys(value, {"lat", "lon"}, "geo anchor");
  return GeoAnchor{as_double(require(value, "lat"), "lat"), as_double(require(value, "lon"), "lon")};
}

std::string encode_comment(const Comment& c) {
  return ObjectWriter()
      .field("id", c.id)
      .field("anchor", anchor_to_json(c.anchor))
      .field("text", c.text)
      .field("author", c.author)
      .field("created_at_ms", c.created_at_ms)
      .field("version_at_creation", c.version_at_creation)
      .finish();
}

Comment comment_from_json(const Json& value) {
  using namespace field;
  expect_keys(value, {"id", "anchor", "text", "author", "created_at_ms", "version_at_creation"}, "comment");
  Comment c;
  c.id = as_uint(require(value, "id"), "id");
  c.anchor = anchor_from_json(require(value, "anchor"));
  c.text = as_string(require(value, "text"), "text");
  c.author = as_string(require(value, "author"), "author");
  c.created_at_ms = as_int(require(value, "created_at_ms"), "created_at_ms");
  c.version_at_creation = as_uint(require(value, "version_at_creation"), "version_at_creation");
  return c;
}

std::string encode_reaction(const Reaction& r) {
  return ObjectWriter().field("comment_id", r.comment_id).field("author", r.author).finish();
}

std::string comment_record(const Comment& comment) {
  return ObjectWriter().raw("comment", encode_comment(comment)).finish();
}

std::string reaction_record(const Reaction& reaction) {
  return ObjectWriter().raw("reaction", encode_reaction(reaction)).finish();
}

void validate_comment(const TableSpec& spec, const Anchor& anchor, std::string_view text, std::string_view author) {
  if (is_blank(text)) throw Error(Errc::empty_text, "comment text is empty");
  if (!is_valid_utf8(std::string(text))) throw Error(Errc::malformed_encoding, "comment text is not valid UTF-8");
  if (utf8_length(text) > kMaxCommentLength) throw Error(Errc::text_too_long, "comment text exceeds 500 characters");
  validate_author(author, false);
  if (const auto* cell = std::get_if<CellAnchor>(&anchor)) {
    if (cell->col < 0 || cell->row < 0 || cell->col >= spec.ncols || cell->row >= spec.nrows) {
      throw Error(Errc::invalid_anchor, "cell anchor out of bounds");
    }
  } else {
    const auto& geo = std::get<GeoAnchor>(anchor);
    if (!std::isfinite(geo.lat) || !std::isfinite(geo.lon)) {
      throw Error(Errc::invalid_anchor, "geo anchor must be finite");
    }
  }
}

bool ranks_before(const RankedComment& a, const RankedComment& b) {
  if (a.like_count != b.like_count) return a.like_count > b.like_count;
  if (a.comment.created_at_ms != b.comment.created_at_ms) return a.comment.created_at_ms < b.comment.created_at_ms;
  return a.comment.id < b.comment.id;
}

std::vector<RankedComment> top_comments(std::vector<RankedComment> all, std::size_t k) {
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), ranks_before);
  all.resize(n);
  return all;
}

Heatmap comment_heatmap(const TableSpec& spec, std::span<const Comment> comments, std::uint64_t head_version) {
  Heatmap h;
  std::vector<double> counts(spec.cell_count(), 0.0);
  for (const Comment& c : comments) {
    if (const auto* cell = std::get_if<CellAnchor>(&c.anchor)) {
      counts[cell_index(spec, cell->col, cell->row)] += 1.0;
    } else {
      const auto& geo = std::get<GeoAnchor>(c.anchor);
      if (auto hit = try_geo_to_cell(spec, geo.lat, geo.lon)) {
        counts[cell_index(spec, hit->col, hit->row)] += 1.0;
      } else {
        ++h.out_of_extent;
      }
    }
  }
  h.layer = make_scalar_layer("comment_heatmap", spec, std::move(counts));
  h.layer.produced_from_version = head_version;
  h.layer.producer = "feedback";
  return h;
}

const Comment& FeedbackBook::add(const TableSpec& spec, Anchor anchor, std::string text, std::string author,
                                 std::int64_t now_ms, std::uint64_t head_version, const Persist& persist) {
  validate_comment(spec, anchor, text, author);
  Comment c;
  c.id = comments_.size() + 1;
  c.anchor = anchor;
  c.text = std::move(text);
  c.author = std::move(author);
  c.created_at_ms = comments_.empty() ? now_ms : std::max(now_ms, comments_.back().created_at_ms);
  c.version_at_creation = head_version;
  if (persist) persist(comment_record(c));
  comments_.push_back(std::move(c));
  likers_.emplace_back();
  return comments_.back();
}

FeedbackBook::ReactOutcome FeedbackBook::react(std::uint64_t comment_id, std::string author, const Persist& persist) {
  if (comment_id == 0 || comment_id > comments_.size()) {
    throw Error(Errc::unknown_comment, "unknown comment " + std::to_string(comment_id));
  }
  validate_author(author, false);
  auto& likers = likers_[comment_id - 1];
  if (likers.contains(author)) return {likers.size(), false};
  Reaction r{comment_id, std::move(author)};
  if (persist) persist(reaction_record(r));
  likers.insert(r.author);
  reactions_.push_back(std::move(r));
  return {likers.size(), true};
}

void FeedbackBook::restore(std::span<const std::string> records, const TableSpec& spec) {
  using namespace field;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t k = i + 1;
    try {
      const Json j = parse_json(records[i]);
      expect_object(j, "comment record");
      if (j.size() != 1) throw Error(Errc::malformed_encoding, "record must hold exactly one object");
      if (const Json* cj = optional(j, "comment")) {
        Comment c = comment_from_json(*cj);
        if (c.id != comments_.size() + 1) throw Error(Errc::malformed_encoding, "comment ids are not dense");
        validate_comment(spec, c.anchor, c.text, c.author);
        if (comment_record(c) != records[i]) throw Error(Errc::malformed_encoding, "record is not canonical");
        comments_.push_back(std::move(c));
        likers_.emplace_back();
      } else {
        const Json& rj = require(j, "reaction");
        expect_keys(rj, {"comment_id", "author"}, "reaction");
        Reaction r{as_uint(require(rj, "comment_id"), "comment_id"), as_string(require(rj, "author"), "author")};
        if (r.comment_id == 0 || r.comment_id > comments_.size()) {
          throw Error(Errc::unknown_comment, "reaction to unknown comment");
        }
        validate_author(r.author, false);
        if (reaction_record(r) != records[i]) throw Error(Errc::malformed_encoding, "record is not canonical");
        if (!likers_[r.comment_id - 1].insert(r.author).second) {
          throw Error(Errc::malformed_encoding, "duplicate reaction");
        }
        reactions_.push_back(std::move(r));
      }
    } catch (const ChainBrokenError&) {
      throw;
    } catch (const Error& e) {
      throw ChainBrokenError(k, e.what());
    }
  }
}

const Comment& FeedbackBook::comment(std::uint64_t id) const {
  if (id == 0 || id > comments_.size()) throw Error(Errc::unknown_comment, "unknown comment " + std::to_string(id));
  return comments_[id - 1];
}

std::size_t FeedbackBook::like_count(std::uint64_t id) const {
  if (id == 0 || id > comments_.size()) throw Error(Errc::unknown_comment, "unknown comment " + std::to_string(id));
  return likers_[id - 1].size();
}

std::vector<RankedComment> FeedbackBook::ranked() const {
  std::vector<RankedComment> out;
  out.reserve(comments_.size());
  for (std::size_t i = 0; i < comments_.size(); ++i) out.push_back({comments_[i], likers_[i].size()});
  return out;
}

}  // namespace cityio
