#pragma once

// Canonical textual encoding shared by the wire, the log files and the
// hashes: UTF-8 JSON objects with a fixed key order per type, base-10
// integers, shortest round-trip floats and no insignificant whitespace.

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cityio/digest.hpp"
#include "cityio/grid.hpp"

namespace cityio {

using Json = nlohmann::ordered_json;

std::string canonical_dump(const Json& value);

// Throws Error(malformed_encoding) on any syntax error, including invalid UTF-8.
Json parse_json(std::string_view text);

// Builds a canonical object field by field. raw() splices an already
// canonical value (used to embed grid encodings without re-parsing them).
class ObjectWriter {
 public:
  ObjectWriter();
  ObjectWriter& field(std::string_view key, const Json& value);
  ObjectWriter& raw(std::string_view key, std::string_view canonical_value);
  std::string finish();

 private:
  std::string out_;
  bool first_ = true;
};

namespace field {

const Json& require(const Json& obj, std::string_view key);
const Json* optional(const Json& obj, std::string_view key);
std::uint64_t as_uint(const Json& value, std::string_view what);
std::int64_t as_int(const Json& value, std::string_view what);
double as_double(const Json& value, std::string_view what);
const std::string& as_string(const Json& value, std::string_view what);
bool as_bool(const Json& value, std::string_view what);
void expect_object(const Json& value, std::string_view what);
void expect_keys(const Json& obj, std::initializer_list<std::string_view> allowed, std::string_view what);

}  // namespace field

Json spec_to_json(const TableSpec& spec);
// Missing floor_height_m / rotation_deg / registry fall back to defaults.
// The result is validated (invalid_spec).
TableSpec spec_from_json(const Json& value);

Json cell_to_json(const Cell& cell);
// Structural decoding only; validation against a registry is separate.
Cell cell_from_json(const Json& value);

std::string canonical_encode(const GridState& state);
GridState canonical_decode(std::string_view bytes, const TableSpec& spec);
GridState grid_from_json(const Json& value, const TableSpec& spec);

Digest state_hash(const GridState& state);

std::string encode_changes(std::span<const CellChange> changes);
std::vector<CellEdit> edits_from_json(const Json& value);

std::size_t utf8_length(std::string_view text);

}  // namespace cityio
