#include "cityio/codec.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "cityio/error.hpp"

namespace cityio {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::malformed_encoding, what); }

void append_string(std::string& out, const std::string& s) {
  // The library's string serializer already produces minimal JSON escapes
  // and rejects invalid UTF-8.
  try {
    out += Json(s).dump();
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("string is not valid UTF-8: ") + e.what());
  }
}

template <typename T>
void append_number(std::string& out, T value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, end);
}

void write_value(std::string& out, const Json& v) {
  switch (v.type()) {
    case Json::value_t::null: out += "null"; return;
    case Json::value_t::boolean: out += v.get<bool>() ? "true" : "false"; return;
    case Json::value_t::number_integer: append_number(out, v.get<std::int64_t>()); return;
    case Json::value_t::number_unsigned: append_number(out, v.get<std::uint64_t>()); return;
    case Json::value_t::number_float: {
      double d = v.get<double>();
      if (!std::isfinite(d)) malformed("non-finite float has no canonical encoding");
      if (d == 0.0) d = 0.0;  // folds -0
      append_number(out, d);
      return;
    }
    case Json::value_t::string: append_string(out, v.get_ref<const std::string&>()); return;
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const Json& item : v) {
        if (!first) out += ',';
        first = false;
        write_value(out, item);
      }
      out += ']';
      return;
    }
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        append_string(out, it.key());
        out += ':';
        write_value(out, it.value());
      }
      out += '}';
      return;
    }
    default: malformed("value type has no canonical encoding");
  }
}

void append_cell(std::string& out, const Cell& c) {
  out += "{\"type_id\":";
  append_number(out, c.type_id);
  out += ",\"rotation\":";
  append_number(out, c.rotation);
  if (c.floors) {
    out += ",\"floors\":";
    append_number(out, *c.floors);
  }
  out += '}';
}

}  // namespace

std::string canonical_dump(const Json& value) {
  std::string out;
  write_value(out, value);
  return out;
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    malformed(e.what());
  }
}

ObjectWriter::ObjectWriter() : out_("{") {}

ObjectWriter& ObjectWriter::field(std::string_view key, const Json& value) {
  if (!first_) out_ += ',';
  first_ = false;
  append_string(out_, std::string(key));
  out_ += ':';
  write_value(out_, value);
  return *this;
}

ObjectWriter& ObjectWriter::raw(std::string_view key, std::string_view canonical_value) {
  if (!first_) out_ += ',';
  first_ = false;
  append_string(out_, std::string(key));
  out_ += ':';
  out_ += canonical_value;
  return *this;
}

std::string ObjectWriter::finish() {
  out_ += '}';
  return std::move(out_);
}

namespace field {

void expect_object(const Json& value, std::string_view what) {
  if (!value.is_object()) malformed(std::string(what) + " must be an object");
}

const Json& require(const Json& obj, std::string_view key) {
  expect_object(obj, "container of '" + std::string(key) + "'");
  auto it = obj.find(std::string(key));
  if (it == obj.end()) malformed("missing field '" + std::string(key) + "'");
  return *it;
}

const Json* optional(const Json& obj, std::string_view key) {
  expect_object(obj, "container of '" + std::string(key) + "'");
  auto it = obj.find(std::string(key));
  return it == obj.end() ? nullptr : &*it;
}

std::uint64_t as_uint(const Json& value, std::string_view what) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer() && value.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(value.get<std::int64_t>());
  }
  malformed(std::string(what) + " must be a non-negative integer");
}

std::int64_t as_int(const Json& value, std::string_view what) {
  if (value.is_number_integer() && !value.is_number_unsigned()) return value.get<std::int64_t>();
  if (value.is_number_unsigned() &&
      value.get<std::uint64_t>() <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    return static_cast<std::int64_t>(value.get<std::uint64_t>());
  }
  malformed(std::string(what) + " must be an integer");
}

double as_double(const Json& value, std::string_view what) {
  if (!value.is_number()) malformed(std::string(what) + " must be a number");
  return value.get<double>();
}

const std::string& as_string(const Json& value, std::string_view what) {
  if (!value.is_string()) malformed(std::string(what) + " must be a string");
  return value.get_ref<const std::string&>();
}

bool as_bool(const Json& value, std::string_view what) {
  if (!value.is_boolean()) malformed(std::string(what) + " must be a boolean");
  return value.get<bool>();
}

void expect_keys(const Json& obj, std::initializer_list<std::string_view> allowed, std::string_view what) {
  expect_object(obj, what);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (std::string_view k : allowed) known = known || it.key() == k;
    if (!known) malformed("unexpected field '" + it.key() + "' in " + std::string(what));
  }
}

}  // namespace field

Json spec_to_json(const TableSpec& spec) {
  Json registry = Json::array();
  for (const CellType& t : spec.registry) {
    Json ct;
    ct["id"] = t.id;
    ct["name"] = t.name;
    ct["color"] = Json::array({t.color[0], t.color[1], t.color[2]});
    ct["category"] = std::string(to_string(t.category));
    ct["default_floors"] = t.default_floors;
    registry.push_back(std::move(ct));
  }
  Json j;
  j["name"] = spec.name;
  j["ncols"] = spec.ncols;
  j["nrows"] = spec.nrows;
  j["cell_size_m"] = spec.cell_size_m;
  j["floor_height_m"] = spec.floor_height_m;
  j["origin_lat"] = spec.origin_lat;
  j["origin_lon"] = spec.origin_lon;
  j["rotation_deg"] = spec.rotation_deg;
  j["registry"] = std::move(registry);
  return j;
}

TableSpec spec_from_json(const Json& value) {
  using namespace field;
  TableSpec spec;
  try {
    expect_keys(value,
                {"name", "ncols", "nrows", "cell_size_m", "floor_height_m", "origin_lat", "origin_lon",
                 "rotation_deg", "registry"},
                "table spec");
    spec.name = as_string(require(value, "name"), "name");
    const std::uint64_t ncols = as_uint(require(value, "ncols"), "ncols");
    const std::uint64_t nrows = as_uint(require(value, "nrows"), "nrows");
    if (ncols > static_cast<std::uint64_t>(kMaxGridSide) || nrows > static_cast<std::uint64_t>(kMaxGridSide)) {
      throw Error(Errc::invalid_spec, "ncols and nrows must be in [1, 256]");
    }
    spec.ncols = static_cast<int>(ncols);
    spec.nrows = static_cast<int>(nrows);
    spec.cell_size_m = as_double(require(value, "cell_size_m"), "cell_size_m");
    if (const Json* fh = optional(value, "floor_height_m")) spec.floor_height_m = as_double(*fh, "floor_height_m");
    spec.origin_lat = as_double(require(value, "origin_lat"), "origin_lat");
    spec.origin_lon = as_double(require(value, "origin_lon"), "origin_lon");
    if (const Json* rot = optional(value, "rotation_deg")) spec.rotation_deg = as_double(*rot, "rotation_deg");

    if (const Json* reg = optional(value, "registry")) {
      if (!reg->is_array()) throw Error(Errc::invalid_spec, "registry must be an array");
      for (const Json& ct : *reg) {
        expect_keys(ct, {"id", "name", "color", "category", "default_floors"}, "cell type");
        CellType t;
        const std::uint64_t id = as_uint(require(ct, "id"), "id");
        if (id > 0xffff) throw Error(Errc::invalid_spec, "cell type id too large");
        t.id = static_cast<TypeId>(id);
        t.name = as_string(require(ct, "name"), "cell type name");
        const Json& color = require(ct, "color");
        if (!color.is_array() || color.size() != 3) throw Error(Errc::invalid_spec, "color must be [r,g,b]");
        for (std::size_t i = 0; i < 3; ++i) {
          const std::uint64_t c = as_uint(color[i], "color component");
          if (c > 255) throw Error(Errc::invalid_spec, "color component must be in [0, 255]");
          t.color[i] = static_cast<std::uint8_t>(c);
        }
        auto cat = parse_category(as_string(require(ct, "category"), "category"));
        if (!cat) throw Error(Errc::invalid_spec, "unknown category");
        t.category = *cat;
        const std::uint64_t floors = as_uint(require(ct, "default_floors"), "default_floors");
        if (floors > std::numeric_limits<std::uint32_t>::max()) throw Error(Errc::invalid_spec, "default_floors too large");
        t.default_floors = static_cast<std::uint32_t>(floors);
        spec.registry.push_back(std::move(t));
      }
    } else {
      spec.registry = default_registry();
    }
  } catch (const Error& e) {
    if (e.code() == Errc::malformed_encoding) throw Error(Errc::invalid_spec, e.what());
    throw;
  }
  validate_spec(spec);
  return spec;
}

Json cell_to_json(const Cell& cell) {
  Json j;
  j["type_id"] = cell.type_id;
  j["rotation"] = cell.rotation;
  if (cell.floors) j["floors"] = *cell.floors;
  return j;
}

Cell cell_from_json(const Json& value) {
  using namespace field;
  expect_keys(value, {"type_id", "rotation", "floors"}, "cell");
  Cell c;
  const std::uint64_t type_id = as_uint(require(value, "type_id"), "type_id");
  const std::uint64_t rotation = as_uint(require(value, "rotation"), "rotation");
  if (type_id > std::numeric_limits<TypeId>::max()) throw Error(Errc::unknown_type_id, "type_id too large");
  if (rotation > 270 || !is_valid_rotation(static_cast<std::uint32_t>(rotation))) {
    throw Error(Errc::invalid_rotation, "rotation must be one of 0, 90, 180, 270");
  }
  c.type_id = static_cast<TypeId>(type_id);
  c.rotation = static_cast<std::uint16_t>(rotation);
  if (const Json* floors = optional(value, "floors")) {
    const std::uint64_t f = as_uint(*floors, "floors");
    if (f > std::numeric_limits<std::uint32_t>::max()) malformed("floors too large");
    c.floors = static_cast<std::uint32_t>(f);
  }
  return c;
}

std::string canonical_encode(const GridState& state) {
  std::string out;
  out.reserve(12 + state.cells.size() * 28);
  out += "{\"cells\":[";
  for (std::size_t i = 0; i < state.cells.size(); ++i) {
    if (i) out += ',';
    append_cell(out, state.cells[i]);
  }
  out += "]}";
  return out;
}

GridState grid_from_json(const Json& value, const TableSpec& spec) {
  using namespace field;
  expect_keys(value, {"cells"}, "grid");
  const Json& cells = require(value, "cells");
  if (!cells.is_array()) malformed("cells must be an array");
  if (cells.size() != spec.cell_count()) {
    throw Error(Errc::spec_mismatch, "grid has " + std::to_string(cells.size()) + " cells, table expects " +
                                         std::to_string(spec.cell_count()));
  }
  GridState g;
  g.cells.reserve(cells.size());
  for (const Json& c : cells) {
    Cell cell = cell_from_json(c);
    validate_cell(spec, cell);
    g.cells.push_back(cell);
  }
  return g;
}

GridState canonical_decode(std::string_view bytes, const TableSpec& spec) {
  return grid_from_json(parse_json(bytes), spec);
}

Digest state_hash(const GridState& state) { return sha256(canonical_encode(state)); }

std::string encode_changes(std::span<const CellChange> changes) {
  std::string out = "[";
  for (std::size_t i = 0; i < changes.size(); ++i) {
    if (i) out += ',';
    out += "{\"index\":";
    append_number(out, changes[i].index);
    out += ",\"before\":";
    append_cell(out, changes[i].before);
    out += ",\"after\":";
    append_cell(out, changes[i].after);
    out += '}';
  }
  out += ']';
  return out;
}

std::vector<CellEdit> edits_from_json(const Json& value) {
  using namespace field;
  if (!value.is_array()) malformed("edits must be an array");
  std::vector<CellEdit> edits;
  edits.reserve(value.size());
  for (const Json& e : value) {
    expect_keys(e, {"index", "cell"}, "edit");
    CellEdit edit;
    edit.index = static_cast<std::size_t>(as_uint(require(e, "index"), "index"));
    edit.cell = cell_from_json(require(e, "cell"));
    edits.push_back(edit);
  }
  return edits;
}

std::size_t utf8_length(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

}  // namespace cityio
