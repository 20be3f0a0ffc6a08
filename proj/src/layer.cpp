#include "cityio/layer.hpp"

#include <cmath>

#include "cityio/error.hpp"

namespace cityio {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::scalar_grid: return "scalar_grid";
    case LayerKind::mask_grid: return "mask_grid";
    case LayerKind::metrics: return "metrics";
  }
  return "metrics";
}

std::optional<LayerKind> parse_layer_kind(std::string_view text) {
  if (text == "scalar_grid") return LayerKind::scalar_grid;
  if (text == "mask_grid") return LayerKind::mask_grid;
  if (text == "metrics") return LayerKind::metrics;
  return std::nullopt;
}

Layer make_scalar_layer(std::string name, const TableSpec& spec, std::vector<double> values) {
  Layer l;
  l.name = std::move(name);
  l.kind = LayerKind::scalar_grid;
  l.ncols = spec.ncols;
  l.nrows = spec.nrows;
  l.scalars = std::move(values);
  return l;
}

Layer make_mask_layer(std::string name, const TableSpec& spec, std::vector<std::uint8_t> values) {
  Layer l;
  l.name = std::move(name);
  l.kind = LayerKind::mask_grid;
  l.ncols = spec.ncols;
  l.nrows = spec.nrows;
  l.mask = std::move(values);
  return l;
}

Layer make_metrics_layer(std::string name, std::map<std::string, double> metrics) {
  Layer l;
  l.name = std::move(name);
  l.kind = LayerKind::metrics;
  l.metrics = std::move(metrics);
  return l;
}

bool is_valid_layer_name(std::string_view name) {
  if (name.empty() || name.size() > 64) return false;
  for (char c : name) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
  }
  return true;
}

void validate_layer(const Layer& layer, const TableSpec& spec) {
  auto fail = [](const std::string& what) { throw Error(Errc::invalid_layer, what); };
  if (!is_valid_layer_name(layer.name)) fail("layer name must match [a-z0-9_]{1,64}");
  if (layer.producer.size() > 64) fail("producer longer than 64 bytes");
  switch (layer.kind) {
    case LayerKind::scalar_grid:
      if (layer.ncols != spec.ncols || layer.nrows != spec.nrows || layer.scalars.size() != spec.cell_count()) {
        fail("layer dimensions do not match the table");
      }
      for (double v : layer.scalars) {
        if (!std::isfinite(v)) fail("layer values must be finite");
      }
      break;
    case LayerKind::mask_grid:
      if (layer.ncols != spec.ncols || layer.nrows != spec.nrows || layer.mask.size() != spec.cell_count()) {
        fail("layer dimensions do not match the table");
      }
      for (std::uint8_t v : layer.mask) {
        if (v > 1) fail("mask values must be 0 or 1");
      }
      break;
    case LayerKind::metrics:
      for (const auto& [key, v] : layer.metrics) {
        if (key.empty() || !std::isfinite(v)) fail("metrics need non-empty keys and finite values");
      }
      break;
  }
}

std::string encode_layer(const Layer& layer) {
  ObjectWriter w;
  w.field("name", layer.name)
      .field("kind", std::string(to_string(layer.kind)))
      .field("produced_from_version", layer.produced_from_version)
      .field("producer", layer.producer);
  switch (layer.kind) {
    case LayerKind::scalar_grid: {
      w.field("ncols", layer.ncols).field("nrows", layer.nrows);
      Json values = Json::array();
      for (double v : layer.scalars) values.push_back(v);
      w.field("values", values);
      break;
    }
    case LayerKind::mask_grid: {
      w.field("ncols", layer.ncols).field("nrows", layer.nrows);
      Json values = Json::array();
      for (auto v : layer.mask) values.push_back(v != 0);
      w.field("values", values);
      break;
    }
    case LayerKind::metrics: {
      Json metrics = Json::object();
      for (const auto& [key, v] : layer.metrics) metrics[key] = v;
      w.field("metrics", metrics);
      break;
    }
  }
  return std::move(w).finish();
}

Layer layer_from_json(const Json& value) {
  using namespace field;
  Layer l;
  l.name = as_string(require(value, "name"), "name");
  auto kind = parse_layer_kind(as_string(require(value, "kind"), "kind"));
  if (!kind) throw Error(Errc::invalid_layer, "unknown layer kind");
  l.kind = *kind;
  l.produced_from_version = as_uint(require(value, "produced_from_version"), "produced_from_version");
  if (const Json* p = optional(value, "producer")) l.producer = as_string(*p, "producer");
  if (l.kind == LayerKind::metrics) {
    expect_keys(value, {"name", "kind", "produced_from_version", "producer", "metrics"}, "layer");
    const Json& metrics = require(value, "metrics");
    expect_object(metrics, "metrics");
    for (auto it = metrics.begin(); it != metrics.end(); ++it) l.metrics[it.key()] = as_double(it.value(), it.key());
    return l;
  }
  expect_keys(value, {"name", "kind", "produced_from_version", "producer", "ncols", "nrows", "values"}, "layer");
  const std::uint64_t ncols = as_uint(require(value, "ncols"), "ncols");
  const std::uint64_t nrows = as_uint(require(value, "nrows"), "nrows");
  if (ncols > static_cast<std::uint64_t>(kMaxGridSide) || nrows > static_cast<std::uint64_t>(kMaxGridSide)) {
    throw Error(Errc::invalid_layer, "layer dimensions out of range");
  }
  l.ncols = static_cast<int>(ncols);
  l.nrows = static_cast<int>(nrows);
  const Json& values = require(value, "values");
  if (!values.is_array()) throw Error(Errc::malformed_encoding, "values must be an array");
  if (l.kind == LayerKind::scalar_grid) {
    l.scalars.reserve(values.size());
    for (const Json& v : values) l.scalars.push_back(as_double(v, "value"));
  } else {
    l.mask.reserve(values.size());
    for (const Json& v : values) l.mask.push_back(as_bool(v, "value") ? 1 : 0);
  }
  return l;
}

}  // namespace cityio
