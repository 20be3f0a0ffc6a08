#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cityio/codec.hpp"
#include "cityio/grid.hpp"

namespace cityio {

enum class LayerKind { scalar_grid, mask_grid, metrics };

std::string_view to_string(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view text);

// Derived data tied to the version it was computed from. Grid kinds are
// row-major and sized ncols x nrows; only the member matching `kind` is used.
struct Layer {
  std::string name;
  LayerKind kind = LayerKind::scalar_grid;
  int ncols = 0;
  int nrows = 0;
  std::vector<double> scalars;
  std::vector<std::uint8_t> mask;
  std::map<std::string, double> metrics;
  std::uint64_t produced_from_version = 0;
  std::string producer;

  friend bool operator==(const Layer&, const Layer&) = default;
};

Layer make_scalar_layer(std::string name, const TableSpec& spec, std::vector<double> values);
Layer make_mask_layer(std::string name, const TableSpec& spec, std::vector<std::uint8_t> values);
Layer make_metrics_layer(std::string name, std::map<std::string, double> metrics);

bool is_valid_layer_name(std::string_view name);

// Name syntax, finite values, and exact grid dimensions for grid kinds.
// Throws invalid_layer.
void validate_layer(const Layer& layer, const TableSpec& spec);

std::string encode_layer(const Layer& layer);
Layer layer_from_json(const Json& value);

}  // namespace cityio
