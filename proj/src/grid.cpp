#include "cityio/grid.hpp"

#include <cmath>

#include "cityio/error.hpp"

namespace cityio {

namespace {

constexpr std::size_t kMaxTypeNameLength = 32;

[[noreturn]] void spec_error(const std::string& what) { throw Error(Errc::invalid_spec, what); }

}  // namespace

std::string_view to_string(Category category) {
  switch (category) {
    case Category::empty: return "empty";
    case Category::building: return "building";
    case Category::road: return "road";
    case Category::park: return "park";
    case Category::water: return "water";
  }
  return "empty";
}

std::optional<Category> parse_category(std::string_view text) {
  if (text == "empty") return Category::empty;
  if (text == "building") return Category::building;
  if (text == "road") return Category::road;
  if (text == "park") return Category::park;
  if (text == "water") return Category::water;
  return std::nullopt;
}

std::vector<CellType> default_registry() {
  return {
      {0, "empty", {32, 32, 32}, Category::empty, 0},
      {1, "residential", {230, 159, 0}, Category::building, 4},
      {2, "office", {86, 180, 233}, Category::building, 10},
      {3, "road", {120, 120, 120}, Category::road, 0},
      {4, "park", {0, 158, 115}, Category::park, 0},
      {5, "water", {0, 114, 178}, Category::water, 0},
  };
}

bool is_valid_table_name(std::string_view name) {
  if (name.empty() || name.size() > 64) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

void validate_spec(const TableSpec& spec) {
  if (!is_valid_table_name(spec.name)) spec_error("name must match [a-z0-9_-]{1,64}");
  if (spec.ncols < 1 || spec.ncols > kMaxGridSide) spec_error("ncols must be in [1, 256]");
  if (spec.nrows < 1 || spec.nrows > kMaxGridSide) spec_error("nrows must be in [1, 256]");
  if (spec.cell_count() > static_cast<std::size_t>(kMaxGridCells)) spec_error("ncols * nrows exceeds 65536");
  if (!std::isfinite(spec.cell_size_m) || spec.cell_size_m <= 0.0) spec_error("cell_size_m must be positive");
  if (!std::isfinite(spec.floor_height_m) || spec.floor_height_m <= 0.0) {
    spec_error("floor_height_m must be positive");
  }
  if (!(spec.origin_lat >= -90.0 && spec.origin_lat <= 90.0)) spec_error("origin_lat must be in [-90, 90]");
  if (!(spec.origin_lon >= -180.0 && spec.origin_lon <= 180.0)) spec_error("origin_lon must be in [-180, 180]");
  if (!(spec.rotation_deg >= 0.0 && spec.rotation_deg < 360.0)) spec_error("rotation_deg must be in [0, 360)");

  if (spec.registry.empty()) spec_error("registry must contain the empty type");
  for (std::size_t i = 0; i < spec.registry.size(); ++i) {
    const CellType& t = spec.registry[i];
    if (t.id != i) spec_error("registry ids must be unique and contiguous from 0");
    if (t.name.empty() || t.name.size() > kMaxTypeNameLength) {
      spec_error("cell type name must be 1..32 bytes");
    }
    if (t.category != Category::building && t.default_floors != 0) {
      spec_error("default_floors must be 0 for non-building type '" + t.name + "'");
    }
  }
  const CellType& empty = spec.registry.front();
  if (empty.category != Category::empty || empty.default_floors != 0) {
    spec_error("type 0 is reserved for the empty category");
  }
}

bool is_valid_rotation(std::uint32_t degrees) noexcept {
  return degrees == 0 || degrees == 90 || degrees == 180 || degrees == 270;
}

void validate_cell(const TableSpec& spec, const Cell& cell) {
  if (cell.type_id >= spec.registry.size()) {
    throw Error(Errc::unknown_type_id, "unknown type_id " + std::to_string(cell.type_id));
  }
  if (!is_valid_rotation(cell.rotation)) {
    throw Error(Errc::invalid_rotation, "rotation must be one of 0, 90, 180, 270");
  }
  if (cell.floors && spec.registry[cell.type_id].category != Category::building) {
    throw Error(Errc::illegal_floors_override, "floors override on non-building type " +
                                                   std::to_string(cell.type_id));
  }
}

std::uint32_t floors_effective(const TableSpec& spec, const Cell& cell) {
  const CellType& t = spec.registry.at(cell.type_id);
  if (t.category != Category::building) return 0;
  return cell.floors.value_or(t.default_floors);
}

void validate_grid(const TableSpec& spec, const GridState& grid) {
  if (grid.cells.size() != spec.cell_count()) {
    throw Error(Errc::spec_mismatch, "grid has " + std::to_string(grid.cells.size()) + " cells, table expects " +
                                         std::to_string(spec.cell_count()));
  }
  for (const Cell& c : grid.cells) validate_cell(spec, c);
}

GridState new_grid(const TableSpec& spec) {
  return GridState{std::vector<Cell>(spec.cell_count())};
}

GridState apply_edits(const TableSpec& spec, const GridState& state, std::span<const CellEdit> edits) {
  for (const CellEdit& e : edits) {
    if (e.index >= state.cells.size()) {
      throw Error(Errc::index_out_of_range, "edit index " + std::to_string(e.index) + " out of range");
    }
    validate_cell(spec, e.cell);
  }
  GridState out = state;
  for (const CellEdit& e : edits) out.cells[e.index] = e.cell;
  return out;
}

std::vector<CellChange> diff(const GridState& a, const GridState& b) {
  if (a.cells.size() != b.cells.size()) {
    throw Error(Errc::length_mismatch, "diff of grids with different lengths");
  }
  std::vector<CellChange> out;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    if (a.cells[i] != b.cells[i]) out.push_back({i, a.cells[i], b.cells[i]});
  }
  return out;
}

std::vector<CellEdit> after_edits(std::span<const CellChange> changes) {
  std::vector<CellEdit> out;
  out.reserve(changes.size());
  for (const CellChange& c : changes) out.push_back({c.index, c.after});
  return out;
}

}  // namespace cityio
