#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cityio {

enum class Category : std::uint8_t { empty, building, road, park, water };

std::string_view to_string(Category category);
std::optional<Category> parse_category(std::string_view text);

using TypeId = std::uint32_t;

struct CellType {
  TypeId id = 0;
  std::string name;
  std::array<std::uint8_t, 3> color{0, 0, 0};
  Category category = Category::empty;
  std::uint32_t default_floors = 0;

  friend bool operator==(const CellType&, const CellType&) = default;
};

inline constexpr int kMaxGridSide = 256;
inline constexpr int kMaxGridCells = 65536;
inline constexpr double kDefaultFloorHeightM = 3.0;

// Immutable description of one table. Construct through validate_spec() or
// make_spec(); everything downstream assumes a validated spec.
struct TableSpec {
  std::string name;
  int ncols = 0;
  int nrows = 0;
  double cell_size_m = 0.0;
  double floor_height_m = kDefaultFloorHeightM;
  double origin_lat = 0.0;
  double origin_lon = 0.0;
  double rotation_deg = 0.0;
  std::vector<CellType> registry;

  std::size_t cell_count() const noexcept {
    return static_cast<std::size_t>(ncols) * static_cast<std::size_t>(nrows);
  }
  const CellType& type(TypeId id) const { return registry.at(id); }

  friend bool operator==(const TableSpec&, const TableSpec&) = default;
};

// Five-category palette used by the demo tooling and as the default when a
// create request omits the registry.
std::vector<CellType> default_registry();

bool is_valid_table_name(std::string_view name);

// Throws Error(invalid_spec) naming the first violated invariant.
void validate_spec(const TableSpec& spec);

struct Cell {
  TypeId type_id = 0;
  std::uint16_t rotation = 0;
  std::optional<std::uint32_t> floors;

  friend bool operator==(const Cell&, const Cell&) = default;
};

bool is_valid_rotation(std::uint32_t degrees) noexcept;

// Throws unknown_type_id / invalid_rotation / illegal_floors_override.
void validate_cell(const TableSpec& spec, const Cell& cell);

std::uint32_t floors_effective(const TableSpec& spec, const Cell& cell);

struct GridState {
  std::vector<Cell> cells;

  friend bool operator==(const GridState&, const GridState&) = default;
};

// Throws spec_mismatch on length, otherwise the first failing cell error.
void validate_grid(const TableSpec& spec, const GridState& grid);

struct CellEdit {
  std::size_t index = 0;
  Cell cell;

  friend bool operator==(const CellEdit&, const CellEdit&) = default;
};

struct CellChange {
  std::size_t index = 0;
  Cell before;
  Cell after;

  friend bool operator==(const CellChange&, const CellChange&) = default;
};

GridState new_grid(const TableSpec& spec);

// Edits apply in list order; a later edit to the same index wins. The whole
// list is validated before anything is applied.
GridState apply_edits(const TableSpec& spec, const GridState& state, std::span<const CellEdit> edits);

std::vector<CellChange> diff(const GridState& a, const GridState& b);

std::vector<CellEdit> after_edits(std::span<const CellChange> changes);

}  // namespace cityio
