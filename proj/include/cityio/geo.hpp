#pragma once

#include <optional>

#include "cityio/grid.hpp"

namespace cityio {

inline constexpr double kEarthRadiusM = 6371000.0;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};

struct CellCoord {
  int col = 0;
  int row = 0;

  friend bool operator==(const CellCoord&, const CellCoord&) = default;
};

// Local tangent-plane placement of the grid: +col runs east and +row runs
// north before the table rotation (counter-clockwise, degrees) is applied.
struct PlaneOffset {
  double east_m = 0.0;
  double north_m = 0.0;
};

// Meters along the grid's own column (x) and row (y) axes.
struct GridOffset {
  double x_m = 0.0;
  double y_m = 0.0;
};

PlaneOffset grid_to_plane(const TableSpec& spec, double x_m, double y_m);
GridOffset plane_to_grid(const TableSpec& spec, double east_m, double north_m);

// Center of the cell. Throws index_out_of_range.
GeoPoint cell_to_geo(const TableSpec& spec, int col, int row);

// std::nullopt when the point falls outside [0,ncols) x [0,nrows).
std::optional<CellCoord> try_geo_to_cell(const TableSpec& spec, double lat, double lon);

// Throws out_of_extent.
CellCoord geo_to_cell(const TableSpec& spec, double lat, double lon);

inline std::size_t cell_index(const TableSpec& spec, int col, int row) {
  return static_cast<std::size_t>(row) * static_cast<std::size_t>(spec.ncols) + static_cast<std::size_t>(col);
}

}  // namespace cityio
