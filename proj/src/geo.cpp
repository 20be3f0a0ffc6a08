#include "cityio/geo.hpp"

#include <cmath>
#include <numbers>

#include "cityio/error.hpp"

namespace cityio {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

}  // namespace

PlaneOffset grid_to_plane(const TableSpec& spec, double x_m, double y_m) {
  const double theta = spec.rotation_deg * kDegToRad;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {x_m * c - y_m * s, x_m * s + y_m * c};
}

GridOffset plane_to_grid(const TableSpec& spec, double east_m, double north_m) {
  const double theta = spec.rotation_deg * kDegToRad;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {east_m * c + north_m * s, -east_m * s + north_m * c};
}

GeoPoint cell_to_geo(const TableSpec& spec, int col, int row) {
  if (col < 0 || row < 0 || col >= spec.ncols || row >= spec.nrows) {
    throw Error(Errc::index_out_of_range, "cell (" + std::to_string(col) + "," + std::to_string(row) +
                                              ") outside the grid");
  }
  const PlaneOffset p = grid_to_plane(spec, (col + 0.5) * spec.cell_size_m, (row + 0.5) * spec.cell_size_m);
  GeoPoint g;
  g.lat = spec.origin_lat + p.north_m / kEarthRadiusM * kRadToDeg;
  g.lon = spec.origin_lon + p.east_m / (kEarthRadiusM * std::cos(spec.origin_lat * kDegToRad)) * kRadToDeg;
  return g;
}

std::optional<CellCoord> try_geo_to_cell(const TableSpec& spec, double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon)) return std::nullopt;
  const double north = (lat - spec.origin_lat) * kDegToRad * kEarthRadiusM;
  const double east = (lon - spec.origin_lon) * kDegToRad * kEarthRadiusM * std::cos(spec.origin_lat * kDegToRad);
  const GridOffset g = plane_to_grid(spec, east, north);
  const double col = std::floor(g.x_m / spec.cell_size_m);
  const double row = std::floor(g.y_m / spec.cell_size_m);
  if (!(col >= 0.0 && row >= 0.0 && col < spec.ncols && row < spec.nrows)) return std::nullopt;
  return CellCoord{static_cast<int>(col), static_cast<int>(row)};
}

CellCoord geo_to_cell(const TableSpec& spec, double lat, double lon) {
  if (auto c = try_geo_to_cell(spec, lat, lon)) return *c;
  throw Error(Errc::out_of_extent, "point lies outside the table extent");
}

}  // namespace cityio
