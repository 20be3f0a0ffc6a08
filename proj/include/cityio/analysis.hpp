#pragma once

// Grid analyses published as layers by the compute worker. All functions are
// pure and thread-safe.

#include <optional>
#include <vector>

#include "cityio/geo.hpp"
#include "cityio/grid.hpp"
#include "cityio/layer.hpp"

namespace cityio {

// Geographic convention: azimuth is the direction the sun shines FROM,
// clockwise from north. Elevation in (0, 90].
struct SunPosition {
  double azimuth_deg = 180.0;
  double elevation_deg = 45.0;
};

void validate_sun(const SunPosition& sun);

struct TravelSpeeds {
  double road_mps = 8.0;
  double walk_mps = 1.4;
};

// Requires finite 0 < walk <= road. Throws invalid_speeds.
void validate_speeds(const TravelSpeeds& speeds);

inline constexpr double kUnreachableSeconds = -1.0;

// floors_effective * floor_height_m for building cells, 0 elsewhere.
Layer building_heights(const GridState& state, const TableSpec& spec);

// A cell c is shaded when some other cell b crossed by the ray from c's
// center toward the sun has height(b) >= d * tan(elevation) + height(c),
// with d the center-to-center distance. The ray visits every cell whose
// interior it passes through and stops at the grid edge or once no cell
// further out can satisfy the test.
Layer shadow_mask(const Layer& heights, const TableSpec& spec, const SunPosition& sun);

// Metrics "far" and "built_cell_fraction".
Layer density(const GridState& state, const TableSpec& spec);

// Metric "shannon_nats" over the type ids of cells whose category is not
// empty; 0 when there are none.
Layer diversity(const GridState& state, const TableSpec& spec);

// Cheapest 4-neighbour path; entering a cell costs cell_size / speed (road
// speed on road cells, walking speed elsewhere). Water cells can be neither
// entered nor left. std::nullopt means unreachable.
std::optional<double> trip_duration(const GridState& state, const TableSpec& spec, CellCoord from, CellCoord to,
                                    const TravelSpeeds& speeds);

// Seconds from every cell to its nearest cell of `target`; target cells are
// 0 and unreachable cells hold kUnreachableSeconds. Named access_<category>.
Layer accessibility(const GridState& state, const TableSpec& spec, Category target, const TravelSpeeds& speeds);

// The full set the worker publishes for one commit.
std::vector<Layer> compute_layers(const GridState& state, const TableSpec& spec, const SunPosition& sun,
                                  const TravelSpeeds& speeds, std::uint64_t version);

}  // namespace cityio
