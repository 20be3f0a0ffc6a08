#pragma once

// Independent reference implementations used as test oracles. None of them
// call into the library's algorithms; they share only the plain data types.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cityio/feedback.hpp"
#include "cityio/grid.hpp"

namespace oracle {

// FIPS 180-4 SHA-256, written out by hand.
std::array<std::uint8_t, 32> sha256(std::string_view data);
std::string hex(const std::array<std::uint8_t, 32>& digest);

// Grid encoding assembled with plain string concatenation.
std::string grid_encoding(const cityio::GridState& state);

// Commit hash over an explicitly assembled byte buffer.
std::string commit_hash_hex(const std::string& parent_hex, std::uint64_t version, std::int64_t timestamp_ms,
                            const std::string& grid_encoding, const std::string& author, const std::string& source);

// Fine ray sampling at cell_size/64 from each cell center toward the sun,
// every sample attributed to the cell containing it; marches to the grid
// edge with no early exit.
std::vector<std::uint8_t> shadow(const std::vector<double>& heights, const cityio::TableSpec& spec, double azimuth_deg,
                                 double elevation_deg);

// Label-correcting (FIFO Bellman-Ford) shortest entering cost, -1 when
// unreachable. Water can be neither entered nor left.
double trip(const cityio::GridState& state, const cityio::TableSpec& spec, int from_col, int from_row, int to_col,
            int to_row, double road_mps, double walk_mps);

double haversine_m(double lat1, double lon1, double lat2, double lon2);

// Full sort by (likes desc, created asc, id asc) with a hand-written comparator.
std::vector<std::uint64_t> ranked_ids(const std::vector<cityio::Comment>& comments,
                                      const std::vector<std::size_t>& likes_by_id);

// Shannon entropy in nats from a direct tally of non-empty type ids.
double entropy(const cityio::GridState& state, const cityio::TableSpec& spec);

}  // namespace oracle

namespace fixture {

cityio::TableSpec spec(int ncols, int nrows, double cell_size = 10.0, std::string name = "t");
cityio::Cell random_cell(const cityio::TableSpec& spec, std::mt19937_64& rng);
cityio::GridState random_grid(const cityio::TableSpec& spec, std::mt19937_64& rng);
// Random grid in which roughly `water_percent` of cells are water.
cityio::GridState random_grid_with_water(const cityio::TableSpec& spec, std::mt19937_64& rng, int water_percent);

// Type ids of the default registry.
inline constexpr cityio::TypeId kEmpty = 0;
inline constexpr cityio::TypeId kResidential = 1;
inline constexpr cityio::TypeId kOffice = 2;
inline constexpr cityio::TypeId kRoad = 3;
inline constexpr cityio::TypeId kPark = 4;
inline constexpr cityio::TypeId kWater = 5;

// Uniform double in [lo, hi) from a 64-bit draw.
double uniform(std::mt19937_64& rng, double lo, double hi);

}  // namespace fixture
