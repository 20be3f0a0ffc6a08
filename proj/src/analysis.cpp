#include "cityio/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <queue>

#include "cityio/error.hpp"

namespace cityio {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCornerEps = 1e-9;
constexpr char kProducer[] = "analysis";

double enter_cost(const TableSpec& spec, const Cell& cell, const TravelSpeeds& speeds) {
  const Category cat = spec.registry[cell.type_id].category;
  return spec.cell_size_m / (cat == Category::road ? speeds.road_mps : speeds.walk_mps);
}

bool is_water(const TableSpec& spec, const Cell& cell) {
  return spec.registry[cell.type_id].category == Category::water;
}

void check_coord(const TableSpec& spec, CellCoord c) {
  if (c.col < 0 || c.row < 0 || c.col >= spec.ncols || c.row >= spec.nrows) {
    throw Error(Errc::index_out_of_range, "cell (" + std::to_string(c.col) + "," + std::to_string(c.row) +
                                              ") outside the grid");
  }
}

// Dijkstra from `sources`. `step(u, v)` is the cost of relaxing settled cell
// u into neighbour v, or nullopt when that step is not allowed.
template <typename StepCost>
std::vector<double> shortest_costs(const TableSpec& spec, const std::vector<std::size_t>& sources, StepCost step) {
  const std::size_t n = spec.cell_count();
  std::vector<double> dist(n, kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  for (std::size_t s : sources) {
    dist[s] = 0.0;
    open.push({0.0, s});
  }
  constexpr int kDc[4] = {1, -1, 0, 0};
  constexpr int kDr[4] = {0, 0, 1, -1};
  while (!open.empty()) {
    const auto [d, u] = open.top();
    open.pop();
    if (d > dist[u]) continue;
    const int col = static_cast<int>(u % static_cast<std::size_t>(spec.ncols));
    const int row = static_cast<int>(u / static_cast<std::size_t>(spec.ncols));
    for (int k = 0; k < 4; ++k) {
      const int nc = col + kDc[k];
      const int nr = row + kDr[k];
      if (nc < 0 || nr < 0 || nc >= spec.ncols || nr >= spec.nrows) continue;
      const std::size_t v = cell_index(spec, nc, nr);
      const std::optional<double> w = step(u, v);
      if (!w) continue;
      if (d + *w < dist[v]) {
        dist[v] = d + *w;
        open.push({dist[v], v});
      }
    }
  }
  return dist;
}

}  // namespace

void validate_sun(const SunPosition& sun) {
  if (!(sun.azimuth_deg >= 0.0 && sun.azimuth_deg < 360.0)) {
    throw Error(Errc::invalid_sun, "azimuth must be in [0, 360)");
  }
  if (!(sun.elevation_deg > 0.0 && sun.elevation_deg <= 90.0)) {
    throw Error(Errc::invalid_sun, "elevation must be in (0, 90]");
  }
}

void validate_speeds(const TravelSpeeds& speeds) {
  if (!std::isfinite(speeds.road_mps) || !std::isfinite(speeds.walk_mps) || !(speeds.walk_mps > 0.0) ||
      speeds.walk_mps > speeds.road_mps) {
    throw Error(Errc::invalid_speeds, "speeds must satisfy 0 < walk <= road");
  }
}

Layer building_heights(const GridState& state, const TableSpec& spec) {
  std::vector<double> heights(state.cells.size(), 0.0);
  for (std::size_t i = 0; i < state.cells.size(); ++i) {
    heights[i] = floors_effective(spec, state.cells[i]) * spec.floor_height_m;
  }
  Layer l = make_scalar_layer("heights", spec, std::move(heights));
  l.producer = kProducer;
  return l;
}

Layer shadow_mask(const Layer& heights, const TableSpec& spec, const SunPosition& sun) {
  validate_sun(sun);
  if (heights.kind != LayerKind::scalar_grid || heights.scalars.size() != spec.cell_count()) {
    throw Error(Errc::invalid_layer, "shadow_mask needs a heights grid matching the table");
  }
  std::vector<std::uint8_t> mask(spec.cell_count(), 0);
  Layer out = make_mask_layer("shadow", spec, {});
  out.producer = kProducer;
  out.produced_from_version = heights.produced_from_version;
  if (sun.elevation_deg >= 90.0) {
    out.mask = std::move(mask);
    return out;
  }

  const std::vector<double>& h = heights.scalars;
  const double max_height = *std::max_element(h.begin(), h.end());
  const double tan_el = std::tan(sun.elevation_deg * kDegToRad);
  const double cs = spec.cell_size_m;
  // Direction toward the sun in grid axes.
  const double az = sun.azimuth_deg * kDegToRad;
  const GridOffset dir = plane_to_grid(spec, std::sin(az), std::cos(az));
  const double dx = std::abs(dir.x_m) < 1e-15 ? 0.0 : dir.x_m;
  const double dy = std::abs(dir.y_m) < 1e-15 ? 0.0 : dir.y_m;
  const int step_c = dx > 0 ? 1 : -1;
  const int step_r = dy > 0 ? 1 : -1;
  const double delta_c = dx != 0.0 ? 1.0 / std::abs(dx) : kInf;
  const double delta_r = dy != 0.0 ? 1.0 / std::abs(dy) : kInf;
  // Any cell entered at ray length t has its center at least t - sqrt(2)/2
  // cells away.
  const double center_slack = std::numbers::sqrt2 / 2.0;

  for (int row = 0; row < spec.nrows; ++row) {
    for (int col = 0; col < spec.ncols; ++col) {
      const double base = h[cell_index(spec, col, row)];
      // Starting from the center, the first boundary in each axis is half a cell away.
      double t_c = 0.5 * delta_c;
      double t_r = 0.5 * delta_r;
      int c = col;
      int r = row;
      bool shaded = false;
      while (true) {
        double t_enter;
        if (std::abs(t_c - t_r) <= kCornerEps * std::max(1.0, t_c)) {
          // Exactly through a corner: only the diagonal cell's interior is crossed.
          t_enter = t_c;
          c += step_c;
          r += step_r;
          t_c += delta_c;
          t_r += delta_r;
        } else if (t_c < t_r) {
          t_enter = t_c;
          c += step_c;
          t_c += delta_c;
        } else {
          t_enter = t_r;
          r += step_r;
          t_r += delta_r;
        }
        if (c < 0 || r < 0 || c >= spec.ncols || r >= spec.nrows) break;
        if ((t_enter - center_slack) * cs * tan_el > max_height) break;
        const double d = cs * std::hypot(static_cast<double>(c - col), static_cast<double>(r - row));
        if (h[cell_index(spec, c, r)] >= d * tan_el + base) {
          shaded = true;
          break;
        }
      }
      mask[cell_index(spec, col, row)] = shaded ? 1 : 0;
    }
  }
  out.mask = std::move(mask);
  return out;
}

Layer density(const GridState& state, const TableSpec& spec) {
  double floors = 0.0;
  double built = 0.0;
  for (const Cell& cell : state.cells) {
    if (spec.registry[cell.type_id].category == Category::building) {
      built += 1.0;
      floors += floors_effective(spec, cell);
    }
  }
  const double total = static_cast<double>(spec.cell_count());
  Layer l = make_metrics_layer("density", {{"far", floors / total}, {"built_cell_fraction", built / total}});
  l.producer = kProducer;
  return l;
}

Layer diversity(const GridState& state, const TableSpec& spec) {
  std::map<TypeId, std::size_t> counts;
  std::size_t total = 0;
  for (const Cell& cell : state.cells) {
    if (spec.registry[cell.type_id].category == Category::empty) continue;
    ++counts[cell.type_id];
    ++total;
  }
  double entropy = 0.0;
  for (const auto& [id, n] : counts) {
    const double p = static_cast<double>(n) / static_cast<double>(total);
    entropy -= p * std::log(p);
  }
  Layer l = make_metrics_layer("diversity", {{"shannon_nats", entropy == 0.0 ? 0.0 : entropy}});
  l.producer = kProducer;
  return l;
}

std::optional<double> trip_duration(const GridState& state, const TableSpec& spec, CellCoord from, CellCoord to,
                                    const TravelSpeeds& speeds) {
  check_coord(spec, from);
  check_coord(spec, to);
  validate_speeds(speeds);
  if (from == to) return 0.0;
  const std::size_t src = cell_index(spec, from.col, from.row);
  const std::size_t dst = cell_index(spec, to.col, to.row);
  if (is_water(spec, state.cells[src]) || is_water(spec, state.cells[dst])) return std::nullopt;
  const auto dist = shortest_costs(spec, {src}, [&](std::size_t, std::size_t v) -> std::optional<double> {
    if (is_water(spec, state.cells[v])) return std::nullopt;
    return enter_cost(spec, state.cells[v], speeds);
  });
  if (std::isinf(dist[dst])) return std::nullopt;
  return dist[dst];
}

Layer accessibility(const GridState& state, const TableSpec& spec, Category target, const TravelSpeeds& speeds) {
  validate_speeds(speeds);
  std::vector<std::size_t> sources;
  for (std::size_t i = 0; i < state.cells.size(); ++i) {
    if (spec.registry[state.cells[i].type_id].category == target) sources.push_back(i);
  }
  // Searching backwards from the targets: stepping from v back to u stands
  // for the forward move u -> v, which costs entering v.
  const auto dist = shortest_costs(spec, sources, [&](std::size_t v, std::size_t u) -> std::optional<double> {
    if (is_water(spec, state.cells[u]) || is_water(spec, state.cells[v])) return std::nullopt;
    return enter_cost(spec, state.cells[v], speeds);
  });
  std::vector<double> values(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) values[i] = std::isinf(dist[i]) ? kUnreachableSeconds : dist[i];
  Layer l = make_scalar_layer("access_" + std::string(to_string(target)), spec, std::move(values));
  l.producer = kProducer;
  return l;
}

std::vector<Layer> compute_layers(const GridState& state, const TableSpec& spec, const SunPosition& sun,
                                  const TravelSpeeds& speeds, std::uint64_t version) {
  std::vector<Layer> layers;
  layers.push_back(building_heights(state, spec));
  layers.push_back(shadow_mask(layers.front(), spec, sun));
  layers.push_back(density(state, spec));
  layers.push_back(diversity(state, spec));
  for (Category c : {Category::building, Category::road, Category::park}) {
    layers.push_back(accessibility(state, spec, c, speeds));
  }
  for (Layer& l : layers) l.produced_from_version = version;
  return layers;
}

}  // namespace cityio
