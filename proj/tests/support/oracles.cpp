#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>

namespace oracle {

namespace {

constexpr std::uint32_t kRound[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
};

std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

constexpr double kPi = 3.14159265358979323846;

}  // namespace

std::array<std::uint8_t, 32> sha256(std::string_view data) {
  std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                        0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  std::vector<std::uint8_t> msg(data.begin(), data.end());
  const std::uint64_t bit_len = static_cast<std::uint64_t>(data.size()) * 8;
  msg.push_back(0x80);
  while (msg.size() % 64 != 56) msg.push_back(0);
  for (int i = 7; i >= 0; --i) msg.push_back(static_cast<std::uint8_t>(bit_len >> (8 * i)));

  for (std::size_t off = 0; off < msg.size(); off += 64) {
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i) {
      w[i] = (std::uint32_t{msg[off + 4 * i]} << 24) | (std::uint32_t{msg[off + 4 * i + 1]} << 16) |
             (std::uint32_t{msg[off + 4 * i + 2]} << 8) | std::uint32_t{msg[off + 4 * i + 3]};
    }
    for (int i = 16; i < 64; ++i) {
      const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6], k = h[7];
    for (int i = 0; i < 64; ++i) {
      const std::uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      const std::uint32_t ch = (e & f) ^ (~e & g);
      const std::uint32_t t1 = k + S1 + ch + kRound[i] + w[i];
      const std::uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      const std::uint32_t t2 = S0 + maj;
      k = g;
      g = f;
      f = e;
      e = d + t1;
      d = c;
      c = b;
      b = a;
      a = t1 + t2;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
    h[5] += f;
    h[6] += g;
    h[7] += k;
  }
  std::array<std::uint8_t, 32> out{};
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 4; ++j) out[4 * i + j] = static_cast<std::uint8_t>(h[i] >> (24 - 8 * j));
  }
  return out;
}

std::string hex(const std::array<std::uint8_t, 32>& digest) {
  std::string s;
  char buf[3];
  for (std::uint8_t b : digest) {
    std::snprintf(buf, sizeof buf, "%02x", b);
    s += buf;
  }
  return s;
}

std::string grid_encoding(const cityio::GridState& state) {
  std::string s = "{\"cells\":[";
  for (std::size_t i = 0; i < state.cells.size(); ++i) {
    const cityio::Cell& c = state.cells[i];
    if (i > 0) s += ",";
    s += "{\"type_id\":" + std::to_string(c.type_id) + ",\"rotation\":" + std::to_string(c.rotation);
    if (c.floors) s += ",\"floors\":" + std::to_string(*c.floors);
    s += "}";
  }
  return s + "]}";
}

std::string commit_hash_hex(const std::string& parent_hex, std::uint64_t version, std::int64_t timestamp_ms,
                            const std::string& grid_encoding, const std::string& author, const std::string& source) {
  std::string buf;
  for (std::size_t i = 0; i < parent_hex.size(); i += 2) {
    buf += static_cast<char>(std::stoi(parent_hex.substr(i, 2), nullptr, 16));
  }
  auto be = [&buf](std::uint64_t v, int bytes) {
    for (int i = bytes - 1; i >= 0; --i) buf += static_cast<char>((v >> (8 * i)) & 0xff);
  };
  be(version, 8);
  be(static_cast<std::uint64_t>(timestamp_ms), 8);
  for (const std::string* part : {&grid_encoding, &author, &source}) {
    be(part->size(), 4);
    buf += *part;
  }
  return hex(sha256(buf));
}

std::vector<std::uint8_t> shadow(const std::vector<double>& heights, const cityio::TableSpec& spec, double azimuth_deg,
                                 double elevation_deg) {
  std::vector<std::uint8_t> mask(heights.size(), 0);
  if (elevation_deg >= 90.0) return mask;
  const double az = azimuth_deg * kPi / 180.0;
  const double th = spec.rotation_deg * kPi / 180.0;
  const double east = std::sin(az);
  const double north = std::cos(az);
  // Toward-sun direction in grid axes (cells).
  const double dx = east * std::cos(th) + north * std::sin(th);
  const double dy = -east * std::sin(th) + north * std::cos(th);
  const double tan_el = std::tan(elevation_deg * kPi / 180.0);
  const double step = 1.0 / 64.0;
  for (int row = 0; row < spec.nrows; ++row) {
    for (int col = 0; col < spec.ncols; ++col) {
      const double base = heights[static_cast<std::size_t>(row * spec.ncols + col)];
      for (int k = 1;; ++k) {
        const double px = col + 0.5 + dx * step * k;
        const double py = row + 0.5 + dy * step * k;
        const int c = static_cast<int>(std::floor(px));
        const int r = static_cast<int>(std::floor(py));
        if (c < 0 || r < 0 || c >= spec.ncols || r >= spec.nrows) break;
        if (c == col && r == row) continue;
        const double d = spec.cell_size_m * std::sqrt(double((c - col) * (c - col) + (r - row) * (r - row)));
        if (heights[static_cast<std::size_t>(r * spec.ncols + c)] >= d * tan_el + base) {
          mask[static_cast<std::size_t>(row * spec.ncols + col)] = 1;
          break;
        }
      }
    }
  }
  return mask;
}

double trip(const cityio::GridState& state, const cityio::TableSpec& spec, int from_col, int from_row, int to_col,
            int to_row, double road_mps, double walk_mps) {
  if (from_col == to_col && from_row == to_row) return 0.0;
  auto category = [&](int c, int r) {
    return spec.registry[state.cells[static_cast<std::size_t>(r * spec.ncols + c)].type_id].category;
  };
  if (category(from_col, from_row) == cityio::Category::water || category(to_col, to_row) == cityio::Category::water) {
    return -1.0;
  }
  const double inf = 1e300;
  std::vector<double> label(state.cells.size(), inf);
  std::vector<bool> queued(state.cells.size(), false);
  std::deque<std::pair<int, int>> work;
  label[static_cast<std::size_t>(from_row * spec.ncols + from_col)] = 0.0;
  work.push_back({from_col, from_row});
  const int moves[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  while (!work.empty()) {
    auto [c, r] = work.front();
    work.pop_front();
    queued[static_cast<std::size_t>(r * spec.ncols + c)] = false;
    const double here = label[static_cast<std::size_t>(r * spec.ncols + c)];
    for (const auto& m : moves) {
      const int nc = c + m[0];
      const int nr = r + m[1];
      if (nc < 0 || nr < 0 || nc >= spec.ncols || nr >= spec.nrows) continue;
      const cityio::Category cat = category(nc, nr);
      if (cat == cityio::Category::water) continue;
      const double cost = here + spec.cell_size_m / (cat == cityio::Category::road ? road_mps : walk_mps);
      const std::size_t v = static_cast<std::size_t>(nr * spec.ncols + nc);
      if (cost < label[v]) {
        label[v] = cost;
        if (!queued[v]) {
          queued[v] = true;
          work.push_back({nc, nr});
        }
      }
    }
  }
  const double result = label[static_cast<std::size_t>(to_row * spec.ncols + to_col)];
  return result >= inf ? -1.0 : result;
}

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  const double r = 6371000.0;
  const double p1 = lat1 * kPi / 180.0;
  const double p2 = lat2 * kPi / 180.0;
  const double dp = (lat2 - lat1) * kPi / 180.0;
  const double dl = (lon2 - lon1) * kPi / 180.0;
  const double a = std::sin(dp / 2) * std::sin(dp / 2) + std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2 * r * std::atan2(std::sqrt(a), std::sqrt(1 - a));
}

std::vector<std::uint64_t> ranked_ids(const std::vector<cityio::Comment>& comments,
                                      const std::vector<std::size_t>& likes_by_id) {
  std::vector<const cityio::Comment*> order;
  for (const auto& c : comments) order.push_back(&c);
  std::sort(order.begin(), order.end(), [&](const cityio::Comment* a, const cityio::Comment* b) {
    const std::size_t la = likes_by_id[a->id];
    const std::size_t lb = likes_by_id[b->id];
    if (la != lb) return la > lb;
    if (a->created_at_ms != b->created_at_ms) return a->created_at_ms < b->created_at_ms;
    return a->id < b->id;
  });
  std::vector<std::uint64_t> ids;
  for (const auto* c : order) ids.push_back(c->id);
  return ids;
}

double entropy(const cityio::GridState& state, const cityio::TableSpec& spec) {
  std::map<std::uint32_t, double> tally;
  double total = 0;
  for (const auto& c : state.cells) {
    if (spec.registry[c.type_id].category == cityio::Category::empty) continue;
    tally[c.type_id] += 1;
    total += 1;
  }
  double h = 0;
  for (const auto& [id, n] : tally) h -= (n / total) * std::log(n / total);
  return h;
}

}  // namespace oracle

namespace fixture {

cityio::TableSpec spec(int ncols, int nrows, double cell_size, std::string name) {
  cityio::TableSpec s;
  s.name = std::move(name);
  s.ncols = ncols;
  s.nrows = nrows;
  s.cell_size_m = cell_size;
  s.origin_lat = 42.36;
  s.origin_lon = -71.09;
  s.registry = cityio::default_registry();
  return s;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

cityio::Cell random_cell(const cityio::TableSpec& spec, std::mt19937_64& rng) {
  cityio::Cell c;
  c.type_id = static_cast<cityio::TypeId>(rng() % spec.registry.size());
  c.rotation = static_cast<std::uint16_t>(90 * (rng() % 4));
  if (spec.registry[c.type_id].category == cityio::Category::building && rng() % 2) {
    c.floors = static_cast<std::uint32_t>(rng() % 30);
  }
  return c;
}

cityio::GridState random_grid(const cityio::TableSpec& spec, std::mt19937_64& rng) {
  cityio::GridState g;
  for (std::size_t i = 0; i < spec.cell_count(); ++i) g.cells.push_back(random_cell(spec, rng));
  return g;
}

cityio::GridState random_grid_with_water(const cityio::TableSpec& spec, std::mt19937_64& rng, int water_percent) {
  cityio::GridState g;
  for (std::size_t i = 0; i < spec.cell_count(); ++i) {
    cityio::Cell c;
    if (static_cast<int>(rng() % 100) < water_percent) {
      c.type_id = kWater;
    } else {
      const cityio::TypeId land[] = {kEmpty, kResidential, kOffice, kRoad, kRoad, kPark};
      c.type_id = land[rng() % 6];
    }
    g.cells.push_back(c);
  }
  return g;
}

}  // namespace fixture
