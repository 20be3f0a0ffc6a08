#include "cityio/demo.hpp"

#include <array>
#include <random>
#include <set>

#include "cityio/client.hpp"
#include "cityio/codec.hpp"
#include "cityio/geo.hpp"

namespace cityio {

namespace {

constexpr std::array<const char*, 12> kPhrases = {
    "More trees along this street",
    "Too many parking lots here",
    "Could this block host a market?",
    "Bike lane needed",
    "Love the new park",
    "Buildings here feel too tall",
    "Needs a crossing for pedestrians",
    "Great spot for housing",
    "Keep the waterfront open",
    "Shade would help in summer",
    "Bus stop please",
    "This corner is noisy at night",
};

TableSpec demo_spec(std::string name) {
  TableSpec spec;
  spec.name = std::move(name);
  spec.ncols = 16;
  spec.nrows = 16;
  spec.cell_size_m = 10.0;
  spec.origin_lat = 42.3601;
  spec.origin_lon = -71.0942;
  spec.rotation_deg = 0.0;
  spec.registry = default_registry();
  return spec;
}

Cell random_cell(const TableSpec& spec, std::mt19937_64& rng) {
  Cell c;
  c.type_id = static_cast<TypeId>(rng() % spec.registry.size());
  c.rotation = static_cast<std::uint16_t>(90 * (rng() % 4));
  if (spec.registry[c.type_id].category == Category::building && rng() % 2 == 0) {
    c.floors = static_cast<std::uint32_t>(1 + rng() % 20);
  }
  return c;
}

}  // namespace

SeedResult seed_demo(const std::string& server, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ApiClient client(server);
  const TableSpec spec = demo_spec("demo-" + std::to_string(seed));
  Commit head = client.create_table(spec);
  const std::size_t n = spec.cell_count();

  for (std::size_t k = 1; k <= kDemoCommits; ++k) {
    GridPost post;
    std::vector<CellEdit> edits;
    const std::size_t count = k % 5 == 0 ? 12 : 1 + rng() % 8;
    for (std::size_t i = 0; i < count; ++i) edits.push_back({rng() % n, random_cell(spec, rng)});
    if (diff(head.grid, apply_edits(spec, head.grid, edits)).empty()) {
      // Guarantee a real change so every step is a new version.
      Cell c = head.grid.cells[edits.front().index];
      c.type_id = static_cast<TypeId>((c.type_id + 1) % spec.registry.size());
      c.floors.reset();
      edits.push_back({edits.front().index, c});
    }
    post.author = "script";
    if (k % 5 == 0) {
      post.grid = apply_edits(spec, head.grid, edits);
      post.source = Source::table;
    } else {
      post.edits = std::move(edits);
      post.base_version = head.version;
      post.source = Source::ui;
    }
    GridPostResult r = client.post_grid(spec.name, post);
    if (r.status != 200) throw ApiError(r.status, "unexpected conflict while seeding");
    head = std::move(r.commit);
  }

  std::vector<std::uint64_t> ids;
  for (std::size_t i = 0; i < kDemoComments; ++i) {
    Anchor anchor;
    const std::uint64_t kind = rng() % 10;
    const int col = static_cast<int>(rng() % 16);
    const int row = static_cast<int>(rng() % 16);
    if (kind < 7) {
      anchor = CellAnchor{col, row};
    } else if (kind < 9) {
      const GeoPoint p = cell_to_geo(spec, col, row);
      anchor = GeoAnchor{p.lat, p.lon};
    } else {
      // South-west of the origin: outside the table.
      anchor = GeoAnchor{spec.origin_lat - 0.0005 * static_cast<double>(1 + rng() % 4), spec.origin_lon - 0.0005};
    }
    const std::string text = std::string(kPhrases[rng() % kPhrases.size()]) + " (#" + std::to_string(i + 1) + ")";
    ids.push_back(client.add_comment(spec.name, anchor, text, "visitor-" + std::to_string(rng() % 40)).id);
  }

  for (std::uint64_t id : ids) {
    const std::uint64_t likes = rng() % 6;
    for (std::uint64_t j = 0; j < likes; ++j) {
      const std::string author = "visitor-" + std::to_string(rng() % 40);
      client.react(spec.name, id, author);
      if (rng() % 3 == 0) client.react(spec.name, id, author);
    }
  }

  SeedResult out;
  out.table = spec.name;
  out.head_version = head.version;
  out.head_grid_hash = head.grid_hash;
  out.comments = ids.size();
  const auto top = client.top_comments(spec.name, 1);
  if (!top.empty()) {
    out.top_comment_id = top.front().comment.id;
    out.top_comment_likes = top.front().like_count;
  }
  return out;
}

BenchResult bench_comments(const std::string& server, std::size_t n) {
  ApiClient client(server);
  std::set<std::string> taken;
  for (const TableSummary& t : client.list_tables()) taken.insert(t.name);
  std::string name = "bench-" + std::to_string(n);
  for (int k = 2; taken.contains(name); ++k) name = "bench-" + std::to_string(n) + "-" + std::to_string(k);
  const TableSpec spec = demo_spec(name);
  client.create_table(spec);

  BenchResult out;
  out.table = name;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < n; ++i) {
    const int cell = static_cast<int>(i % spec.cell_count());
    const Comment c = client.add_comment(name, CellAnchor{cell % spec.ncols, cell / spec.ncols},
                                         "comment " + std::to_string(i + 1), "bench");
    ++out.acked;
    if (c.id != i + 1) out.ids_dense = false;
  }
  out.elapsed = std::chrono::steady_clock::now() - start;
  return out;
}

}  // namespace cityio
