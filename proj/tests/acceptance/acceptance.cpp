// One PASS/FAIL line per top-level criterion; exit status 1 if any fails.

#include <algorithm>
#include <barrier>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "cityio/analysis.hpp"
#include "cityio/client.hpp"
#include "cityio/codec.hpp"
#include "cityio/geo.hpp"
#include "cityio/ops.hpp"
#include "support/harness.hpp"
#include "support/oracles.hpp"

using namespace cityio;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

struct Failed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failed(what);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt_s(double s) {
  std::ostringstream o;
  o.precision(3);
  o << std::fixed << s << " s";
  return o.str();
}

int failures = 0;

void criterion(const std::string& name, const std::function<std::string()>& body) {
  std::string detail;
  bool ok = false;
  try {
    detail = body();
    ok = true;
  } catch (const std::exception& e) {
    detail = e.what();
  }
  if (!ok) ++failures;
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

// State shared between the convergence test and the replay test.
struct Converged {
  std::unique_ptr<harness::TempDir> dir;
  std::string table;
  Digest head_commit_hash;
  std::uint64_t head_version = 0;
  bool ready = false;
} converged;

// A client-side copy of a table kept current from the event stream.
class Replica {
 public:
  explicit Replica(TableSpec spec) : spec_(std::move(spec)) {}

  // Returns false to end the stream once `stop_at` is reached.
  bool on_event(const SseEvent& e) {
    std::lock_guard lock(mu_);
    if (e.event == "snapshot") {
      const Json j = parse_json(e.data);
      const Commit head = decode_commit(canonical_dump(j["head"]), spec_);
      grid_ = head.grid;
      version_ = head.version;
      versions_.push_back(head.version);
    } else if (e.event == "commit") {
      const Json j = parse_json(e.data);
      const Json& payload = j["payload"];
      const Commit c = decode_commit(canonical_dump(payload["commit"]), spec_);
      if (c.version != version_ + 1) gap_ = true;
      for (const Json& change : payload["diff"]) {
        grid_.cells.at(change["index"].get<std::size_t>()) = cell_from_json(change["after"]);
      }
      if (state_hash(grid_) != c.grid_hash) diverged_ = true;
      version_ = c.version;
      versions_.push_back(c.version);
    }
    return !(stop_at_ && version_ >= stop_at_);
  }

  void stop_at(std::uint64_t v) {
    std::lock_guard lock(mu_);
    stop_at_ = v;
  }
  std::uint64_t version() const {
    std::lock_guard lock(mu_);
    return version_;
  }
  GridState grid() const {
    std::lock_guard lock(mu_);
    return grid_;
  }
  bool gap() const { return gap_; }
  bool diverged() const { return diverged_; }

 private:
  TableSpec spec_;
  mutable std::mutex mu_;
  GridState grid_;
  std::uint64_t version_ = 0;
  std::uint64_t stop_at_ = 0;
  std::vector<std::uint64_t> versions_;
  bool gap_ = false;
  bool diverged_ = false;
};

std::string convergence() {
  constexpr int kClients = 8;
  constexpr int kMutations = 100;
  converged.dir = std::make_unique<harness::TempDir>();
  ServerOptions so;
  so.heartbeat = std::chrono::milliseconds(200);
  harness::TestServer server(harness::persistent(converged.dir->path()), so);
  const TableSpec spec = fixture::spec(16, 16, 10.0, "converge");
  const auto t0 = Clock::now();
  ApiClient admin(server.url());
  admin.create_table(spec);

  std::vector<std::unique_ptr<Replica>> replicas;
  for (int i = 0; i < kClients; ++i) replicas.push_back(std::make_unique<Replica>(spec));

  std::vector<std::jthread> readers;
  std::vector<std::unique_ptr<ApiClient>> stream_clients;
  for (int i = 0; i < kClients; ++i) {
    stream_clients.push_back(std::make_unique<ApiClient>(server.url()));
    readers.emplace_back([&, i] {
      try {
        stream_clients[i]->stream(spec.name, std::nullopt,
                                  [&, i](const SseEvent& e) { return replicas[i]->on_event(e); });
      } catch (const std::exception& e) {
        std::cerr << "replica " << i << " stream: " << e.what() << "\n";
      }
    });
  }
  for (auto& r : replicas) {
    if (!harness::eventually([&] { return r->version() >= 1; })) throw Failed("replica never received a snapshot");
  }

  std::atomic<int> conflicts{0};
  std::atomic<int> errors{0};
  std::barrier start(kClients);
  {
    std::vector<std::jthread> writers;
    for (int i = 0; i < kClients; ++i) {
      writers.emplace_back([&, i] {
        ApiClient c(server.url());
        std::mt19937_64 rng(1000 + i);
        start.arrive_and_wait();
        for (int m = 0; m < kMutations; ++m) {
          try {
            if (rng() % 2) {
              GridPost p;
              GridState g = replicas[i]->grid();
              for (int k = 0; k < 5; ++k) g.cells[rng() % g.cells.size()] = fixture::random_cell(spec, rng);
              p.grid = std::move(g);
              p.author = "client" + std::to_string(i);
              p.source = Source::table;
              c.post_grid(spec.name, p);
            } else {
              GridPost p;
              for (int k = 0; k < 3; ++k) p.edits.push_back({rng() % spec.cell_count(), fixture::random_cell(spec, rng)});
              p.base_version = replicas[i]->version();
              p.author = "client" + std::to_string(i);
              p.source = Source::ui;
              for (int attempt = 0; attempt < 1000; ++attempt) {
                const GridPostResult r = c.post_grid(spec.name, p);
                if (r.status == 200) break;
                ++conflicts;
                p.base_version = r.commit.version;
              }
            }
          } catch (const std::exception&) {
            ++errors;
          }
        }
      });
    }
  }
  expect(errors == 0, std::to_string(errors.load()) + " mutations failed");

  const HeadResult head = admin.head(spec.name);
  const std::uint64_t n = head.commit->version;
  for (auto& r : replicas) r->stop_at(n);
  for (auto& r : replicas) {
    if (!harness::eventually([&] { return r->version() >= n; }, std::chrono::seconds(20))) {
      throw Failed("a replica stalled at version " + std::to_string(r->version()) + " of " + std::to_string(n));
    }
  }
  readers.clear();
  for (int i = 0; i < kClients; ++i) {
    expect(!replicas[i]->gap(), "replica " + std::to_string(i) + " saw a version gap");
    expect(!replicas[i]->diverged(), "replica " + std::to_string(i) + " diverged from a commit's grid_hash");
    expect(state_hash(replicas[i]->grid()) == head.commit->grid_hash,
           "replica " + std::to_string(i) + " ends on a different grid_hash");
  }
  Digest parent{};
  for (std::uint64_t from = 1; from <= n; from += 500) {
    const auto batch = admin.commits(spec.name, from, std::min(n, from + 499));
    for (std::size_t k = 0; k < batch.size(); ++k) {
      expect(batch[k].version == from + k, "commit versions are not gap-free");
      expect(batch[k].parent_hash == parent, "commit chain does not link");
      parent = batch[k].commit_hash;
    }
  }
  const double elapsed = seconds_since(t0);
  expect(elapsed < 30.0, "took " + fmt_s(elapsed));

  converged.table = spec.name;
  converged.head_commit_hash = head.commit->commit_hash;
  converged.head_version = n;
  converged.ready = true;
  server.stop();
  return std::to_string(kClients) + " clients, " + std::to_string(kClients * kMutations) + " mutations, " +
         std::to_string(n) + " versions, " + std::to_string(conflicts.load()) + " conflicts retried, one grid_hash " +
         head.commit->grid_hash.hex().substr(0, 12) + ", " + fmt_s(elapsed);
}

std::string replay_determinism() {
  expect(converged.ready, "the convergence run did not produce a table");
  const auto t0 = Clock::now();
  harness::TempDir fresh;
  const fs::path bundle = fresh.path() / "export.bundle";
  const std::size_t records = export_table(converged.dir->path(), converged.table, bundle);
  fs::create_directories(fresh.path() / "data");
  import_bundle(fresh.path() / "data", bundle);

  Digest imported_head;
  {
    harness::TestServer server(harness::persistent(fresh.path() / "data"));
    ApiClient client(server.url());
    imported_head = client.head(converged.table).commit->commit_hash;
  }
  const fs::path again = fresh.path() / "again.bundle";
  export_table(fresh.path() / "data", converged.table, again);
  const double elapsed = seconds_since(t0);

  expect(records == converged.head_version, "export wrote " + std::to_string(records) + " records");
  expect(imported_head == converged.head_commit_hash, "imported head commit_hash differs");
  expect(read_file(bundle) == read_file(again), "re-export is not byte-identical");
  expect(elapsed < 5.0, "took " + fmt_s(elapsed));
  return std::to_string(records) + " commits, head " + imported_head.hex().substr(0, 12) +
         ", re-export byte-identical, " + fmt_s(elapsed);
}

std::string idempotent_frames() {
  harness::TestServer server(harness::in_memory());
  const TableSpec spec = fixture::spec(16, 16, 10.0, "scanner");
  server.hub().create_table(spec);
  ApiClient client(server.url());
  std::mt19937_64 rng(5);
  GridPost first;
  first.grid = fixture::random_grid(spec, rng);
  first.source = Source::table;
  const Commit head = client.post_grid(spec.name, first).commit;
  const std::uint64_t seq = server.hub().table(spec.name)->last_seq();
  for (int i = 0; i < 1000; ++i) {
    GridPost p;
    p.grid = head.grid;
    p.author = "scanner";
    p.source = Source::table;
    const GridPostResult r = client.post_grid(spec.name, p);
    expect(r.status == 200 && r.commit.version == head.version, "re-post " + std::to_string(i) + " changed the head");
  }
  const std::uint64_t after = client.head(spec.name).commit->version;
  expect(after == head.version, std::to_string(after - head.version) + " new versions");
  expect(server.hub().table(spec.name)->last_seq() == seq, "re-posts emitted events");
  return "1000 re-posts, 0 new versions, 0 new events";
}

std::string optimistic_concurrency() {
  harness::TestServer server(harness::in_memory());
  const TableSpec spec = fixture::spec(10, 10, 10.0, "race");
  server.hub().create_table(spec);
  ApiClient a(server.url());
  ApiClient b(server.url());
  for (int round = 0; round < 100; ++round) {
    const std::uint64_t base = a.head(spec.name).commit->version;
    std::barrier sync(2);
    int sa = 0, sb = 0;
    auto race = [&](ApiClient& c, TypeId type, int& status) {
      GridPost p;
      p.edits = {{std::size_t(round), Cell{type, 0, {}}}};
      p.base_version = base;
      p.source = Source::ui;
      sync.arrive_and_wait();
      status = c.post_grid(spec.name, p).status;
    };
    {
      std::jthread ta([&] { race(a, fixture::kRoad, sa); });
      std::jthread tb([&] { race(b, fixture::kPark, sb); });
    }
    const bool one_each = (sa == 200 && sb == 409) || (sa == 409 && sb == 200);
    expect(one_each, "round " + std::to_string(round) + ": " + std::to_string(sa) + " and " + std::to_string(sb));
    expect(a.head(spec.name).commit->version == base + 1, "round " + std::to_string(round) + " did not add one version");
  }
  return "100 races, one 200 and one 409 each";
}

std::string stream_resume() {
  harness::TestServer server(harness::in_memory());
  const TableSpec spec = fixture::spec(12, 12, 10.0, "resume");
  server.hub().create_table(spec);
  auto table = server.hub().table(spec.name);
  constexpr int kMutations = 500;

  std::atomic<bool> writing{true};
  std::jthread writer([&] {
    std::mt19937_64 rng(77);
    for (int i = 0; i < kMutations; ++i) {
      if (rng() % 4 == 0) {
        table->add_comment(CellAnchor{int(rng() % 12), int(rng() % 12)}, "m" + std::to_string(i), "w");
      } else {
        GridPost p;
        p.grid = fixture::random_grid(spec, rng);
        p.source = Source::table;
        table->post(p);
      }
      if (rng() % 8 == 0) std::this_thread::sleep_for(std::chrono::microseconds(rng() % 2000));
    }
    writing = false;
  });

  std::mt19937_64 rng(78);
  std::vector<std::uint64_t> seen;
  std::uint64_t cursor = 0;
  int reconnects = 0;
  const std::uint64_t expected_last = 1 + kMutations;
  while (cursor < expected_last) {
    ApiClient client(server.url());
    const bool async_kill = rng() % 2;
    const std::size_t budget = 1 + rng() % 60;
    std::size_t taken = 0;
    std::jthread killer;
    if (async_kill) {
      const auto delay = std::chrono::microseconds(rng() % 20000);
      killer = std::jthread([&client, delay](std::stop_token st) {
        const auto until = Clock::now() + delay;
        while (!st.stop_requested() && Clock::now() < until) std::this_thread::sleep_for(std::chrono::microseconds(200));
        if (!st.stop_requested()) client.stop();
      });
    }
    try {
      client.stream(spec.name, cursor, [&](const SseEvent& e) {
        if (!e.id) return true;
        seen.push_back(*e.id);
        cursor = *e.id;
        return async_kill || ++taken < budget;
      });
    } catch (const ApiError& e) {
      if (e.status() != 0) throw;
    }
    if (killer.joinable()) {
      killer.request_stop();
      killer.join();
    }
    ++reconnects;
    if (reconnects > 100000) throw Failed("no progress");
  }
  writer.join();
  expect(table->last_seq() == expected_last, "server has " + std::to_string(table->last_seq()) + " events");
  for (std::size_t i = 0; i < seen.size(); ++i) {
    expect(seen[i] == i + 1, "event " + std::to_string(i + 1) + " arrived as seq " + std::to_string(seen[i]));
  }
  expect(seen.size() == expected_last, "received " + std::to_string(seen.size()) + " events");
  return std::to_string(kMutations) + " mutations, " + std::to_string(reconnects) + " connections, seqs 1.." +
         std::to_string(seen.size()) + " gap-free";
}

std::string shadow_oracle() {
  const auto t0 = Clock::now();
  const TableSpec spec = fixture::spec(8, 8, 10.0);
  std::vector<std::string> mismatches;
  std::size_t shaded = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> heights(64, 0.0);
    for (double& h : heights) {
      if (rng() % 2) h = 3.0 * double(1 + rng() % 12);
    }
    const SunPosition sun{fixture::uniform(rng, 0.0, 360.0), fixture::uniform(rng, 1.0, 89.0)};
    const Layer layer = make_scalar_layer("heights", spec, heights);
    const auto got = shadow_mask(layer, spec, sun).mask;
    const auto want = oracle::shadow(heights, spec, sun.azimuth_deg, sun.elevation_deg);
    for (auto v : got) shaded += v;
    if (got != want) {
      std::size_t cells = 0;
      for (std::size_t i = 0; i < 64; ++i) cells += got[i] != want[i];
      mismatches.push_back("seed " + std::to_string(seed) + " (" + std::to_string(cells) + " cells)");
    }
    const auto overhead = shadow_mask(layer, spec, {sun.azimuth_deg, 90.0}).mask;
    expect(std::all_of(overhead.begin(), overhead.end(), [](auto v) { return v == 0; }),
           "elevation 90 shaded a cell for seed " + std::to_string(seed));
  }
  const double elapsed = seconds_since(t0);
  if (!mismatches.empty()) {
    std::string list;
    for (const auto& m : mismatches) list += (list.empty() ? "" : ", ") + m;
    throw Failed(std::to_string(mismatches.size()) + "/100 instances differ from the fine-sampling oracle: " + list);
  }
  expect(elapsed < 10.0, "took " + fmt_s(elapsed));
  return "100/100 instances match (" + std::to_string(shaded) + " shaded cells), elevation 90 empty, " + fmt_s(elapsed);
}

std::string routing_oracle() {
  const TableSpec spec = fixture::spec(8, 8, 10.0);
  const TravelSpeeds speeds{};
  std::size_t pairs = 0, unreachable = 0;
  auto same = [](double got, double want) {
    if (want < 0) return got == kUnreachableSeconds;
    return std::abs(got - want) <= 1e-9 * std::max(1.0, want);
  };
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    std::mt19937_64 rng(seed);
    const GridState g = fixture::random_grid_with_water(spec, rng, 25);
    for (int fc = 0; fc < 8; ++fc) {
      for (int fr = 0; fr < 8; ++fr) {
        for (int tc = 0; tc < 8; ++tc) {
          for (int tr = 0; tr < 8; ++tr) {
            const double want = oracle::trip(g, spec, fc, fr, tc, tr, speeds.road_mps, speeds.walk_mps);
            const double got = trip_duration(g, spec, {fc, fr}, {tc, tr}, speeds).value_or(kUnreachableSeconds);
            if (fc == tc && fr == tr) expect(got == 0.0, "from == to is not 0");
            expect(same(got, want), "seed " + std::to_string(seed) + " trip (" + std::to_string(fc) + "," +
                                        std::to_string(fr) + ")->(" + std::to_string(tc) + "," + std::to_string(tr) +
                                        ")");
            ++pairs;
            unreachable += want < 0;
          }
        }
      }
    }
    for (Category target : {Category::building, Category::road, Category::park}) {
      const Layer acc = accessibility(g, spec, target, speeds);
      for (int c = 0; c < 8; ++c) {
        for (int r = 0; r < 8; ++r) {
          double best = -1.0;
          for (int tc = 0; tc < 8; ++tc) {
            for (int tr = 0; tr < 8; ++tr) {
              if (spec.registry[g.cells[cell_index(spec, tc, tr)].type_id].category != target) continue;
              const double t = oracle::trip(g, spec, c, r, tc, tr, speeds.road_mps, speeds.walk_mps);
              if (t >= 0 && (best < 0 || t < best)) best = t;
            }
          }
          expect(same(acc.scalars[cell_index(spec, c, r)], best),
                 "seed " + std::to_string(seed) + " " + acc.name + " at (" + std::to_string(c) + "," +
                     std::to_string(r) + ")");
        }
      }
    }
  }
  // A park cell walled in by water.
  GridState ring = new_grid(spec);
  for (int c = 2; c <= 4; ++c) {
    for (int r = 2; r <= 4; ++r) ring.cells[cell_index(spec, c, r)].type_id = fixture::kWater;
  }
  ring.cells[cell_index(spec, 3, 3)].type_id = fixture::kPark;
  expect(!trip_duration(ring, spec, {0, 0}, {3, 3}, speeds), "enclosed cell reachable");
  expect(accessibility(ring, spec, Category::park, speeds).scalars[cell_index(spec, 0, 0)] == kUnreachableSeconds,
         "enclosed park counted as accessible");
  return "100 grids, " + std::to_string(pairs) + " trips (" + std::to_string(unreachable) +
         " unreachable) and 19200 accessibility cells match";
}

std::string closed_forms() {
  const TableSpec spec = fixture::spec(4, 4);
  GridState uniform = new_grid(spec);
  const TypeId types[] = {fixture::kResidential, fixture::kOffice, fixture::kRoad, fixture::kPark};
  for (int i = 0; i < 16; ++i) uniform.cells[i].type_id = types[i % 4];
  const double h = diversity(uniform, spec).metrics.at("shannon_nats");
  expect(std::abs(h - std::log(4.0)) <= 1e-12, "entropy " + std::to_string(h));

  GridState built = new_grid(spec);
  for (int i = 0; i < 8; ++i) built.cells[i] = Cell{fixture::kResidential, 0, 2};
  const double far = density(built, spec).metrics.at("far");
  expect(far == 1.0, "far " + std::to_string(far));
  std::ostringstream o;
  o.precision(17);
  o << "shannon " << h << " (|err| " << std::abs(h - std::log(4.0)) << "), far " << far;
  return o.str();
}

std::string comment_scale() {
  constexpr std::size_t kComments = 200;
  harness::TestServer server(harness::in_memory());
  const TableSpec spec = fixture::spec(16, 16, 10.0, "barcelona");
  server.hub().create_table(spec);
  ApiClient client(server.url());
  std::mt19937_64 rng(200);

  const auto t0 = Clock::now();
  std::vector<Comment> comments;
  for (std::size_t i = 0; i < kComments; ++i) {
    Anchor anchor;
    if (rng() % 3) {
      anchor = CellAnchor{int(rng() % 16), int(rng() % 16)};
    } else {
      const GeoPoint p = cell_to_geo(spec, int(rng() % 16), int(rng() % 16));
      anchor = GeoAnchor{p.lat, p.lon};
    }
    comments.push_back(client.add_comment(spec.name, anchor, "comment " + std::to_string(i), "visitor" + std::to_string(rng() % 50)));
  }
  const double ingest = seconds_since(t0);
  expect(ingest < 10.0, "ingest took " + fmt_s(ingest));
  for (std::size_t i = 0; i < kComments; ++i) expect(comments[i].id == i + 1, "ids are not dense 1..200");

  std::vector<std::set<std::string>> likers(kComments + 1);
  std::size_t duplicates = 0;
  for (int i = 0; i < 1500; ++i) {
    const std::uint64_t id = 1 + rng() % kComments;
    const std::string who = "u" + std::to_string(rng() % 30);
    const bool fresh = likers[id].insert(who).second;
    duplicates += !fresh;
    const std::size_t count = client.react(spec.name, id, who);
    expect(count == likers[id].size(), "like count " + std::to_string(count) + " for comment " + std::to_string(id));
  }
  std::vector<std::size_t> likes(kComments + 1);
  for (std::size_t id = 1; id <= kComments; ++id) likes[id] = likers[id].size();
  const auto want = oracle::ranked_ids(comments, likes);
  for (std::size_t k : {1u, 5u, 10u, 50u, 200u, 250u}) {
    const auto top = client.top_comments(spec.name, k);
    expect(top.size() == std::min<std::size_t>(k, kComments), "top " + std::to_string(k) + " size");
    for (std::size_t i = 0; i < top.size(); ++i) {
      expect(top[i].comment.id == want[i], "top " + std::to_string(k) + " rank " + std::to_string(i + 1));
      expect(top[i].like_count == likes[want[i]], "top " + std::to_string(k) + " like count");
    }
  }
  return "200 comments in " + fmt_s(ingest) + ", ids 1..200, top-k matches, " + std::to_string(duplicates) +
         " duplicate likes ignored";
}

std::string conditional_get() {
  harness::TestServer server(harness::in_memory());
  const TableSpec spec = fixture::spec(6, 6, 10.0, "etag");
  server.hub().create_table(spec);
  auto table = server.hub().table(spec.name);
  GridPost p;
  p.edits = {{4, Cell{fixture::kPark, 0, {}}}};
  p.base_version = 1;
  table->post(p);

  httplib::Client raw(server.url());
  auto current = raw.Get("/api/tables/etag/head", {{"If-None-Match", "\"2\""}});
  expect(current && current->status == 304, "current tag did not give 304");
  expect(current->body.empty(), "304 carried a body");
  auto stale = raw.Get("/api/tables/etag/head", {{"If-None-Match", "\"1\""}});
  expect(stale && stale->status == 200, "stale tag did not give 200");
  auto plain = raw.Get("/api/tables/etag/head");
  expect(stale->body == plain->body, "stale tag did not return the full head");
  expect(stale->body == encode_commit(*table->head()), "head body differs from the stored commit");
  expect(stale->get_header_value("ETag") == "\"2\"", "missing ETag");
  return "current tag 304 with empty body, stale tag 200 with the full head";
}

std::string chain_integrity() {
  harness::TempDir dir;
  const TableSpec spec = fixture::spec(6, 6, 10.0, "chain");
  {
    Hub hub(harness::persistent(dir.path()));
    hub.create_table(spec);
    auto t = hub.table(spec.name);
    std::mt19937_64 rng(100);
    while (t->head()->version < 100) {
      GridPost p;
      p.grid = fixture::random_grid(spec, rng);
      p.author = "a" + std::to_string(rng() % 7);
      t->post(p);
    }
  }
  const fs::path log = table_files::commits(dir.path(), spec.name);
  const std::string bytes = read_file(log);
  expect(split_log(bytes).records.size() == 100, "log does not have 100 records");
  std::vector<std::size_t> record_of(bytes.size());
  for (std::size_t i = 0, k = 1; i < bytes.size(); ++i) {
    record_of[i] = k;
    if (bytes[i] == '\n') ++k;
  }

  std::mt19937_64 rng(11);
  harness::TempDir scratch;
  fs::copy_file(table_files::spec(dir.path(), spec.name), table_files::spec(scratch.path(), spec.name));
  const fs::path damaged_log = table_files::commits(scratch.path(), spec.name);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t pos = rng() % bytes.size();
    std::string damaged = bytes;
    damaged[pos] = static_cast<char>(damaged[pos] ^ (1 + rng() % 255));
    write_file_atomic(damaged_log, damaged);
    const std::string where = "flip at byte " + std::to_string(pos) + " (record " + std::to_string(record_of[pos]) + ")";

    const VerifyReport r = verify_file(damaged_log);
    expect(!r.ok, "verify accepted " + where);
    expect(r.broken_at == record_of[pos], "verify blamed record " + std::to_string(r.broken_at) + " for " + where);
    try {
      replay_table(scratch.path(), spec.name);
      throw Failed("replay accepted " + where);
    } catch (const ChainBrokenError& e) {
      expect(e.record() == record_of[pos], "replay blamed record " + std::to_string(e.record()) + " for " + where);
    }
  }
  return "50 flips over " + std::to_string(bytes.size()) + " bytes, all caught at the right record";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  criterion("convergence", convergence);
  criterion("replay_determinism", replay_determinism);
  criterion("idempotent_frames", idempotent_frames);
  criterion("optimistic_concurrency", optimistic_concurrency);
  criterion("stream_resume", stream_resume);
  criterion("shadow_oracle", shadow_oracle);
  criterion("routing_oracle", routing_oracle);
  criterion("closed_forms", closed_forms);
  criterion("comment_scale", comment_scale);
  criterion("conditional_get", conditional_get);
  criterion("chain_integrity", chain_integrity);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
