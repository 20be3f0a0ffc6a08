#pragma once

// Client-side scripted workloads. Both go through the public API only.

#include <chrono>
#include <cstdint>
#include <string>

#include "cityio/digest.hpp"

namespace cityio {

struct SeedResult {
  std::string table;
  std::uint64_t head_version = 0;
  Digest head_grid_hash;
  std::size_t comments = 0;
  std::uint64_t top_comment_id = 0;
  std::size_t top_comment_likes = 0;
};

inline constexpr std::size_t kDemoCommits = 30;
inline constexpr std::size_t kDemoComments = 200;

// Creates demo-<seed> (16x16) and fills it with kDemoCommits commits after
// genesis, kDemoComments comments with cell and geo anchors (some outside
// the table) and random likes. Deterministic for a given seed.
SeedResult seed_demo(const std::string& server, std::uint64_t seed);

struct BenchResult {
  std::string table;
  std::size_t acked = 0;
  bool ids_dense = true;
  std::chrono::duration<double> elapsed{};
};

// Creates a fresh table and posts n comments sequentially. Throws ApiError
// on any non-acknowledged post.
BenchResult bench_comments(const std::string& server, std::size_t n);

}  // namespace cityio
