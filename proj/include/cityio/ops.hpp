#pragma once

// Offline operations on a data directory: export/import bundles, integrity
// checks and replay summaries. They read the same files the server writes
// and never modify an existing table.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cityio/digest.hpp"
#include "cityio/grid.hpp"
#include "cityio/history.hpp"

namespace cityio {

// Bundle layout: first line {"table_spec":<spec>}, then the commit log
// records verbatim, each newline-terminated.
struct Bundle {
  TableSpec spec;
  std::vector<std::string> records;
};

std::string encode_bundle(const TableSpec& spec, std::span<const std::string> records);
// Throws Error(malformed_encoding) for a bad header; commits are not checked.
Bundle decode_bundle(std::string_view bytes);

TableSpec read_table_spec(const std::filesystem::path& data_dir, const std::string& table);

// Verifies the chain first. Returns the record count.
std::size_t export_table(const std::filesystem::path& data_dir, const std::string& table,
                         const std::filesystem::path& out);

// Refuses existing tables (table_exists) and broken chains
// (ChainBrokenError). Writes the spec, commit log and a regenerated event
// log. Returns the record count.
std::size_t import_bundle(const std::filesystem::path& data_dir, const std::filesystem::path& in);

struct VerifyReport {
  std::string file;
  std::size_t records = 0;
  bool ok = true;
  std::size_t broken_at = 0;  // 1-based record
  std::string reason;
  bool torn_tail = false;     // an incomplete final record would be dropped
};

// A single log or bundle. A commit log needs its <table>.spec beside it.
VerifyReport verify_file(const std::filesystem::path& path);
// Commit, comment and event logs of one table, stopping at the first failure.
std::vector<VerifyReport> verify_table(const std::filesystem::path& data_dir, const std::string& table);

struct ReplaySummary {
  std::string table;
  std::uint64_t head_version = 0;
  Digest head_commit_hash;
  Digest head_grid_hash;
  std::size_t comments = 0;
  std::size_t reactions = 0;
};

// Throws ChainBrokenError on a bad commit or comment log.
ReplaySummary replay_table(const std::filesystem::path& data_dir, const std::string& table);

}  // namespace cityio
