#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cityio {

// Newline-delimited record framing shared by the commit, comment and event
// logs.
struct LogSplit {
  std::vector<std::string> records;
  // Bytes after the last newline, if any.
  std::optional<std::string> tail;
};

LogSplit split_log(std::string_view bytes);

// True when `tail` is a strict prefix of some record: its outermost object
// never closes. A crash mid-append produces exactly this shape, while a
// corrupted complete record (e.g. a damaged final newline) does not.
bool is_incomplete_record(std::string_view tail);

struct LoadedLog {
  std::vector<std::string> records;
  bool discarded_tail = false;
  // Length of the newline-terminated prefix, and of the whole file.
  std::size_t valid_bytes = 0;
  std::size_t file_bytes = 0;

  bool needs_repair() const noexcept { return valid_bytes != file_bytes; }
};

// Reads a log for recovery: an incomplete final record is dropped (with
// discarded_tail set); any other unterminated tail is kept as a record so
// that verification reports it. A missing file reads as empty.
LoadedLog load_log(const std::filesystem::path& path);
LoadedLog parse_log(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Replaces the file with `records`, each newline-terminated.
void rewrite_log(const std::filesystem::path& path, const std::vector<std::string>& records);

// Append-only record writer. Each append() issues one write of
// record + '\n'; with `sync` it is followed by fdatasync. Failures throw
// Error(storage_failure).
class AppendLog {
 public:
  AppendLog() = default;
  AppendLog(const std::filesystem::path& path, bool sync);
  ~AppendLog();
  AppendLog(AppendLog&& other) noexcept;
  AppendLog& operator=(AppendLog&& other) noexcept;
  AppendLog(const AppendLog&) = delete;
  AppendLog& operator=(const AppendLog&) = delete;

  bool is_open() const noexcept { return fd_ >= 0; }
  void append(std::string_view record);

 private:
  int fd_ = -1;
  bool sync_ = false;
  std::filesystem::path path_;
};

}  // namespace cityio
