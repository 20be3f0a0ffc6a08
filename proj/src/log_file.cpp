#include "cityio/log_file.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include "cityio/error.hpp"

namespace cityio {

namespace {

[[noreturn]] void storage_error(const std::filesystem::path& path, const std::string& what) {
  throw Error(Errc::storage_failure, path.string() + ": " + what + ": " + std::strerror(errno));
}

}  // namespace

LogSplit split_log(std::string_view bytes) {
  LogSplit out;
  std::size_t start = 0;
  while (start < bytes.size()) {
    const std::size_t nl = bytes.find('\n', start);
    if (nl == std::string_view::npos) {
      out.tail = std::string(bytes.substr(start));
      break;
    }
    out.records.emplace_back(bytes.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

bool is_incomplete_record(std::string_view tail) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (char c : tail) {
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth <= 0) return false;
    }
  }
  return !tail.empty() && tail.front() == '{';
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::storage_failure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

LoadedLog load_log(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return parse_log(read_file(path));
}

LoadedLog parse_log(std::string_view bytes) {
  LoadedLog out;
  LogSplit split = split_log(bytes);
  out.records = std::move(split.records);
  out.file_bytes = bytes.size();
  out.valid_bytes = bytes.size() - (split.tail ? split.tail->size() : 0);
  if (split.tail) {
    if (is_incomplete_record(*split.tail)) {
      out.discarded_tail = true;
    } else {
      out.records.push_back(std::move(*split.tail));
    }
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) storage_error(tmp, "cannot create");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) storage_error(tmp, "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::storage_failure, "rename " + tmp.string() + ": " + ec.message());
}

void rewrite_log(const std::filesystem::path& path, const std::vector<std::string>& records) {
  std::string contents;
  for (const std::string& r : records) {
    contents += r;
    contents += '\n';
  }
  write_file_atomic(path, contents);
}

AppendLog::AppendLog(const std::filesystem::path& path, bool sync) : sync_(sync), path_(path) {
  fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) storage_error(path, "cannot open for append");
}

AppendLog::~AppendLog() {
  if (fd_ >= 0) ::close(fd_);
}

AppendLog::AppendLog(AppendLog&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), sync_(other.sync_), path_(std::move(other.path_)) {}

AppendLog& AppendLog::operator=(AppendLog&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    sync_ = other.sync_;
    path_ = std::move(other.path_);
  }
  return *this;
}

void AppendLog::append(std::string_view record) {
  if (fd_ < 0) throw Error(Errc::storage_failure, "log is not open");
  std::string line;
  line.reserve(record.size() + 1);
  line.append(record);
  line.push_back('\n');
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      storage_error(path_, "append failed");
    }
    written += static_cast<std::size_t>(n);
  }
  if (sync_ && ::fdatasync(fd_) != 0) storage_error(path_, "fdatasync failed");
}

}  // namespace cityio
