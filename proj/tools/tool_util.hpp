#pragma once

#include <csignal>
#include <stdexcept>
#include <string>
#include <utility>

#include <CLI11.hpp>

namespace tools {

// Exit codes shared by the command-line tools.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kIntegrity = 2;
inline constexpr int kFailure = 3;

// "host:port" or ":port" or "port".
inline std::pair<std::string, int> parse_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  std::string host = colon == std::string::npos ? "127.0.0.1" : addr.substr(0, colon);
  const std::string port = colon == std::string::npos ? addr : addr.substr(colon + 1);
  if (host.empty()) host = "0.0.0.0";
  std::size_t used = 0;
  int p = -1;
  try {
    p = std::stoi(port, &used);
  } catch (const std::exception&) {
  }
  if (used != port.size() || p < 0 || p > 65535) throw CLI::ValidationError("address", "bad port in '" + addr + "'");
  return {host, p};
}

// Blocks SIGINT/SIGTERM for every thread started afterwards; wait_for_signal()
// then picks them up synchronously.
inline sigset_t block_stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

inline int wait_for_signal(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
  return sig;
}

}  // namespace tools
