#include <spdlog/spdlog.h>

#include <filesystem>
#include <iostream>

#include "cityio/client.hpp"
#include "cityio/demo.hpp"
#include "cityio/hub.hpp"
#include "cityio/ops.hpp"
#include "cityio/server.hpp"
#include "tool_util.hpp"

namespace fs = std::filesystem;
using namespace cityio;

namespace {

int run_serve(const std::string& addr, const fs::path& data_dir, const std::string& token, int heartbeat_ms,
              std::size_t threads, bool sync, const fs::path& web_root) {
  const sigset_t signals = tools::block_stop_signals();
  auto [host, port] = tools::parse_addr(addr);
  HubOptions hub_options;
  hub_options.data_dir = data_dir;
  hub_options.worker_token = token;
  hub_options.sync_writes = sync;
  Hub hub(hub_options);
  if (token.empty()) spdlog::warn("no worker token configured; layer writes are disabled");

  ServerOptions options;
  options.host = host;
  options.port = port;
  options.threads = threads;
  options.heartbeat = std::chrono::milliseconds(heartbeat_ms);
  options.web_root = web_root;
  ApiServer server(hub, options);
  const int bound = server.start();
  spdlog::info("serving {} table(s) from {} on {}:{}", hub.list_tables().size(), data_dir.string(), host, bound);
  const int sig = tools::wait_for_signal(signals);
  spdlog::info("signal {}, shutting down", sig);
  server.stop();
  return tools::kOk;
}

void print_report(const VerifyReport& r) {
  if (r.ok) {
    std::cout << r.file << ": ok, " << r.records << " records" << (r.torn_tail ? " (incomplete final record)" : "")
              << "\n";
  } else {
    std::cout << r.file << ": broken at record " << r.broken_at << ": " << r.reason << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cityio: collaborative urban grid server and tools"};
  app.require_subcommand(1);

  std::string server_url = "http://127.0.0.1:8080";
  fs::path data_dir = "data";

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string addr = "127.0.0.1:8080";
  std::string token;
  int heartbeat_ms = 10000;
  std::size_t threads = 64;
  bool sync = false;
  fs::path web_root;
  serve->add_option("--addr", addr, "Listen address host:port")->envname("SERVE_ADDR")->capture_default_str();
  serve->add_option("--data-dir", data_dir, "Table storage directory")->envname("DATA_DIR")->capture_default_str();
  serve->add_option("--worker-token", token, "Shared secret for layer writes")->envname("WORKER_TOKEN");
  serve->add_option("--heartbeat-ms", heartbeat_ms, "Idle stream heartbeat")->check(CLI::Range(100, 15000));
  serve->add_option("--threads", threads, "Connection threads")->check(CLI::Range(4, 4096));
  serve->add_flag("--sync", sync, "fdatasync every appended record");
  serve->add_option("--web-root", web_root, "Serve static files from this directory")->check(CLI::ExistingDirectory);

  auto* create = app.add_subcommand("create-table", "Create a table on a running server");
  TableSpec spec;
  spec.registry = default_registry();
  create->add_option("--server", server_url)->capture_default_str();
  create->add_option("name", spec.name)->required();
  create->add_option("--cols", spec.ncols)->required();
  create->add_option("--rows", spec.nrows)->required();
  create->add_option("--cell-size", spec.cell_size_m, "Meters")->required();
  create->add_option("--lat", spec.origin_lat)->required();
  create->add_option("--lon", spec.origin_lon)->required();
  create->add_option("--rotation", spec.rotation_deg, "Degrees counter-clockwise")->capture_default_str();
  create->add_option("--floor-height", spec.floor_height_m, "Meters")->capture_default_str();

  auto* exp = app.add_subcommand("export", "Write a table's commit history to a bundle file");
  std::string table;
  fs::path file;
  exp->add_option("--data-dir", data_dir)->envname("DATA_DIR")->capture_default_str();
  exp->add_option("table", table)->required();
  exp->add_option("out", file)->required();

  auto* imp = app.add_subcommand("import", "Create a table from a bundle file");
  imp->add_option("--data-dir", data_dir)->envname("DATA_DIR")->capture_default_str();
  imp->add_option("bundle", file)->required()->check(CLI::ExistingFile);

  auto* verify = app.add_subcommand("verify", "Check the integrity of a table or a log/bundle file");
  std::string target;
  verify->add_option("--data-dir", data_dir)->envname("DATA_DIR")->capture_default_str();
  verify->add_option("target", target, "Table name or file path")->required();

  auto* replay_cmd = app.add_subcommand("replay", "Rebuild a table from its logs and print the head");
  replay_cmd->add_option("--data-dir", data_dir)->envname("DATA_DIR")->capture_default_str();
  replay_cmd->add_option("table", table)->required();

  auto* seed = app.add_subcommand("seed-demo", "Populate a demo table through the API");
  std::uint64_t seed_value = 1;
  seed->add_option("--server", server_url)->capture_default_str();
  seed->add_option("--seed", seed_value)->capture_default_str();

  auto* bench = app.add_subcommand("bench-comments", "Post n comments and report timing");
  std::size_t n = 200;
  bench->add_option("--server", server_url)->capture_default_str();
  bench->add_option("-n,--count", n)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? tools::kOk : tools::kUsage;
  }

  try {
    if (*serve) return run_serve(addr, data_dir, token, heartbeat_ms, threads, sync, web_root);
    if (*create) {
      validate_spec(spec);
      ApiClient client(server_url);
      const Commit genesis = client.create_table(spec);
      std::cout << spec.name << " created, version " << genesis.version << "\n";
      return tools::kOk;
    }
    if (*exp) {
      const std::size_t records = export_table(data_dir, table, file);
      std::cout << records << " records written to " << file.string() << "\n";
      return tools::kOk;
    }
    if (*imp) {
      const std::size_t records = import_bundle(data_dir, file);
      std::cout << records << " records imported\n";
      return tools::kOk;
    }
    if (*verify) {
      std::vector<VerifyReport> reports;
      if (fs::is_regular_file(target)) {
        reports.push_back(verify_file(target));
      } else {
        reports = verify_table(data_dir, target);
      }
      bool ok = true;
      for (const VerifyReport& r : reports) {
        print_report(r);
        ok = ok && r.ok;
      }
      return ok ? tools::kOk : tools::kIntegrity;
    }
    if (*replay_cmd) {
      const ReplaySummary s = replay_table(data_dir, table);
      std::cout << "table " << s.table << "\nhead_version " << s.head_version << "\ncommit_hash "
                << s.head_commit_hash.hex() << "\ngrid_hash " << s.head_grid_hash.hex() << "\ncomments " << s.comments
                << "\nreactions " << s.reactions << "\n";
      return tools::kOk;
    }
    if (*seed) {
      const SeedResult r = seed_demo(server_url, seed_value);
      std::cout << r.table << "\nhead_version " << r.head_version << "\ngrid_hash " << r.head_grid_hash.hex()
                << "\ncomments " << r.comments << "\ntop_comment " << r.top_comment_id << " (" << r.top_comment_likes
                << " likes)\n";
      return tools::kOk;
    }
    if (*bench) {
      const BenchResult r = bench_comments(server_url, n);
      std::cout << r.table << ": " << r.acked << "/" << n << " acknowledged in " << r.elapsed.count() << " s"
                << (r.ids_dense ? "" : ", ids NOT dense") << "\n";
      return r.ids_dense ? tools::kOk : tools::kIntegrity;
    }
  } catch (const CorruptTableError& e) {
    std::cerr << "integrity failure: " << e.what() << "\n";
    return tools::kIntegrity;
  } catch (const ChainBrokenError& e) {
    std::cerr << "integrity failure at record " << e.record() << ": " << e.reason() << "\n";
    return tools::kIntegrity;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::chain_broken ? tools::kIntegrity : tools::kFailure;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return tools::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tools::kFailure;
  }
  return tools::kUsage;
}
