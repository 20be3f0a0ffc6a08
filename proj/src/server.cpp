#include "cityio/server.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>

#include "cityio/codec.hpp"

namespace cityio {

namespace {

constexpr char kJson[] = "application/json";
constexpr std::size_t kMaxRange = 500;

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw Error(Errc::bad_request, std::string(what) + " must be a non-negative integer");
  }
  return value;
}

Json body_json(const httplib::Request& req) {
  try {
    return parse_json(req.body);
  } catch (const Error& e) {
    throw Error(Errc::bad_request, std::string("request body: ") + e.what());
  }
}

// Wraps a decoder so structural problems in a request body come back as 400.
template <typename Fn>
auto decode_body(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == Errc::malformed_encoding) throw Error(Errc::bad_request, e.what());
    throw;
  }
}

void reply(httplib::Response& res, int status, std::string body) {
  res.status = status;
  res.set_content(std::move(body), kJson);
}

void reply_error(httplib::Response& res, Errc code, std::string_view message) {
  reply(res, http_status(code), error_body(code, message));
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

Handler guarded(Handler fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ConflictError& e) {
      reply(res, 409,
            ObjectWriter()
                .field("error", std::string(to_string(Errc::conflict)))
                .field("message", e.what())
                .raw("head", encode_commit(*e.head()))
                .finish());
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      reply(res, 500, ObjectWriter().field("error", "internal").field("message", e.what()).finish());
    }
  };
}

std::string commit_list(const std::vector<CommitPtr>& commits) {
  std::string out = "{\"commits\":[";
  for (std::size_t i = 0; i < commits.size(); ++i) {
    if (i) out += ',';
    out += encode_commit(*commits[i]);
  }
  out += "]}";
  return out;
}

// True when an If-None-Match value names `version`. Accepts quoted, weak
// and bare tags, comma-separated.
bool matches_tag(std::string_view header, std::uint64_t version) {
  const std::string want = std::to_string(version);
  while (!header.empty()) {
    const std::size_t comma = header.find(',');
    std::string_view tag = header.substr(0, comma);
    header = comma == std::string_view::npos ? std::string_view{} : header.substr(comma + 1);
    while (!tag.empty() && tag.front() == ' ') tag.remove_prefix(1);
    while (!tag.empty() && tag.back() == ' ') tag.remove_suffix(1);
    if (tag == "*") return true;
    if (tag.starts_with("W/")) tag.remove_prefix(2);
    if (tag.size() >= 2 && tag.front() == '"' && tag.back() == '"') tag = tag.substr(1, tag.size() - 2);
    if (tag == want) return true;
  }
  return false;
}

std::string sse_frame(std::uint64_t id, std::string_view event, std::string_view data) {
  std::string out;
  out.reserve(data.size() + 48);
  out += "id: ";
  out += std::to_string(id);
  out += "\nevent: ";
  out += event;
  out += "\ndata: ";
  out += data;
  out += "\n\n";
  return out;
}

std::string worker_token(const httplib::Request& req) {
  if (req.has_header("X-Worker-Token")) return req.get_header_value("X-Worker-Token");
  const std::string auth = req.get_header_value("Authorization");
  if (auth.starts_with("Bearer ")) return auth.substr(7);
  return {};
}

GridPost grid_post_from_json(const Json& body, const TableSpec& spec) {
  using namespace field;
  expect_keys(body, {"grid", "edits", "base_version", "author", "source"}, "grid post");
  GridPost post;
  if (const Json* g = optional(body, "grid")) post.grid = grid_from_json(*g, spec);
  if (const Json* e = optional(body, "edits")) post.edits = edits_from_json(*e);
  if (!post.grid && !optional(body, "edits")) throw Error(Errc::bad_request, "body needs a grid or an edit list");
  if (post.grid && optional(body, "edits")) throw Error(Errc::bad_request, "send either a grid or an edit list");
  if (const Json* b = optional(body, "base_version")) post.base_version = as_uint(*b, "base_version");
  if (const Json* a = optional(body, "author")) post.author = as_string(*a, "author");
  post.source = post.grid ? Source::table : Source::ui;
  if (const Json* s = optional(body, "source")) {
    auto parsed = parse_source(as_string(*s, "source"));
    if (!parsed) throw Error(Errc::bad_request, "unknown source");
    post.source = *parsed;
  }
  return post;
}

}  // namespace

int http_status(Errc code) {
  switch (code) {
    case Errc::unknown_table:
    case Errc::unknown_version:
    case Errc::unknown_comment:
    case Errc::unknown_layer:
      return 404;
    case Errc::conflict:
    case Errc::stale_layer:
    case Errc::table_exists:
      return 409;
    case Errc::unauthorized:
      return 401;
    case Errc::storage_failure:
      return 503;
    case Errc::chain_broken:
    case Errc::empty_history:
      return 500;
    default:
      return 400;
  }
}

std::string error_body(Errc code, std::string_view message) {
  return ObjectWriter().field("error", std::string(to_string(code))).field("message", std::string(message)).finish();
}

ApiServer::ApiServer(Hub& hub, ServerOptions options)
    : hub_(hub), options_(std::move(options)), svr_(std::make_unique<httplib::Server>()) {
  const std::size_t threads = std::max<std::size_t>(options_.threads, 4);
  svr_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  // Idle keep-alive connections also bound how long stop() takes.
  svr_->set_keep_alive_timeout(1);
  svr_->set_keep_alive_max_count(10000);
  svr_->set_tcp_nodelay(true);
  svr_->set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  install_routes();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start() {
  if (options_.port == 0) {
    port_ = svr_->bind_to_any_port(options_.host);
  } else {
    port_ = svr_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
  }
  if (port_ <= 0) {
    throw Error(Errc::bad_request, "cannot listen on " + options_.host + ":" + std::to_string(options_.port));
  }
  listener_ = std::thread([this] { svr_->listen_after_bind(); });
  return port_;
}

void ApiServer::stop() {
  hub_.shutdown();
  svr_->stop();
  if (listener_.joinable()) listener_.join();
}

void ApiServer::install_routes() {
  httplib::Server& s = *svr_;
  Hub& hub = hub_;

  s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, If-None-Match, Last-Event-ID, X-Worker-Token");
    res.status = 204;
  });

  s.Get("/api/tables", guarded([&hub](const httplib::Request&, httplib::Response& res) {
          std::string out = "{\"tables\":[";
          bool first = true;
          for (const TableSummary& t : hub.list_tables()) {
            if (!first) out += ',';
            first = false;
            out += ObjectWriter()
                       .field("name", t.name)
                       .field("head_version", t.head_version)
                       .raw("spec", canonical_dump(spec_to_json(t.spec)))
                       .finish();
          }
          out += "]}";
          reply(res, 200, std::move(out));
        }));

  s.Post("/api/tables", guarded([&hub](const httplib::Request& req, httplib::Response& res) {
           Json body = body_json(req);
           TableSpec spec = spec_from_json(body);
           CommitPtr genesis = hub.create_table(std::move(spec));
           reply(res, 201, encode_commit(*genesis));
         }));

  s.Get(R"(/api/tables/([^/]+)/head)", guarded([&hub](const httplib::Request& req, httplib::Response& res) {
          CommitPtr head = hub.table(req.matches[1].str())->head();
          res.set_header("ETag", "\"" + std::to_string(head->version) + "\"");
          if (req.has_header("If-None-Match") && matches_tag(req.get_header_value("If-None-Match"), head->version)) {
            res.status = 304;
            return;
          }
          reply(res, 200, encode_commit(*head));
        }));

  s.Post(R"(/api/tables/([^/]+)/grid)", guarded([&hub](const httplib::Request& req, httplib::Response& res) {
           auto table = hub.table(req.matches[1].str());
           Json body = body_json(req);
           GridPost post = decode_body([&] { return grid_post_from_json(body, table->spec()); });
           PostOutcome outcome = table->post(std::move(post));
           res.set_header("ETag", "\"" + std::to_string(outcome.commit->version) + "\"");
           reply(res, 200, encode_commit(*outcome.commit));
         }));

  s.Get(R"(/api/tables/([^/]+)/commits/(\d+))", guarded([&hub](const httplib::Request& req, httplib::Response& res) {
          auto table = hub.table(req.matches[1].str());
          reply(res, 200, encode_commit(*table->commit_at(parse_u64(req.matches[2].str(), "version"))));
        }));

  s.Get(R"(/api/tables/([^/]+)/commits)", guarded([&hub](const httplib::Request& req, httplib::Response& res) {
          auto table = hub.table(req.matches[1].str());
          if (!req.has_param("from") || !req.has_param("to")) {
            throw Error(Errc::bad_request, "from and to are required");
          }
          const std::uint64_t from = parse_u64(req.get_param_value("from"), "from");
          const std::uint64_t to = parse_u64(req.get_param_value("to"), "to");
          if (from == 0 || from > to) throw Error(Errc::bad_request, "range needs 1 <= from <= to");
          if (to - from + 1 > kMaxRange) {
            throw Error(Errc::range_too_large, "at most " + std::to_string(kMaxRange) + " commits per request");
          }
          reply(res, 200, commit_list(table->commit_range(from, to)));
        }));

  s.Get(R"(/api/tables/([^/]+)/stream)", guarded([this, &hub](const httplib::Request& req, httplib::Response& res) {
          auto table = hub.table(req.matches[1].str());
          std::optional<std::uint64_t> since;
          if (req.has_param("since")) {
            since = parse_u64(req.get_param_value("since"), "since");
          } else if (req.has_header("Last-Event-ID")) {
            since = parse_u64(req.get_header_value("Last-Event-ID"), "Last-Event-ID");
          }
          std::string preamble;
          std::uint64_t cursor;
          if (since) {
            if (*since > table->last_seq()) {
              throw Error(Errc::bad_request, "since " + std::to_string(*since) + " is beyond the last event " +
                                                 std::to_string(table->last_seq()));
            }
            cursor = *since;
          } else {
            StreamSnapshot snap = table->snapshot();
            cursor = snap.seq;
            preamble = sse_frame(
                cursor, "snapshot",
                ObjectWriter().field("seq", snap.seq).raw("head", encode_commit(*snap.head)).finish());
          }
          res.set_header("Cache-Control", "no-cache");
          res.set_header("X-Accel-Buffering", "no");
          const auto heartbeat = options_.heartbeat;
          const std::size_t max_lag = options_.max_lag;
          res.set_chunked_content_provider(
              "text/event-stream",
              [table, cursor, preamble = std::move(preamble), heartbeat, max_lag, &hub](
                  std::size_t, httplib::DataSink& sink) mutable {
                if (!preamble.empty() && !sink.write(preamble.data(), preamble.size())) return false;
                preamble.clear();
                bool caught_up = false;
                while (!hub.stopping()) {
                  auto batch = table->wait_events(cursor, heartbeat);
                  if (hub.stopping()) break;
                  if (batch.empty()) {
                    static constexpr std::string_view kBeat = "event: heartbeat\ndata: {}\n\n";
                    if (!sink.write(kBeat.data(), kBeat.size())) return false;
                    caught_up = true;
                    continue;
                  }
                  std::string chunk;
                  for (const EventPtr& e : batch) chunk += sse_frame(e->seq, to_string(e->kind), e->data);
                  if (!sink.write(chunk.data(), chunk.size())) return false;
                  cursor = batch.back()->seq;
                  const std::uint64_t last = table->last_seq();
                  if (last == cursor) {
                    caught_up = true;
                  } else if (caught_up && last - cursor > max_lag) {
                    // Too slow to keep up with the live tail; the client resumes with since.
                    spdlog::warn("dropping stream subscriber {} events behind", last - cursor);
                    return false;
                  }
                }
                sink.done();
                return true;
              });
        }));

  s.Post(R"(/api/tables/([^/]+)/layers)", guarded([&hub](const httplib::Request& req, httplib::Response& res) {
           hub.check_worker_token(worker_token(req));
           auto table = hub.table(req.matches[1].str());
           Json body = body_json(req);
           Layer layer = decode_body([&] { return layer_from_json(body); });
           const std::string name = layer.name;
           const std::uint64_t version = layer.produced_from_version;
           table->post_layer(std::move(layer));
           reply(res, 200, ObjectWriter().field("name", name).field("produced_from_version", version).finish());
         }));

  s.Get(R"(/api/tables/([^/]+)/layers/([^/]+))", guarded([&hub](const httplib::Request& req, httplib::Response& res) {
          auto layer = hub.table(req.matches[1].str())->layer(req.matches[2].str());
          if (!layer) throw Error(Errc::unknown_layer, "no layer named '" + req.matches[2].str() + "'");
          reply(res, 200, encode_layer(*layer));
        }));

  s.Post(R"(/api/tables/([^/]+)/comments)", guarded([&hub](const httplib::Request& req, httplib::Response& res) {
           auto table = hub.table(req.matches[1].str());
           Json body = body_json(req);
           auto [anchor, text, author] = decode_body([&] {
             using namespace field;
             expect_keys(body, {"anchor", "text", "author"}, "comment");
             return std::tuple{anchor_from_json(require(body, "anchor")), as_string(require(body, "text"), "text"),
                               as_string(require(body, "author"), "author")};
           });
           reply(res, 201, encode_comment(table->add_comment(std::move(anchor), std::move(text), std::move(author))));
         }));

  s.Post(R"(/api/tables/([^/]+)/comments/(\d+)/reactions)",
         guarded([&hub](const httplib::Request& req, httplib::Response& res) {
           auto table = hub.table(req.matches[1].str());
           const std::uint64_t id = parse_u64(req.matches[2].str(), "comment id");
           Json body = body_json(req);
           std::string author = decode_body([&] {
             using namespace field;
             expect_keys(body, {"author"}, "reaction");
             return as_string(require(body, "author"), "author");
           });
           const std::size_t likes = table->react(id, std::move(author));
           reply(res, 200, ObjectWriter().field("comment_id", id).field("like_count", likes).finish());
         }));

  s.Get(R"(/api/tables/([^/]+)/comments/heatmap)", guarded([&hub](const httplib::Request& req, httplib::Response& res) {
          Heatmap h = hub.table(req.matches[1].str())->heatmap();
          res.set_header("X-Out-Of-Extent", std::to_string(h.out_of_extent));
          reply(res, 200, encode_layer(h.layer));
        }));

  s.Get(R"(/api/tables/([^/]+)/comments)", guarded([&hub](const httplib::Request& req, httplib::Response& res) {
          auto table = hub.table(req.matches[1].str());
          std::size_t k = table->comment_count();
          if (req.has_param("top")) k = static_cast<std::size_t>(parse_u64(req.get_param_value("top"), "top"));
          std::string out = "{\"comments\":[";
          bool first = true;
          for (const RankedComment& rc : table->top_comments(k)) {
            if (!first) out += ',';
            first = false;
            out += ObjectWriter().raw("comment", encode_comment(rc.comment)).field("like_count", rc.like_count).finish();
          }
          out += "]}";
          reply(res, 200, std::move(out));
        }));

  if (!options_.web_root.empty()) s.set_mount_point("/", options_.web_root.string());
}

}  // namespace cityio
