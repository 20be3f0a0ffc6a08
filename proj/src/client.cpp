#include "cityio/client.hpp"

#include <httplib.h>

#include <charconv>

#include "cityio/codec.hpp"

namespace cityio {

namespace {

constexpr char kJson[] = "application/json";

Json parse_reply(const std::string& body) {
  try {
    return parse_json(body);
  } catch (const Error& e) {
    throw ApiError(0, std::string("unparseable response: ") + e.what());
  }
}

void check(const httplib::Result& res, std::initializer_list<int> ok) {
  if (!res) throw ApiError(0, "request failed: " + httplib::to_string(res.error()));
  for (int s : ok) {
    if (res->status == s) return;
  }
  throw ApiError(res->status, res->body);
}

std::string path(const std::string& table, std::string_view rest = {}) {
  return "/api/tables/" + table + std::string(rest);
}

}  // namespace

ApiError::ApiError(int status, std::string body)
    : std::runtime_error("HTTP " + std::to_string(status) + ": " + body), status_(status), body_(std::move(body)) {}

std::string ApiError::code() const {
  try {
    Json j = parse_json(body_);
    if (j.is_object() && j.contains("error") && j["error"].is_string()) return j["error"].get<std::string>();
  } catch (const Error&) {
  }
  return {};
}

void SseParser::feed(std::string_view bytes, const std::function<void(SseEvent)>& on_event) {
  buffer_.append(bytes);
  std::size_t start = 0;
  while (true) {
    const std::size_t nl = buffer_.find('\n', start);
    if (nl == std::string::npos) break;
    std::string_view l(buffer_.data() + start, nl - start);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    line(l, on_event);
    start = nl + 1;
  }
  buffer_.erase(0, start);
}

void SseParser::line(std::string_view l, const std::function<void(SseEvent)>& on_event) {
  if (l.empty()) {
    if (has_data_ || !pending_.event.empty()) on_event(std::move(pending_));
    pending_ = SseEvent{};
    has_data_ = false;
    return;
  }
  if (l.front() == ':') return;
  const std::size_t colon = l.find(':');
  std::string_view name = l.substr(0, colon);
  std::string_view value = colon == std::string_view::npos ? std::string_view{} : l.substr(colon + 1);
  if (!value.empty() && value.front() == ' ') value.remove_prefix(1);
  if (name == "data") {
    if (has_data_) pending_.data += '\n';
    pending_.data.append(value);
    has_data_ = true;
  } else if (name == "event") {
    pending_.event = std::string(value);
  } else if (name == "id") {
    std::uint64_t id = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), id);
    if (ec == std::errc{} && ptr == value.data() + value.size()) pending_.id = id;
  }
}

std::string grid_post_body(const GridPost& post) {
  ObjectWriter w;
  if (post.grid) w.raw("grid", canonical_encode(*post.grid));
  if (!post.grid) {
    std::string edits = "[";
    for (std::size_t i = 0; i < post.edits.size(); ++i) {
      if (i) edits += ',';
      edits += ObjectWriter()
                   .field("index", post.edits[i].index)
                   .field("cell", cell_to_json(post.edits[i].cell))
                   .finish();
    }
    edits += ']';
    w.raw("edits", edits);
  }
  if (post.base_version) w.field("base_version", *post.base_version);
  w.field("author", post.author);
  w.field("source", std::string(to_string(post.source)));
  return w.finish();
}

ApiClient::ApiClient(const std::string& base_url) : http_(std::make_unique<httplib::Client>(base_url)) {
  http_->set_keep_alive(true);
  http_->set_tcp_nodelay(true);
  http_->set_connection_timeout(5);
  http_->set_read_timeout(60);
  http_->set_write_timeout(30);
}

ApiClient::~ApiClient() = default;

std::vector<TableSummary> ApiClient::list_tables() {
  auto res = http_->Get("/api/tables");
  check(res, {200});
  Json j = parse_reply(res->body);
  std::vector<TableSummary> out;
  std::lock_guard lock(specs_mu_);
  for (const Json& t : field::require(j, "tables")) {
    TableSummary s;
    s.name = field::as_string(field::require(t, "name"), "name");
    s.head_version = field::as_uint(field::require(t, "head_version"), "head_version");
    s.spec = spec_from_json(field::require(t, "spec"));
    specs_[s.name] = s.spec;
    out.push_back(std::move(s));
  }
  return out;
}

Commit ApiClient::create_table(const TableSpec& spec) {
  auto res = http_->Post("/api/tables", canonical_dump(spec_to_json(spec)), kJson);
  check(res, {201});
  {
    std::lock_guard lock(specs_mu_);
    specs_[spec.name] = spec;
  }
  return decode_commit(res->body, spec);
}

TableSpec ApiClient::spec(const std::string& table) {
  {
    std::lock_guard lock(specs_mu_);
    if (auto it = specs_.find(table); it != specs_.end()) return it->second;
  }
  list_tables();
  std::lock_guard lock(specs_mu_);
  auto it = specs_.find(table);
  if (it == specs_.end()) throw ApiError(404, ObjectWriter()
                                   .field("error", std::string(to_string(Errc::unknown_table)))
                                   .field("message", "unknown table '" + table + "'")
                                   .finish());
  return it->second;
}

HeadResult ApiClient::head(const std::string& table, std::optional<std::uint64_t> if_none_match) {
  httplib::Headers headers;
  if (if_none_match) headers.emplace("If-None-Match", "\"" + std::to_string(*if_none_match) + "\"");
  auto res = http_->Get(path(table, "/head"), headers);
  check(res, {200, 304});
  HeadResult out;
  out.status = res->status;
  if (res->status == 200) out.commit = decode_commit(res->body, spec(table));
  return out;
}

GridPostResult ApiClient::post_grid(const std::string& table, const GridPost& post) {
  auto res = http_->Post(path(table, "/grid"), grid_post_body(post), kJson);
  check(res, {200, 409});
  GridPostResult out;
  out.status = res->status;
  if (res->status == 200) {
    out.commit = decode_commit(res->body, spec(table));
  } else {
    Json j = parse_reply(res->body);
    if (!j.is_object() || !j.contains("head")) throw ApiError(res->status, res->body);
    out.commit = decode_commit(canonical_dump(j["head"]), spec(table));
  }
  return out;
}

Commit ApiClient::commit(const std::string& table, std::uint64_t version) {
  auto res = http_->Get(path(table, "/commits/" + std::to_string(version)));
  check(res, {200});
  return decode_commit(res->body, spec(table));
}

std::vector<Commit> ApiClient::commits(const std::string& table, std::uint64_t from, std::uint64_t to) {
  auto res = http_->Get(path(table, "/commits?from=" + std::to_string(from) + "&to=" + std::to_string(to)));
  check(res, {200});
  const TableSpec s = spec(table);
  std::vector<Commit> out;
  const Json j = parse_reply(res->body);
  for (const Json& c : field::require(j, "commits")) out.push_back(decode_commit(canonical_dump(c), s));
  return out;
}

void ApiClient::post_layer(const std::string& table, const Layer& layer, const std::string& token) {
  httplib::Headers headers{{"X-Worker-Token", token}};
  auto res = http_->Post(path(table, "/layers"), headers, encode_layer(layer), kJson);
  check(res, {200});
}

Layer ApiClient::layer(const std::string& table, const std::string& name) {
  auto res = http_->Get(path(table, "/layers/" + name));
  check(res, {200});
  return layer_from_json(parse_reply(res->body));
}

Comment ApiClient::add_comment(const std::string& table, const Anchor& anchor, const std::string& text,
                               const std::string& author) {
  const std::string body =
      ObjectWriter().field("anchor", anchor_to_json(anchor)).field("text", text).field("author", author).finish();
  auto res = http_->Post(path(table, "/comments"), body, kJson);
  check(res, {201});
  return comment_from_json(parse_reply(res->body));
}

std::size_t ApiClient::react(const std::string& table, std::uint64_t comment_id, const std::string& author) {
  auto res = http_->Post(path(table, "/comments/" + std::to_string(comment_id) + "/reactions"),
                         ObjectWriter().field("author", author).finish(), kJson);
  check(res, {200});
  const Json j = parse_reply(res->body);
  return field::as_uint(field::require(j, "like_count"), "like_count");
}

std::vector<RankedComment> ApiClient::top_comments(const std::string& table, std::optional<std::size_t> k) {
  auto res = http_->Get(path(table, k ? "/comments?top=" + std::to_string(*k) : "/comments"));
  check(res, {200});
  std::vector<RankedComment> out;
  const Json j = parse_reply(res->body);
  for (const Json& item : field::require(j, "comments")) {
    out.push_back({comment_from_json(field::require(item, "comment")),
                   static_cast<std::size_t>(field::as_uint(field::require(item, "like_count"), "like_count"))});
  }
  return out;
}

Heatmap ApiClient::heatmap(const std::string& table) {
  auto res = http_->Get(path(table, "/comments/heatmap"));
  check(res, {200});
  Heatmap h;
  h.layer = layer_from_json(parse_reply(res->body));
  const std::string extent = res->get_header_value("X-Out-Of-Extent");
  h.out_of_extent = extent.empty() ? 0 : std::stoull(extent);
  return h;
}

void ApiClient::stream(const std::string& table, std::optional<std::uint64_t> since,
                       const std::function<bool(const SseEvent&)>& on_event) {
  const std::string target = path(table, since ? "/stream?since=" + std::to_string(*since) : "/stream");
  SseParser parser;
  int status = 0;
  std::string error_body;
  bool stopped_by_callback = false;
  auto res = http_->Get(
      target,
      [&](const httplib::Response& r) {
        status = r.status;
        return true;
      },
      [&](const char* data, std::size_t len) {
        if (status != 200) {
          error_body.append(data, len);
          return true;
        }
        bool keep = true;
        parser.feed({data, len}, [&](SseEvent e) {
          if (keep && !on_event(e)) keep = false;
        });
        if (!keep) stopped_by_callback = true;
        return keep;
      });
  if (status != 0 && status != 200) throw ApiError(status, error_body);
  if (!res && !stopped_by_callback && res.error() != httplib::Error::Canceled && status == 0) {
    throw ApiError(0, "stream failed: " + httplib::to_string(res.error()));
  }
}

void ApiClient::stop() { http_->stop(); }

}  // namespace cityio
