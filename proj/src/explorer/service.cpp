// Copyright 2026 The speechforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "speechforge/explorer/service.hpp"

#include <sys/socket.h>

#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "httplib.h"

namespace speechforge::explorer {

namespace {

Response json_response(int status, const Json& body) {
  return {status, "application/json", body.dump(-1, ' ', false, Json::error_handler_t::replace)};
}

Response error_response(int status, std::string_view code, std::string_view message) {
  return json_response(status, {{"error", code}, {"message", message}});
}

int status_for(ExplorerErrc code) {
  switch (code) {
    case ExplorerErrc::kNotFound:
    case ExplorerErrc::kAudioMissing: return 404;
    case ExplorerErrc::kBindFailed: return 500;
    default: return 400;
  }
}

std::string_view code_name(ExplorerErrc code) {
  switch (code) {
    case ExplorerErrc::kUnknownField: return "UnknownField";
    case ExplorerErrc::kBadPage: return "BadPage";
    case ExplorerErrc::kBadRequest: return "BadRequest";
    case ExplorerErrc::kNotFound: return "NotFound";
    case ExplorerErrc::kAudioMissing: return "AudioMissing";
    case ExplorerErrc::kBindFailed: return "BindFailed";
  }
  return "Error";
}

std::optional<std::string> param(const Request& r, const std::string& key) {
  const auto it = r.params.find(key);
  if (it == r.params.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::size_t parse_count(const std::string& text, const char* name) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ExplorerError(ExplorerErrc::kBadPage, std::string(name) + " must be a non-negative integer");
  }
  return v;
}

bool parse_dir(const Request& r) {
  const auto dir = param(r, "dir").value_or("asc");
  if (dir == "asc") return false;
  if (dir == "desc") return true;
  throw ExplorerError(ExplorerErrc::kBadRequest, "dir must be asc or desc");
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

std::string_view mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

constexpr std::string_view kPlaceholder =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>speechforge explorer</title></head>"
    "<body><p>No UI bundle configured. The API is available under <code>/api/</code>.</p></body></html>";

}  // namespace

std::vector<dataset::FilterRule> parse_filter_list(const std::string& text) {
  std::vector<dataset::FilterRule> rules;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const auto piece = std::string_view(text).substr(start, comma - start);
    if (!piece.empty()) rules.push_back(dataset::FilterRule::parse(piece));
    start = comma + 1;
  }
  return rules;
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  const std::string host = colon == std::string::npos ? "127.0.0.1" : bind.substr(0, colon);
  const std::string port_text = colon == std::string::npos ? bind : bind.substr(colon + 1);
  int port = -1;
  const auto* end = port_text.data() + port_text.size();
  auto [ptr, ec] = std::from_chars(port_text.data(), end, port);
  if (ec != std::errc() || ptr != end || port < 0 || port > 65535 || host.empty()) {
    throw ExplorerError(ExplorerErrc::kBadRequest, "bind address must look like host:port, got '" + bind + "'");
  }
  return {host, port};
}

Service::Service(IndexLoader loader, std::filesystem::path ui_dir)
    : loader_(std::move(loader)), ui_dir_(std::move(ui_dir)) {
  index_ = std::make_shared<const DatasetIndex>(loader_());
}

std::shared_ptr<const DatasetIndex> Service::snapshot() const {
  std::lock_guard lock(mutex_);
  return index_;
}

void Service::reload() {
  auto fresh = std::make_shared<const DatasetIndex>(loader_());
  std::lock_guard lock(mutex_);
  index_ = std::move(fresh);
}

Response Service::handle(const Request& request) {
  const auto index = snapshot();
  try {
    return route(*index, request);
  } catch (const ExplorerError& e) {
    return error_response(status_for(e.code()), code_name(e.code()), e.what());
  } catch (const dataset::DatasetError& e) {
    return error_response(400, "BadRequest", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "InternalError", e.what());
  }
}

Response Service::route(const DatasetIndex& index, const Request& r) {
  const auto parts = split_path(r.path);
  if (parts.empty() || parts[0] != "api") {
    if (r.method != "GET") return error_response(405, "MethodNotAllowed", "only GET is served here");
    return static_file(r.path);
  }

  if (parts.size() == 2 && parts[1] == "reload") {
    if (r.method != "POST") return error_response(405, "MethodNotAllowed", "use POST");
    try {
      reload();
    } catch (const Error& e) {
      return error_response(500, "ReloadFailed", e.what());  // the old index stays live
    }
    return {204, "", ""};
  }
  if (r.method != "GET") return error_response(405, "MethodNotAllowed", "use GET");

  if (parts.size() == 2 && parts[1] == "stats") return json_response(200, index.stats_json());

  if (parts.size() == 2 && parts[1] == "words") {
    WordQuery q;
    q.sort = param(r, "sort").value_or(q.sort);
    q.descending = r.params.count("dir") ? parse_dir(r) : q.descending;
    if (auto p = param(r, "page")) q.page = parse_count(*p, "page");
    if (auto p = param(r, "page_size")) q.page_size = parse_count(*p, "page_size");
    return json_response(200, index.words_json(q));
  }

  if (parts.size() >= 2 && parts[1] == "samples") {
    if (parts.size() == 2) {
      SampleQuery q;
      if (auto p = param(r, "page")) q.page = parse_count(*p, "page");
      if (auto p = param(r, "page_size")) q.page_size = parse_count(*p, "page_size");
      q.sort = param(r, "sort").value_or("id");
      q.descending = parse_dir(r);
      if (auto f = param(r, "filter")) q.filters = parse_filter_list(*f);
      const auto page = index.query(q);
      Json items = Json::array();
      for (std::size_t id : page.ids) items.push_back(index.list_item(id));
      return json_response(200, {{"total", page.total}, {"items", std::move(items)}});
    }
    std::size_t id = 0;
    {
      const auto& t = parts[2];
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), id);
      if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw ExplorerError(ExplorerErrc::kNotFound, "no sample with id '" + t + "'");
      }
    }
    if (parts.size() == 3) return json_response(200, index.detail(id));
    if (parts.size() == 4 && parts[3] == "audio") return {200, "audio/wav", index.audio_bytes(id)};
    if (parts.size() == 4 && parts[3] == "views") {
      audio::ViewOptions options;
      if (auto p = param(r, "max_points")) {
        options.max_points = parse_count(*p, "max_points");
        if (options.max_points == 0 || options.max_points > 100000) {
          throw ExplorerError(ExplorerErrc::kBadRequest, "max_points must be in [1, 100000]");
        }
      }
      return json_response(200, views_json(index.views(id, options)));
    }
  }
  return error_response(404, "NotFound", "no route for " + r.path);
}

Response Service::static_file(const std::string& path) const {
  const auto rel = path == "/" || path.empty() ? std::string("index.html") : path.substr(1);
  if (ui_dir_.empty()) {
    if (rel == "index.html") return {200, "text/html; charset=utf-8", std::string(kPlaceholder)};
    return error_response(404, "NotFound", "no route for " + path);
  }
  const auto relative = std::filesystem::path(rel).lexically_normal();
  if (relative.is_absolute() || (!relative.empty() && *relative.begin() == "..")) {
    return error_response(404, "NotFound", "no route for " + path);
  }
  const auto file = ui_dir_ / relative;
  std::ifstream in(file, std::ios::binary);
  if (!in || std::filesystem::is_directory(file)) return error_response(404, "NotFound", "no route for " + path);
  return {200, std::string(mime_type(file)),
          std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>())};
}

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::thread thread;
  explicit Impl(Service& s) : service(s) {}
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  // Plain SO_REUSEADDR: the library default (SO_REUSEPORT) would let a second
  // server share a busy port instead of failing.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.params.emplace(k, v);
    const auto out = impl_->service.handle(r);
    res.status = out.status;
    if (out.status != 204) res.set_content(out.body, out.content_type);
  };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
  impl_->server.Put(".*", handler);
  impl_->server.Delete(".*", handler);
  impl_->server.Patch(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw ExplorerError(ExplorerErrc::kBindFailed, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw ExplorerError(ExplorerErrc::kBindFailed, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace speechforge::explorer
