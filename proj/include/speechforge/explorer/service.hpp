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

#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "speechforge/explorer/index.hpp"

namespace speechforge::explorer {

struct Request {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> params;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

using IndexLoader = std::function<DatasetIndex()>;

// Transport-free request handler. The index is swapped whole on reload;
// each request works on the snapshot it started with.
class Service {
 public:
  // Loads the first index immediately; loader errors propagate.
  explicit Service(IndexLoader loader, std::filesystem::path ui_dir = {});

  Response handle(const Request& request);
  void reload();
  std::shared_ptr<const DatasetIndex> snapshot() const;

 private:
  Response route(const DatasetIndex& index, const Request& request);
  Response static_file(const std::string& path) const;

  IndexLoader loader_;
  std::filesystem::path ui_dir_;
  mutable std::mutex mutex_;
  std::shared_ptr<const DatasetIndex> index_;
};

// Parses "field:op:value,field:op:value".
std::vector<dataset::FilterRule> parse_filter_list(const std::string& text);

// Splits "host:port"; a bare port binds 127.0.0.1.
std::pair<std::string, int> parse_bind(const std::string& bind);

// Minimal HTTP front end over Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Throws ExplorerError(kBindFailed).
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void start();   // listen() on a background thread
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace speechforge::explorer
