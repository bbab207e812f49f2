// Copyright 2026 The Dilemma Harness Authors. All rights reserved.
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

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>

namespace dilemma::llm {

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::chrono::seconds timeout{120};
};

struct HttpResponse {
  int status = 0;  // 0: no HTTP response (timeout, refused connection, TLS failure)
  std::string body;
  std::string transport_error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

// Splits "https://host[:port]/path" into ("https://host[:port]", "/path").
inline std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public Transport {
 public:
  HttpResponse post(const HttpRequest& request) override {
    const auto [origin, path] = split_url(request.url);
    httplib::Client client(origin);
    client.set_connection_timeout(std::chrono::seconds(30));
    client.set_read_timeout(request.timeout);
    client.set_write_timeout(request.timeout);
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    auto result = client.Post(path, headers, request.body, "application/json");
    HttpResponse out;
    if (!result) {
      out.transport_error = httplib::to_string(result.error());
      return out;
    }
    out.status = result->status;
    out.body = result->body;
    return out;
  }
};

}  // namespace dilemma::llm
