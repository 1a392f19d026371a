// Copyright 2026 The polytod Authors.
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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <regex>
#include <thread>

#include "json.hpp"
#include "polytod/errors.hpp"
#include "polytod/provider.hpp"

namespace polytod {

using nlohmann::json;

HttpBackend::HttpBackend(HttpOptions opts) : opts_(std::move(opts)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(opts_.base_url, m, kUrl)) {
    throw ConfigError("invalid provider base URL '" + opts_.base_url + "'");
  }
  scheme_host_port_ = m[1];
  path_prefix_ = m[2];
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (opts_.max_attempts < 1) opts_.max_attempts = 1;
}

std::string HttpBackend::complete(const CompletionRequest& req) {
  json body = {
      {"model", req.model_id},
      {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
      {"temperature", req.decoding.temperature_milli / 1000.0},
      {"max_tokens", req.decoding.max_output_tokens},
  };
  const std::string payload = body.dump(-1, ' ', false, json::error_handler_t::replace);
  httplib::Headers headers;
  if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);

  std::string last_error;
  auto backoff = opts_.initial_backoff;
  for (int attempt = 1; attempt <= opts_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(opts_.timeout);
    client.set_read_timeout(opts_.timeout);
    client.set_write_timeout(opts_.timeout);
    auto res = client.Post(path_prefix_ + "/chat/completions", headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    if (res->status != 200) {
      throw ProviderError("HTTP " + std::to_string(res->status) + " from " + scheme_host_port_ + ": " +
                          res->body);
    }
    try {
      const json doc = json::parse(res->body);
      const json& content = doc.at("choices").at(0).at("message").at("content");
      return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const json::exception& e) {
      throw ProviderError(std::string("malformed completion response: ") + e.what());
    }
  }
  throw ProviderError("giving up after " + std::to_string(opts_.max_attempts) + " attempts; " + last_error);
}

}  // namespace polytod
