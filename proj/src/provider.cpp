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

#include "polytod/provider.hpp"

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "polytod/errors.hpp"
#include "polytod/text.hpp"

namespace polytod {

using nlohmann::json;
namespace fs = std::filesystem;

CacheKey CacheKey::of(const CompletionRequest& req, const std::string& format_version) {
  std::string material;
  material += "format_version=" + format_version + '\0';
  material += "model_id=" + req.model_id + '\0';
  material += "temperature_milli=" + std::to_string(req.decoding.temperature_milli) + '\0';
  material += "max_output_tokens=" + std::to_string(req.decoding.max_output_tokens) + '\0';
  material += req.prompt;
  return {text::sha256_hex(material)};
}

std::string prompt_digest(const std::string& prompt) { return text::sha256_hex(prompt); }

// Mock ----------------------------------------------------------------------

MockScript MockScript::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open mock script " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw FormatError(path.string() + ": mock script must be an object");
  if (doc.value("format_version", 0) != kFormatVersion) {
    throw FormatError(path.string() + ": unsupported mock script format_version");
  }
  MockScript script;
  script.strict = doc.value("strict", true);
  for (const auto& e : doc.value("entries", json::array())) {
    if (!e.contains("response") || !e["response"].is_string()) {
      throw FormatError(path.string() + ": every entry needs a string 'response'");
    }
    std::string digest = e.value("digest", std::string());
    if (e.contains("prompt")) {
      const std::string prompt = e["prompt"].get<std::string>();
      const std::string computed = prompt_digest(prompt);
      if (!digest.empty() && digest != computed) {
        throw FormatError(path.string() + ": entry " + digest + " echoes a prompt hashing to " + computed);
      }
      digest = computed;
      script.prompts[digest] = prompt;
    }
    if (digest.empty()) throw FormatError(path.string() + ": entry without 'digest' or 'prompt'");
    script.entries[digest] = e["response"].get<std::string>();
  }
  for (const auto& r : doc.value("fallback", json::array())) {
    script.fallback_queue.push_back(r.get<std::string>());
  }
  return script;
}

void MockScript::save(const fs::path& path) const {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["strict"] = strict;
  doc["entries"] = json::array();
  for (const auto& [digest, response] : entries) {
    json e = {{"digest", digest}, {"response", response}};
    if (auto it = prompts.find(digest); it != prompts.end()) e["prompt"] = it->second;
    doc["entries"].push_back(std::move(e));
  }
  doc["fallback"] = json(std::vector<std::string>(fallback_queue.begin(), fallback_queue.end()));
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write mock script " + path.string());
  out << doc.dump(1, ' ', false) << "\n";
}

void MockScript::add(const std::string& prompt, std::string response) {
  const std::string digest = prompt_digest(prompt);
  entries[digest] = std::move(response);
  prompts[digest] = prompt;
}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {}

void MockBackend::record_misses_to(fs::path path) { miss_log_ = std::move(path); }

std::string MockBackend::complete(const CompletionRequest& req) {
  const std::string digest = prompt_digest(req.prompt);
  if (auto it = script_.entries.find(digest); it != script_.entries.end()) return it->second;
  std::lock_guard lock(mu_);
  if (!script_.strict && !script_.fallback_queue.empty()) {
    std::string r = std::move(script_.fallback_queue.front());
    script_.fallback_queue.pop_front();
    return r;
  }
  ++misses_;
  if (miss_log_) {
    std::ofstream log(*miss_log_, std::ios::app);
    log << json{{"digest", digest}, {"prompt", req.prompt}}.dump(-1, ' ', false) << "\n";
    return {};
  }
  throw ScriptMissError(digest, req.prompt);
}

// Cache ---------------------------------------------------------------------

ResponseCache::ResponseCache(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) {
    throw CacheError("cannot create cache directory " + root_.string() + ": " + ec.message());
  }
  if (::access(root_.c_str(), W_OK) != 0) {
    throw CacheError("cache directory " + root_.string() + " is not writable");
  }
}

fs::path ResponseCache::entry_path(const CacheKey& key) const {
  return root_ / key.digest.substr(0, 2) / key.digest.substr(2, 2) / (key.digest + ".json");
}

std::optional<std::string> ResponseCache::get(const CacheKey& key) const {
  std::ifstream in(entry_path(key));
  if (!in) return std::nullopt;
  try {
    json doc = json::parse(in);
    return doc.at("response").get<std::string>();
  } catch (const json::exception&) {
    return std::nullopt;  // torn or foreign file: treat as a miss
  }
}

void ResponseCache::put(const CacheKey& key, const std::string& model_id,
                        const std::string& response) {
  static std::atomic<std::uint64_t> counter{0};
  const fs::path target = entry_path(key);
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) throw CacheError("cannot create " + target.parent_path().string() + ": " + ec.message());
  std::ostringstream tmp_name;
  tmp_name << key.digest << ".tmp-" << ::getpid() << "-" << counter++ << "-"
           << std::hash<std::thread::id>{}(std::this_thread::get_id());
  const fs::path tmp = target.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CacheError("cannot write cache entry " + tmp.string());
    out << json{{"digest", key.digest}, {"model_id", model_id}, {"response", response}}.dump(
        -1, ' ', false, json::error_handler_t::replace);
    if (!out.flush()) throw CacheError("cannot write cache entry " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw CacheError("cannot publish cache entry " + target.string() + ": " + ec.message());
  }
}

CacheStats ResponseCache::scan() const {
  CacheStats stats;
  for (const auto& e : fs::recursive_directory_iterator(root_)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      ++stats.entries;
      stats.bytes += e.file_size();
    }
  }
  return stats;
}

std::size_t ResponseCache::clear(const std::optional<std::string>& model_id) {
  std::vector<fs::path> doomed;
  for (const auto& e : fs::recursive_directory_iterator(root_)) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    if (model_id) {
      std::ifstream in(e.path());
      try {
        if (json::parse(in).value("model_id", std::string()) != *model_id) continue;
      } catch (const json::exception&) {
        continue;
      }
    }
    doomed.push_back(e.path());
  }
  for (const auto& p : doomed) {
    std::error_code ec;
    fs::remove(p, ec);
    if (ec) throw CacheError("cannot remove " + p.string() + ": " + ec.message());
  }
  return doomed.size();
}

// Client --------------------------------------------------------------------

LlmClient::LlmClient(std::shared_ptr<ChatBackend> backend, std::optional<ResponseCache> cache,
                     std::string format_version)
    : backend_(std::move(backend)), cache_(std::move(cache)), format_version_(std::move(format_version)) {}

std::string LlmClient::complete(const CompletionRequest& req) {
  if (!cache_) {
    ++backend_calls_;
    return backend_->complete(req);
  }
  const CacheKey key = CacheKey::of(req, format_version_);
  if (auto hit = cache_->get(key)) {
    ++hits_;
    return *hit;
  }
  ++misses_;
  ++backend_calls_;
  std::string response = backend_->complete(req);
  cache_->put(key, req.model_id, response);
  return response;
}

CacheStats LlmClient::cache_stats() const {
  CacheStats stats = cache_ ? cache_->scan() : CacheStats{};
  stats.hits = hits_.load();
  stats.misses = misses_.load();
  return stats;
}

std::size_t LlmClient::cache_clear(const std::optional<std::string>& model_id) {
  return cache_ ? cache_->clear(model_id) : 0;
}

// HTTP backend options (the backend itself lives in http_backend.cpp) --------

HttpOptions HttpOptions::from_env() {
  HttpOptions opts;
  if (const char* base = std::getenv("POLYTOD_API_BASE"); base && *base) opts.base_url = base;
  if (const char* key = std::getenv("POLYTOD_API_KEY"); key && *key) {
    opts.api_key = key;
  } else if (const char* oai = std::getenv("OPENAI_API_KEY"); oai && *oai) {
    opts.api_key = oai;
  }
  return opts;
}

}  // namespace polytod
