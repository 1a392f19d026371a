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

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace polytod {

struct Decoding {
  /// Sampling temperature in thousandths. 0 is greedy decoding.
  int temperature_milli = 0;
  int max_output_tokens = 256;
};

struct CompletionRequest {
  std::string model_id;
  std::string prompt;
  Decoding decoding;
};

/// Hex SHA-256 over (format_version, model_id, decoding, prompt bytes).
struct CacheKey {
  std::string digest;

  static CacheKey of(const CompletionRequest& req, const std::string& format_version);
  bool operator==(const CacheKey&) const = default;
};

/// Digest a mock script uses to key a prompt: hex SHA-256 of the prompt bytes.
std::string prompt_digest(const std::string& prompt);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const CompletionRequest& req) = 0;
};

// Mock backend --------------------------------------------------------------

struct MockScript {
  static constexpr int kFormatVersion = 1;

  std::map<std::string, std::string> entries;  // prompt digest -> response
  std::map<std::string, std::string> prompts;  // digest -> prompt echo, optional
  std::deque<std::string> fallback_queue;
  bool strict = true;

  /// Throws FormatError on malformed files.
  static MockScript load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  void add(const std::string& prompt, std::string response);
};

class MockBackend : public ChatBackend {
 public:
  explicit MockBackend(MockScript script);

  /// Scripted entry if present; otherwise the next fallback response when
  /// not strict; otherwise ScriptMissError (or, when recording, an empty
  /// response plus a line appended to the miss log).
  std::string complete(const CompletionRequest& req) override;

  /// Appends every miss as a JSON line {digest, prompt} to `path` and serves
  /// an empty response instead of throwing. Used to author fixtures.
  void record_misses_to(std::filesystem::path path);

  std::uint64_t misses() const { return misses_.load(); }

 private:
  MockScript script_;
  std::mutex mu_;
  std::optional<std::filesystem::path> miss_log_;
  std::atomic<std::uint64_t> misses_{0};
};

// HTTP backend --------------------------------------------------------------

struct HttpOptions {
  /// Base URL of an OpenAI-compatible API, e.g. https://api.openai.com/v1
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{120};

  /// Reads POLYTOD_API_BASE and POLYTOD_API_KEY (falling back to
  /// OPENAI_API_KEY) from the environment.
  static HttpOptions from_env();
};

/// Chat-completions client. Transport errors, 429 and 5xx are retried with
/// exponential backoff; other failures raise ProviderError immediately.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(HttpOptions opts);
  std::string complete(const CompletionRequest& req) override;

 private:
  HttpOptions opts_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

// Response cache ------------------------------------------------------------

struct CacheStats {
  std::uint64_t entries = 0;
  std::uint64_t bytes = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;

  bool operator==(const CacheStats&) const = default;
};

/// One file per entry at <root>/<d0d1>/<d2d3>/<digest>.json. Writes go to a
/// unique temp file and are renamed into place.
class ResponseCache {
 public:
  /// Creates `root` if needed; throws CacheError when it is not writable.
  explicit ResponseCache(std::filesystem::path root);

  std::optional<std::string> get(const CacheKey& key) const;
  void put(const CacheKey& key, const std::string& model_id, const std::string& response);

  /// Entry count and total bytes on disk. Hit/miss counters live in LlmClient.
  CacheStats scan() const;
  /// Removes every entry, or only entries of `model_id`. Returns the count.
  std::size_t clear(const std::optional<std::string>& model_id = std::nullopt);

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path entry_path(const CacheKey& key) const;

  std::filesystem::path root_;
};

// Client --------------------------------------------------------------------

/// Backend plus optional cache. Safe for concurrent use.
class LlmClient {
 public:
  LlmClient(std::shared_ptr<ChatBackend> backend, std::optional<ResponseCache> cache,
            std::string format_version);

  std::string complete(const CompletionRequest& req);

  std::uint64_t backend_calls() const { return backend_calls_.load(); }
  CacheStats cache_stats() const;
  std::size_t cache_clear(const std::optional<std::string>& model_id = std::nullopt);
  const std::string& format_version() const { return format_version_; }
  bool caching() const { return cache_.has_value(); }

 private:
  std::shared_ptr<ChatBackend> backend_;
  std::optional<ResponseCache> cache_;
  std::string format_version_;
  std::atomic<std::uint64_t> backend_calls_{0};
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

}  // namespace polytod
