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

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "polytod/harness.hpp"
#include "polytod/pipeline.hpp"
#include "polytod/prompts.hpp"
#include "polytod/provider.hpp"
#include "polytod/state.hpp"

namespace polytod::testing {

namespace fs = std::filesystem;

inline fs::path source_path(const std::string& rel) { return fs::path(POLYTOD_SOURCE_DIR) / rel; }
inline fs::path data_path(const std::string& rel) { return source_path("data/" + rel); }
inline fs::path fixture_path(const std::string& rel) { return source_path("tests/fixtures/" + rel); }
inline fs::path corpus_path() { return data_path("fixtures/mini_corpus.ndjson"); }

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("polytod-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline LanguageResources resources(const std::string& language) {
  return load_resources(ResourcePaths{source_path("data"), std::nullopt, std::nullopt}, language);
}

inline std::shared_ptr<LlmClient> mock_client(MockScript script) {
  auto renderer_version = PromptLibrary::builtin()->format_version();
  return std::make_shared<LlmClient>(std::make_shared<MockBackend>(std::move(script)), std::nullopt,
                                     renderer_version);
}

inline std::shared_ptr<LlmClient> mock_client(const fs::path& script) {
  return mock_client(MockScript::load(script));
}

inline std::shared_ptr<Pipeline> pipeline(const std::string& language, std::shared_ptr<LlmClient> client) {
  return std::make_shared<Pipeline>(resources(language), std::make_shared<PromptRenderer>(), std::move(client));
}

inline PipelineSet pipelines(const std::vector<std::string>& languages, const std::shared_ptr<LlmClient>& client) {
  PipelineSet set;
  for (const auto& lang : languages) set[lang] = pipeline(lang, client);
  return set;
}

/// Random valid states over a small alphabet that still exercises spaces,
/// punctuation and non-ASCII values.
class StateGenerator {
 public:
  explicit StateGenerator(std::uint64_t seed) : rng_(seed) {}

  DialogueState state(int max_domains = 3, int max_slots = 4) {
    static const std::vector<std::string> kDomains = {"movie", "tv", "attraction", "hotel", "train", "pc"};
    static const std::vector<std::string> kSlots = {"type", "decade", "title", "area", "price_range",
                                                    "Douban_score", "name", "stars"};
    DialogueState s;
    const int nd = pick(0, max_domains);
    for (int d = 0; d < nd; ++d) {
      const auto& domain = kDomains[pick(0, static_cast<int>(kDomains.size()) - 1)];
      const int ns = pick(1, max_slots);
      for (int k = 0; k < ns; ++k) {
        s.set(domain, kSlots[pick(0, static_cast<int>(kSlots.size()) - 1)], SlotValue{"equal_to", value()});
      }
    }
    return s;
  }

  std::string value() {
    static const std::vector<std::string> kWords = {"sci-fi", "2010s", "Japanese", "TV", "show", "9.1",
                                                    "Hong", "Kong", "台湾", "爱情", "हाँ", "서울",
                                                    "a,b", "(x)", "it's", "east"};
    const int n = pick(1, 3);
    std::string v;
    for (int i = 0; i < n; ++i) {
      if (i) v += ' ';
      v += kWords[pick(0, static_cast<int>(kWords.size()) - 1)];
    }
    return v;
  }

  /// Same state, emitted with shuffled domain and slot order and random
  /// padding around tokens and inside quotes.
  std::string scrambled(const DialogueState& s) {
    if (s.empty()) return pad() + "null" + pad();
    std::vector<std::string> sections;
    for (const auto& [domain, slots] : s.sections()) {
      std::vector<std::string> parts;
      for (const auto& [slot, sv] : slots) {
        parts.push_back(slot + spaces() + sv.relation + spaces() + "\"" + pad() + sv.value + pad() + "\"");
      }
      std::shuffle(parts.begin(), parts.end(), rng_);
      std::string section = "(" + pad() + domain + pad() + ")" + spaces();
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) section += pad() + "," + pad();
        section += parts[i];
      }
      sections.push_back(section);
    }
    std::shuffle(sections.begin(), sections.end(), rng_);
    std::string out;
    for (std::size_t i = 0; i < sections.size(); ++i) {
      if (i) out += pick(0, 1) ? pad() + "," + pad() : spaces();
      out += sections[i];
    }
    return pad() + out + pad();
  }

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::string pad() { return std::string(static_cast<std::size_t>(pick(0, 2)), ' '); }
  std::string spaces() { return pick(0, 3) == 0 ? "\n" : std::string(static_cast<std::size_t>(pick(1, 3)), ' '); }

  std::mt19937_64 rng_;
};

}  // namespace polytod::testing
