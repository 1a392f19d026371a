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

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polytod/dataset.hpp"
#include "polytod/ontology.hpp"
#include "polytod/state.hpp"

namespace polytod {

using TemplateValues = std::map<std::string, std::optional<std::string>>;

/// Text template with `{{ name }}` placeholders and `{# comment #}` spans.
///
/// Rendering rules:
///  - a line holding only comments is dropped; inline comments are removed
///  - a line referencing a placeholder whose value is std::nullopt is dropped
///  - a multi-line value whose placeholder is preceded only by whitespace has
///    its continuation lines indented by that same whitespace
///  - a placeholder missing from the value map is a TemplateError
class Template {
 public:
  static Template parse(std::string name, std::string_view source);

  std::string render(const TemplateValues& values) const;
  const std::string& name() const { return name_; }
  const std::vector<std::string>& placeholders() const { return placeholders_; }

 private:
  std::string name_;
  std::vector<std::string> lines_;
  std::vector<std::string> placeholders_;
};

/// Named template assets plus the format_version derived from their bytes.
class PromptLibrary {
 public:
  static constexpr const char* kRequired[] = {
      "turn_context", "domain_selection", "domain_selection_example", "state_generation",
      "state_generation_example", "normalization", "normalization_example", "acd", "acd_example",
      "dag", "dag_example", "rg", "rg_example", "naive_dst"};

  /// Templates compiled in from prompts/*.tmpl.
  static std::shared_ptr<const PromptLibrary> builtin();
  /// Loads every *.tmpl in `dir`; throws ConfigError if a required one is missing.
  static std::shared_ptr<const PromptLibrary> load_dir(const std::filesystem::path& dir);
  static std::shared_ptr<const PromptLibrary> from_sources(const std::map<std::string, std::string>& sources);

  const Template& get(const std::string& name) const;
  /// "prompts-1:" followed by a short digest of every template.
  const std::string& format_version() const { return format_version_; }

 private:
  std::map<std::string, Template> templates_;
  std::string format_version_;
};

struct PromptContext {
  std::string language;
  TurnContext turn;
  /// DAG only.
  std::optional<std::string> api_result;
  /// RG only.
  AgentActs acts_to_verbalize;
};

struct RendererOptions {
  /// Domain choices listed by the domain-selection instruction, in order.
  std::vector<std::string> domain_choices = default_domains();
  GrammarOptions grammar;
};

class PromptRenderer {
 public:
  explicit PromptRenderer(std::shared_ptr<const PromptLibrary> library = PromptLibrary::builtin(),
                          RendererOptions opts = {});

  std::string domain_selection(const PromptContext& ctx, const FewShotBank& bank) const;

  /// Schemas in sorted domain order, then each domain's examples grouped in
  /// the same order. Throws UnknownDomainError on an empty or unknown domain.
  std::string state_generation(const PromptContext& ctx, const std::vector<std::string>& domains,
                               const Ontology& ontology, const FewShotBank& bank) const;

  /// std::nullopt means SKIP: no enumerated slot of `domains` occurs in the
  /// state, so no normalization call is needed. Throws ParseError when
  /// `raw_state` does not parse.
  std::optional<std::string> normalization(std::string_view raw_state,
                                           const std::vector<std::string>& domains,
                                           const Ontology& ontology, const FewShotBank& bank) const;

  std::string acd(const PromptContext& ctx, const FewShotBank& bank) const;
  std::string dag(const PromptContext& ctx, const FewShotBank& bank) const;
  std::string rg(const PromptContext& ctx, const FewShotBank& bank) const;

  /// Single-prompt baseline: every state-generation example flattened across
  /// domains, no schema section.
  std::string naive_dst(const PromptContext& ctx, const FewShotBank& bank) const;

  const PromptLibrary& library() const { return *library_; }
  const GrammarOptions& grammar() const { return opts_.grammar; }

 private:
  std::string context_block(const TurnContext& turn) const;
  void check_language(const PromptContext& ctx, const FewShotBank& bank) const;

  std::shared_ptr<const PromptLibrary> library_;
  RendererOptions opts_;
};

}  // namespace polytod
