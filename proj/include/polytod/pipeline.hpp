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

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "polytod/dataset.hpp"
#include "polytod/ontology.hpp"
#include "polytod/prompts.hpp"
#include "polytod/provider.hpp"
#include "polytod/state.hpp"

namespace polytod {

enum class NormalizationMode { kNone, kDictionary, kLlm };

/// The four DST configurations of the ablation table.
enum class DstMode { kFull, kNoNorm, kDictNorm, kNaive };

/// "full", "no_norm", "dict_norm", "naive". parse_dst_mode throws ConfigError.
std::string to_string(DstMode mode);
DstMode parse_dst_mode(std::string_view name);
NormalizationMode normalization_of(DstMode mode);

enum class FailureKind { kSelection, kProvider, kParse, kCanonicalization, kEmpty };
std::string to_string(FailureKind kind);

/// Why a turn produced no canonical state. For canonicalization failures
/// domain/slot/value name the offending assignment.
struct DstFailure {
  FailureKind kind = FailureKind::kParse;
  std::string message;
  std::string domain;
  std::string slot;
  std::string value;
};

struct StageTrace {
  std::string stage;
  std::string prompt;
  std::string response;
  /// The stage decided no model call was needed (normalization SKIP).
  bool skipped = false;
};

struct DstOutcome {
  std::vector<std::string> selected_domains;
  std::string raw_state_text;
  std::string normalized_state_text;
  std::variant<DialogueState, DstFailure> final;
  std::vector<StageTrace> trace;

  bool ok() const { return std::holds_alternative<DialogueState>(final); }
  const DialogueState* state() const { return std::get_if<DialogueState>(&final); }
  const DstFailure* failure() const { return std::get_if<DstFailure>(&final); }
};

/// ACD, DAG and RG all produce one model call. `error` is set when the
/// response could not be used; such turns count as wrong.
struct SubtaskOutcome {
  std::string output;
  std::optional<bool> api_call;  // ACD only
  std::optional<std::string> error;
  StageTrace trace;
};

struct YesNoLexicon {
  std::vector<std::string> yes;
  std::vector<std::string> no;
};

/// Built-in answer words per language; unknown languages get the English set.
YesNoLexicon default_lexicon(std::string_view language);

/// Maps a completion to a boolean: the whole first line, then its first
/// token, each with trailing punctuation removed and compared under
/// text::lookup_key. nullopt when neither matches.
std::optional<bool> map_yes_no(std::string_view response, const YesNoLexicon& lexicon);

/// Parses, orders and canonicalizes a state against the ontology. Enumerated
/// values must match an allowed value under text::lookup_key; free slots and
/// slots of unknown domains pass through.
std::variant<DialogueState, DstFailure> postprocess(std::string_view state_text, const Ontology& ontology,
                                                    const GrammarOptions& grammar = default_grammar());

struct StageTokens {
  int domain_selection = 32;
  int state_generation = 256;
  int normalization = 256;
  int acd = 8;
  int dag = 256;
  int rg = 256;
};

struct PipelineOptions {
  std::string model_id = "gpt-4-1106-preview";
  int temperature_milli = 0;
  StageTokens max_tokens;
  /// Empty means default_lexicon(language).
  std::optional<YesNoLexicon> lexicon;
};

/// Everything a pipeline needs for one language. Immutable once built and
/// shared by every worker.
struct LanguageResources {
  std::string language;
  std::shared_ptr<const Ontology> ontology;
  std::shared_ptr<const FewShotBank> bank;
};

/// Gold context of a turn, as every subtask sees it under turn-by-turn
/// evaluation.
TurnContext dst_context(const TurnRecord& turn);
TurnContext post_state_context(const TurnRecord& turn);

class Pipeline {
 public:
  Pipeline(LanguageResources resources, std::shared_ptr<const PromptRenderer> renderer,
           std::shared_ptr<LlmClient> client, PipelineOptions opts = {});

  /// Throws ConfigError when `mode` cannot run for this language (dictionary
  /// mode without a dictionary).
  void check_mode(DstMode mode) const;

  /// Stage 1. Throws EmptySelectionError when no known domain is named.
  std::vector<std::string> select_domains(const TurnContext& ctx, StageTrace* trace = nullptr) const;
  /// Stage 2. Completion truncated at the first blank line.
  std::string generate_state(const TurnContext& ctx, const std::vector<std::string>& domains,
                             StageTrace* trace = nullptr) const;
  /// Stage 3. Throws ParseError when `raw_state` does not parse and
  /// ConfigError for dictionary mode without a dictionary.
  std::string normalize(std::string_view raw_state, const std::vector<std::string>& domains,
                        NormalizationMode mode, StageTrace* trace = nullptr) const;

  /// Per-turn failures are returned in the outcome. Only ConfigError escapes.
  DstOutcome run_dst(const TurnRecord& turn, NormalizationMode mode) const;
  DstOutcome run_naive_dst(const TurnRecord& turn) const;
  DstOutcome run(const TurnRecord& turn, DstMode mode) const;

  SubtaskOutcome run_acd(const TurnRecord& turn) const;
  SubtaskOutcome run_dag(const TurnRecord& turn) const;
  SubtaskOutcome run_rg(const TurnRecord& turn) const;

  const LanguageResources& resources() const { return resources_; }
  const Ontology& ontology() const { return *resources_.ontology; }
  const PipelineOptions& options() const { return opts_; }
  const GrammarOptions& grammar() const { return renderer_->grammar(); }

 private:
  std::string call(const std::string& prompt, int max_tokens) const;
  PromptContext prompt_context(const TurnContext& ctx) const;

  LanguageResources resources_;
  std::shared_ptr<const PromptRenderer> renderer_;
  std::shared_ptr<LlmClient> client_;
  PipelineOptions opts_;
  YesNoLexicon lexicon_;
};

}  // namespace polytod
