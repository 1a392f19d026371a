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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "polytod/state.hpp"

namespace polytod {

/// zh, en, fr, hi, ko, en-hi.
const std::vector<std::string>& supported_languages();
bool is_supported_language(std::string_view code);

/// One turn with the gold context and gold labels for all four subtasks.
struct TurnRecord {
  std::string dialogue_id;
  int turn_index = 0;
  std::string language;
  std::string user_utterance;
  /// Oldest first; at most two entries.
  std::vector<AgentActs> prev_agent_acts;
  DialogueState prev_gold_state;
  DialogueState gold_state;
  bool gold_api_call = false;
  std::optional<std::string> gold_api_result;
  AgentActs gold_agent_acts;
  std::string gold_response;

  /// "dialogue_id:turn_index"
  std::string id() const;
};

/// Parses and validates one canonical record. Throws ValidationError listing
/// every problem in the record.
TurnRecord turn_from_json(const nlohmann::json& j, const GrammarOptions& grammar = default_grammar());
nlohmann::ordered_json turn_to_json(const TurnRecord& turn,
                                    const GrammarOptions& grammar = default_grammar());
/// One line of the canonical turn file, without the trailing newline.
std::string turn_to_line(const TurnRecord& turn, const GrammarOptions& grammar = default_grammar());

struct ValidationIssue {
  std::size_t line = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  std::string to_string() const;
};

struct TurnLoad {
  std::vector<TurnRecord> records;
  ValidationReport report;
};

/// Lenient load: invalid records are skipped and listed in the report.
/// Throws FormatError when the file cannot be read.
TurnLoad load_turns(const std::filesystem::path& path,
                    const std::optional<std::string>& language = std::nullopt,
                    const GrammarOptions& grammar = default_grammar());

/// Strict load: throws ValidationError when any record fails.
std::vector<TurnRecord> load_turns_strict(const std::filesystem::path& path,
                                          const std::optional<std::string>& language = std::nullopt,
                                          const GrammarOptions& grammar = default_grammar());

// Few-shot banks -----------------------------------------------------------

/// Gold context of a turn as shown to the model.
struct TurnContext {
  DialogueState state;
  /// Oldest first; at most two entries.
  std::vector<AgentActs> recent_acts;
  std::string user;
};

struct DomainSelectionExample {
  TurnContext context;
  std::vector<std::string> domains;
};

struct StateGenerationExample {
  TurnContext context;
  DialogueState output;
};

struct NormalizationExample {
  DialogueState input;
  DialogueState output;
};

struct AcdExample {
  TurnContext context;
  bool api_call = false;
};

struct DagExample {
  TurnContext context;
  std::optional<std::string> api_result;
  AgentActs output;
};

struct RgExample {
  std::string user;
  AgentActs agent_acts;
  std::string output;
};

struct FewShotBank {
  std::string language;
  std::vector<DomainSelectionExample> domain_selection;
  /// Grouped by domain, in file order.
  std::vector<std::pair<std::string, std::vector<StateGenerationExample>>> state_generation;
  std::vector<NormalizationExample> normalization;
  std::vector<AcdExample> acd;
  std::vector<DagExample> dag;
  std::vector<RgExample> rg;

  /// nullptr when the bank has no examples for `domain`.
  const std::vector<StateGenerationExample>* state_examples(std::string_view domain) const;
  std::size_t state_example_count() const;
};

struct BankOptions {
  std::vector<std::string> domain_set;  // empty means default_domains()
  GrammarOptions grammar;
};

/// Throws FormatError, ValidationError (unparseable or wrong-language
/// examples), or CoverageError (domain selection misses a domain).
FewShotBank load_fewshot_bank(const std::filesystem::path& path, std::string_view language,
                              const BankOptions& opts = {});
FewShotBank fewshot_bank_from_json(const nlohmann::ordered_json& doc, std::string_view language,
                                   const BankOptions& opts = {});

// External dumps -----------------------------------------------------------

/// Maps an external dataset dump onto canonical turn records and writes them
/// to `out`. Returns the number of records written. See docs/formats.md for
/// the mapping config. Throws MappingError when required fields are unmapped
/// and ValidationError when a produced record fails validation.
std::size_t convert_external(const std::filesystem::path& dump, const nlohmann::json& mapping,
                             const std::filesystem::path& out,
                             const GrammarOptions& grammar = default_grammar());

}  // namespace polytod
