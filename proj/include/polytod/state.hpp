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

// Textual dialogue-state and agent-act representation.
//
// A state is either the literal `null` or a sequence of domain sections:
//
//   ( movie ) production_country_or_area equal_to " India " ,
//   ( tv ) decade equal_to " 2010s " , type equal_to " sci-fi "
//
// Agent acts use the same surface with an act token before the slot:
//
//   ( tv ) inform Douban_score equal_to " 9.1 "
//
// docs/grammar.md has the EBNF.

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace polytod {

struct GrammarOptions {
  /// Accepted relation tokens. Anything else is a ParseError.
  std::vector<std::string> relations{"equal_to"};
  /// Emitted between assignments and between domain sections.
  std::string separator{" , "};

  bool is_relation(std::string_view token) const;
};

const GrammarOptions& default_grammar();

struct SlotValue {
  std::string relation;
  std::string value;

  auto operator<=>(const SlotValue&) const = default;
};

struct SlotAssignment {
  std::string domain;
  std::string slot;
  std::string relation;
  std::string value;

  auto operator<=>(const SlotAssignment&) const = default;
};

/// domain -> slot -> (relation, value). std::map keeps both levels in
/// lexicographic byte order, which is the canonical order.
class DialogueState {
 public:
  using SlotMap = std::map<std::string, SlotValue>;
  using SectionMap = std::map<std::string, SlotMap>;

  DialogueState() = default;
  explicit DialogueState(SectionMap sections);

  /// Inserts or overwrites. Returns true if (domain, slot) already existed.
  bool set(const std::string& domain, const std::string& slot, SlotValue value);

  const SectionMap& sections() const { return sections_; }
  bool empty() const { return sections_.empty(); }
  std::size_t slot_count() const;
  std::vector<std::string> domains() const;
  std::vector<SlotAssignment> assignments() const;
  const SlotValue* find(std::string_view domain, std::string_view slot) const;

  bool operator==(const DialogueState&) const = default;

 private:
  SectionMap sections_;
};

struct AgentAct {
  std::string domain;
  std::string act;
  std::string slot;
  /// Empty together with `value` when the act carries no value.
  std::string relation;
  std::optional<std::string> value;

  auto operator<=>(const AgentAct&) const = default;
};

using AgentActs = std::vector<AgentAct>;

struct StateParse {
  DialogueState state;
  std::vector<std::string> warnings;
};

StateParse parse_state_with_warnings(std::string_view text,
                                     const GrammarOptions& opts = default_grammar());
DialogueState parse_state(std::string_view text,
                          const GrammarOptions& opts = default_grammar());
std::string serialize_state(const DialogueState& state,
                            const GrammarOptions& opts = default_grammar());

AgentActs parse_acts(std::string_view text,
                     const GrammarOptions& opts = default_grammar());
std::string serialize_acts(const AgentActs& acts,
                           const GrammarOptions& opts = default_grammar());

struct StructuralDiff {
  std::set<std::string> missing_domains;
  std::set<std::string> extra_domains;
  std::set<std::pair<std::string, std::string>> missing_slots;
  std::set<std::pair<std::string, std::string>> extra_slots;

  struct ValueMismatch {
    std::string domain;
    std::string slot;
    std::string predicted;
    std::string gold;
    auto operator<=>(const ValueMismatch&) const = default;
  };
  std::vector<ValueMismatch> value_mismatches;
  bool normalization_failed = false;

  bool empty() const;
};

/// `predicted == std::nullopt` stands for a prediction that could not be
/// canonicalized; it differs from gold in every slot and sets
/// normalization_failed.
StructuralDiff diff_states(const std::optional<DialogueState>& predicted,
                           const DialogueState& gold);

}  // namespace polytod
