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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "polytod/ontology.hpp"
#include "polytod/pipeline.hpp"
#include "polytod/state.hpp"

namespace polytod {

// DST -----------------------------------------------------------------------

/// False for failures; otherwise structural equality with `gold`.
bool em_dst(const std::variant<DialogueState, DstFailure>& predicted, const DialogueState& gold);
bool em_dst(const DstOutcome& outcome, const DialogueState& gold);

/// 100 * matches / n. Throws LengthMismatch; an empty input scores 0.
double acc_binary(const std::vector<bool>& preds, const std::vector<bool>& golds);

/// Set equality of the parsed acts. Values of enumerated slots are compared
/// by their canonical spelling when `ontology` is given. An unparseable
/// prediction is never a match; an unparseable gold throws ParseError.
bool em_acts(std::string_view predicted, std::string_view gold, const Ontology* ontology = nullptr,
             const GrammarOptions& grammar = default_grammar());

// BLEU ----------------------------------------------------------------------

struct BleuOptions {
  static constexpr int kMaxOrder = 4;
  /// Added to a zero match count so one empty order does not zero the score.
  double epsilon = 1e-3;
};

/// Whitespace tokens; for zh, one token per non-space code point.
std::vector<std::string> tokenize(std::string_view text, std::string_view language);

struct BleuStats {
  std::array<std::uint64_t, BleuOptions::kMaxOrder> matches{};
  std::array<std::uint64_t, BleuOptions::kMaxOrder> totals{};
  std::uint64_t candidate_length = 0;
  std::uint64_t reference_length = 0;
  double brevity_penalty = 1.0;
  /// 0..100
  double score = 0.0;

  /// Clipped precision of order n (1-based), without smoothing.
  double precision(int n) const;
};

/// Corpus BLEU-4 with one reference per candidate. Orders with no candidate
/// n-grams at all are left out of the geometric mean. Throws LengthMismatch.
BleuStats bleu_stats(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
                     std::string_view language, const BleuOptions& opts = {});
double bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
            std::string_view language, const BleuOptions& opts = {});

/// Mean token count under the BLEU tokenizer; 0 for an empty list.
double avg_length(const std::vector<std::string>& responses, std::string_view language);

// Mismatch analysis ---------------------------------------------------------

enum class ErrorClass { kDomain, kSlot, kSlotValue, kPostProcessing };

/// "Domain", "Slot", "SlotValue", "PostProcessing".
std::string to_string(ErrorClass c);
std::optional<ErrorClass> parse_error_class(std::string_view name);

/// PostProcessing > Domain > Slot > SlotValue. Throws EmptyDiffError.
ErrorClass classify_mismatch(const StructuralDiff& diff);

/// Running sums base, base + p1, base + p1 + p2, ... (the base itself is not
/// included). Throws RangeError when the total exceeds 100 + tolerance or a
/// percentage is negative.
std::vector<double> adjusted_accuracy(double base_acc, const std::vector<double>& category_percentages,
                                      double tolerance = 0.1);

enum class AnnotationCategory { kMultipleCorrectAnswers, kPoorGoldLabel, kPoorAnnotationSchema, kError };

/// Dataset-issue rows in the order adjusted accuracy accumulates them.
const std::vector<AnnotationCategory>& dataset_issue_rows();
std::string to_string(AnnotationCategory c);

struct AnnotationRecord {
  std::string mismatch_id;
  AnnotationCategory category = AnnotationCategory::kError;
  std::optional<ErrorClass> error_sub;
};

/// Accepts "MultipleCorrectAnswers", "PoorGoldLabel", "PoorAnnotationSchema",
/// "Error" and "Error:<ErrorClass>". Throws UnknownCategoryError(line, ...).
AnnotationRecord parse_annotation(std::string mismatch_id, std::string_view category, std::size_t line);

// Reports -------------------------------------------------------------------

struct SubtaskTally {
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  /// Subset of `incorrect` whose turn recorded an error instead of an answer.
  std::size_t errors = 0;

  bool operator==(const SubtaskTally&) const = default;
};

struct MetricsReport {
  std::string language;
  std::string model;
  std::size_t n_turns = 0;
  std::optional<double> dst_acc;
  std::optional<double> api_acc;
  std::optional<double> da_acc;
  std::optional<double> rg_bleu;
  std::optional<double> rg_avg_len;
  /// Keyed by subtask: dst, acd, dag, rg. RG counts a usable response as
  /// correct.
  std::map<std::string, SubtaskTally> tallies;
  /// DST mismatches by ErrorClass name.
  std::map<std::string, std::size_t> mismatch_classes;

  bool operator==(const MetricsReport&) const = default;
};

nlohmann::ordered_json report_to_json(const MetricsReport& report);
/// Throws FormatError.
MetricsReport report_from_json(const nlohmann::json& j);

}  // namespace polytod
