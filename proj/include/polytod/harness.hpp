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

#include "json.hpp"
#include "polytod/dataset.hpp"
#include "polytod/metrics.hpp"
#include "polytod/pipeline.hpp"

namespace polytod {

enum class Subtask { kDst, kAcd, kDag, kRg };

std::string to_string(Subtask s);
/// Comma-separated subset of "dst,acd,dag,rg". Throws ConfigError.
std::vector<Subtask> parse_subtasks(std::string_view list);

/// "English", "Chinese", ... for the supported codes; the code otherwise.
std::string language_name(std::string_view code);
/// "GPT-4" / "GPT-3.5" for OpenAI model ids of those families; the id otherwise.
std::string model_label(std::string_view model_id);

struct RunConfig {
  std::vector<Subtask> subtasks{Subtask::kDst, Subtask::kAcd, Subtask::kDag, Subtask::kRg};
  DstMode mode = DstMode::kFull;
  int workers = 1;
  /// Keep per-stage prompts and responses in the results.
  bool trace = false;
  /// When set, each finished turn is appended here as it completes.
  std::optional<std::filesystem::path> checkpoint;

  bool runs(Subtask s) const;
};

struct TurnResult {
  std::size_t index = 0;  // position in the input split
  std::string turn_id;
  std::string language;

  std::optional<DstOutcome> dst;
  bool dst_correct = false;
  std::optional<ErrorClass> mismatch_class;

  std::optional<SubtaskOutcome> acd;
  bool acd_correct = false;
  std::optional<SubtaskOutcome> dag;
  bool dag_correct = false;
  std::optional<SubtaskOutcome> rg;
};

/// One line of results.ndrec.
nlohmann::ordered_json result_to_json(const TurnResult& result, const TurnRecord& turn,
                                      const GrammarOptions& grammar, bool with_trace);

struct MismatchRecord {
  std::string turn_id;
  std::string language;
  std::string predicted;
  std::string gold;
  ErrorClass machine_class = ErrorClass::kSlotValue;
};

struct SplitRun {
  /// One report per language, sorted by language code.
  std::vector<MetricsReport> reports;
  /// In input order.
  std::vector<TurnResult> results;
  std::vector<MismatchRecord> mismatches;
};

/// Language code -> pipeline for that language.
using PipelineSet = std::map<std::string, std::shared_ptr<const Pipeline>>;

/// Where the ontology and few-shot bank of a language live. Defaults are
/// <data_dir>/ontology/<lang>.json and <data_dir>/banks/<lang>.json.
struct ResourcePaths {
  std::filesystem::path data_dir;
  std::optional<std::filesystem::path> ontology_dir;
  std::optional<std::filesystem::path> bank_dir;

  std::filesystem::path ontology_file(const std::string& language) const;
  std::filesystem::path bank_file(const std::string& language) const;
};

/// Loads and validates both files. Missing files are a ConfigError.
LanguageResources load_resources(const ResourcePaths& paths, const std::string& language);

/// Runs every turn with gold context on a bounded worker pool and aggregates
/// the metrics. Results are collected by turn index, so the outcome does not
/// depend on the worker count. Throws ConfigError before any model call when
/// a turn's language has no pipeline or the mode cannot run for it.
SplitRun run_split(const std::vector<TurnRecord>& turns, const PipelineSet& pipelines, const RunConfig& config);

/// Aggregates results of one language.
MetricsReport aggregate(const std::string& language, const std::string& model,
                        const std::vector<const TurnResult*>& results, const std::vector<const TurnRecord*>& turns,
                        const RunConfig& config);

// Reports -------------------------------------------------------------------

enum class ReportFormat { kMarkdown, kCsv, kJson };
ReportFormat parse_report_format(std::string_view name);

std::string render_report(const std::vector<MetricsReport>& reports, ReportFormat format);
/// Inverse of the json rendering. Throws FormatError.
std::vector<MetricsReport> parse_report_json(std::string_view text);

// Ablation ------------------------------------------------------------------

std::string ablation_label(DstMode mode, std::string_view model_id);

struct AblationRow {
  DstMode mode = DstMode::kFull;
  std::string label;
  /// language -> DST accuracy; nullopt when the mode cannot run ("n/a").
  std::map<std::string, std::optional<double>> accuracy;
};

struct AblationTable {
  std::vector<std::string> languages;
  std::vector<AblationRow> rows;
};

/// One DST-only run per mode and language.
AblationTable run_ablation(const std::vector<TurnRecord>& turns, const PipelineSet& pipelines,
                           const std::vector<DstMode>& modes, int workers);
std::string render_ablation(const AblationTable& table, ReportFormat format);

// Human annotation ----------------------------------------------------------

/// Tab-separated worksheet with a header row: turn_id, language, predicted,
/// gold, machine_class, human_category. Tabs, newlines and backslashes in
/// cells are escaped as \t, \n and \\.
std::string render_worksheet(const std::vector<MismatchRecord>& mismatches);
void export_worksheet(const std::vector<MismatchRecord>& mismatches, const std::filesystem::path& path);

struct WorksheetRow {
  std::string turn_id;
  std::string language;
  std::optional<AnnotationRecord> annotation;  // nullopt when not yet annotated
};

/// Throws FormatError for malformed rows and UnknownCategoryError for bad
/// categories; both name the 1-based line.
std::vector<WorksheetRow> read_worksheet(const std::filesystem::path& path);

struct AdjustedRow {
  std::string category;
  double percentage = 0.0;
  /// Cumulative accuracy for the dataset-issue rows; nullopt for error rows.
  std::optional<double> accuracy;
};

struct AdjustedTable {
  std::string language;
  double base_accuracy = 0.0;
  std::vector<AdjustedRow> rows;
};

/// Category percentages over each language's n_turns, accumulated with
/// adjusted_accuracy. Languages without a dst_acc are skipped.
std::vector<AdjustedTable> apply_annotations(const std::vector<MetricsReport>& reports,
                                             const std::vector<WorksheetRow>& worksheet);
std::string render_adjusted(const std::vector<AdjustedTable>& tables);

}  // namespace polytod
