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

#include "polytod/metrics.hpp"

#include <cmath>
#include <set>

#include "polytod/errors.hpp"
#include "polytod/text.hpp"

namespace polytod {

using nlohmann::json;
using nlohmann::ordered_json;

bool em_dst(const std::variant<DialogueState, DstFailure>& predicted, const DialogueState& gold) {
  const auto* state = std::get_if<DialogueState>(&predicted);
  return state && *state == gold;
}

bool em_dst(const DstOutcome& outcome, const DialogueState& gold) { return em_dst(outcome.final, gold); }

double acc_binary(const std::vector<bool>& preds, const std::vector<bool>& golds) {
  if (preds.size() != golds.size()) {
    throw LengthMismatch(std::to_string(preds.size()) + " predictions for " + std::to_string(golds.size()) +
                         " gold labels");
  }
  if (preds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == golds[i];
  return 100.0 * static_cast<double>(hits) / static_cast<double>(preds.size());
}

namespace {

std::set<AgentAct> canonical_act_set(const AgentActs& acts, const Ontology* ontology) {
  std::set<AgentAct> out;
  for (AgentAct a : acts) {
    if (ontology && a.value) {
      if (auto c = ontology->canonical_member(a.domain, a.slot, *a.value)) a.value = *c;
    }
    out.insert(std::move(a));
  }
  return out;
}

}  // namespace

bool em_acts(std::string_view predicted, std::string_view gold, const Ontology* ontology,
             const GrammarOptions& grammar) {
  const auto gold_set = canonical_act_set(parse_acts(gold, grammar), ontology);
  AgentActs pred;
  try {
    pred = parse_acts(predicted, grammar);
  } catch (const ParseError&) {
    return false;
  }
  return canonical_act_set(pred, ontology) == gold_set;
}

// BLEU ----------------------------------------------------------------------

std::vector<std::string> tokenize(std::string_view s, std::string_view language) {
  if (language == "zh") return text::codepoints(s);
  return text::split_whitespace(s);
}

double BleuStats::precision(int n) const {
  const auto i = static_cast<std::size_t>(n - 1);
  if (totals[i] == 0) return 0.0;
  return static_cast<double>(matches[i]) / static_cast<double>(totals[i]);
}

BleuStats bleu_stats(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
                     std::string_view language, const BleuOptions& opts) {
  if (candidates.size() != references.size()) {
    throw LengthMismatch(std::to_string(candidates.size()) + " candidates for " +
                         std::to_string(references.size()) + " references");
  }
  constexpr int kN = BleuOptions::kMaxOrder;
  BleuStats stats;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto cand = tokenize(candidates[i], language);
    const auto ref = tokenize(references[i], language);
    stats.candidate_length += cand.size();
    stats.reference_length += ref.size();
    for (int n = 1; n <= kN; ++n) {
      std::map<std::vector<std::string>, std::uint64_t> ref_counts;
      for (std::size_t j = 0; j + n <= ref.size(); ++j) {
        ++ref_counts[std::vector<std::string>(ref.begin() + j, ref.begin() + j + n)];
      }
      std::map<std::vector<std::string>, std::uint64_t> cand_counts;
      for (std::size_t j = 0; j + n <= cand.size(); ++j) {
        ++cand_counts[std::vector<std::string>(cand.begin() + j, cand.begin() + j + n)];
      }
      for (const auto& [gram, count] : cand_counts) {
        auto it = ref_counts.find(gram);
        stats.matches[n - 1] += std::min(count, it == ref_counts.end() ? 0 : it->second);
        stats.totals[n - 1] += count;
      }
    }
  }

  if (stats.candidate_length == 0) {
    stats.score = stats.reference_length == 0 ? 100.0 : 0.0;
    stats.brevity_penalty = stats.reference_length == 0 ? 1.0 : 0.0;
    return stats;
  }
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 0; n < kN; ++n) {
    if (stats.totals[n] == 0) continue;
    const double m = stats.matches[n] == 0 ? opts.epsilon : static_cast<double>(stats.matches[n]);
    log_sum += std::log(m / static_cast<double>(stats.totals[n]));
    ++orders;
  }
  const double c = static_cast<double>(stats.candidate_length);
  const double r = static_cast<double>(stats.reference_length);
  stats.brevity_penalty = c < r ? std::exp(1.0 - r / c) : 1.0;
  stats.score = 100.0 * stats.brevity_penalty * std::exp(log_sum / orders);
  return stats;
}

double bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
            std::string_view language, const BleuOptions& opts) {
  return bleu_stats(candidates, references, language, opts).score;
}

double avg_length(const std::vector<std::string>& responses, std::string_view language) {
  if (responses.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& r : responses) total += tokenize(r, language).size();
  return static_cast<double>(total) / static_cast<double>(responses.size());
}

// Mismatch analysis ---------------------------------------------------------

std::string to_string(ErrorClass c) {
  switch (c) {
    case ErrorClass::kDomain: return "Domain";
    case ErrorClass::kSlot: return "Slot";
    case ErrorClass::kSlotValue: return "SlotValue";
    case ErrorClass::kPostProcessing: return "PostProcessing";
  }
  return "SlotValue";
}

std::optional<ErrorClass> parse_error_class(std::string_view name) {
  for (auto c : {ErrorClass::kDomain, ErrorClass::kSlot, ErrorClass::kSlotValue, ErrorClass::kPostProcessing}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

ErrorClass classify_mismatch(const StructuralDiff& diff) {
  if (diff.empty()) throw EmptyDiffError("cannot classify an empty diff");
  if (diff.normalization_failed) return ErrorClass::kPostProcessing;
  if (!diff.missing_domains.empty() || !diff.extra_domains.empty()) return ErrorClass::kDomain;
  if (!diff.missing_slots.empty() || !diff.extra_slots.empty()) return ErrorClass::kSlot;
  return ErrorClass::kSlotValue;
}

std::vector<double> adjusted_accuracy(double base_acc, const std::vector<double>& category_percentages,
                                      double tolerance) {
  std::vector<double> out;
  double acc = base_acc;
  for (double p : category_percentages) {
    if (p < 0) throw RangeError("negative category percentage " + std::to_string(p));
    acc += p;
    out.push_back(acc);
  }
  if (acc > 100.0 + tolerance) {
    throw RangeError("adjusted accuracy " + std::to_string(acc) + " exceeds 100");
  }
  return out;
}

const std::vector<AnnotationCategory>& dataset_issue_rows() {
  static const std::vector<AnnotationCategory> kRows = {AnnotationCategory::kMultipleCorrectAnswers,
                                                        AnnotationCategory::kPoorGoldLabel,
                                                        AnnotationCategory::kPoorAnnotationSchema};
  return kRows;
}

std::string to_string(AnnotationCategory c) {
  switch (c) {
    case AnnotationCategory::kMultipleCorrectAnswers: return "MultipleCorrectAnswers";
    case AnnotationCategory::kPoorGoldLabel: return "PoorGoldLabel";
    case AnnotationCategory::kPoorAnnotationSchema: return "PoorAnnotationSchema";
    case AnnotationCategory::kError: return "Error";
  }
  return "Error";
}

AnnotationRecord parse_annotation(std::string mismatch_id, std::string_view category, std::size_t line) {
  AnnotationRecord rec;
  rec.mismatch_id = std::move(mismatch_id);
  const std::string c = text::trim(category);
  for (auto cat : dataset_issue_rows()) {
    if (c == to_string(cat)) {
      rec.category = cat;
      return rec;
    }
  }
  if (c == "Error") return rec;
  if (c.rfind("Error:", 0) == 0) {
    if (auto sub = parse_error_class(std::string_view(c).substr(6))) {
      rec.error_sub = sub;
      return rec;
    }
  }
  throw UnknownCategoryError(line, c);
}

// Reports -------------------------------------------------------------------

namespace {

void put_optional(ordered_json& j, const char* key, const std::optional<double>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}

std::optional<double> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace

ordered_json report_to_json(const MetricsReport& r) {
  ordered_json j;
  j["language"] = r.language;
  j["model"] = r.model;
  j["n_turns"] = r.n_turns;
  put_optional(j, "dst_acc", r.dst_acc);
  put_optional(j, "api_acc", r.api_acc);
  put_optional(j, "da_acc", r.da_acc);
  put_optional(j, "rg_bleu", r.rg_bleu);
  put_optional(j, "rg_avg_len", r.rg_avg_len);
  j["tallies"] = ordered_json::object();
  for (const auto& [task, t] : r.tallies) {
    j["tallies"][task] = {{"correct", t.correct}, {"incorrect", t.incorrect}, {"errors", t.errors}};
  }
  j["mismatch_classes"] = ordered_json::object();
  for (const auto& [cls, n] : r.mismatch_classes) j["mismatch_classes"][cls] = n;
  return j;
}

MetricsReport report_from_json(const json& j) {
  try {
    MetricsReport r;
    r.language = j.at("language").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.n_turns = j.at("n_turns").get<std::size_t>();
    r.dst_acc = get_optional(j, "dst_acc");
    r.api_acc = get_optional(j, "api_acc");
    r.da_acc = get_optional(j, "da_acc");
    r.rg_bleu = get_optional(j, "rg_bleu");
    r.rg_avg_len = get_optional(j, "rg_avg_len");
    const json tallies = j.value("tallies", json::object());
    for (const auto& [task, t] : tallies.items()) {
      r.tallies[task] = {t.at("correct").get<std::size_t>(), t.at("incorrect").get<std::size_t>(),
                         t.at("errors").get<std::size_t>()};
    }
    const json classes = j.value("mismatch_classes", json::object());
    for (const auto& [cls, n] : classes.items()) {
      r.mismatch_classes[cls] = n.get<std::size_t>();
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed metrics report: ") + e.what());
  }
}

}  // namespace polytod
