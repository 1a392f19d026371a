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

#include "polytod/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "polytod/errors.hpp"
#include "polytod/text.hpp"

namespace polytod {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(Subtask s) {
  switch (s) {
    case Subtask::kDst: return "dst";
    case Subtask::kAcd: return "acd";
    case Subtask::kDag: return "dag";
    case Subtask::kRg: return "rg";
  }
  return "dst";
}

std::vector<Subtask> parse_subtasks(std::string_view list) {
  std::vector<Subtask> out;
  std::stringstream ss{std::string(list)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = text::ascii_lower(text::trim(item));
    if (item.empty()) continue;
    Subtask s;
    if (item == "dst") s = Subtask::kDst;
    else if (item == "acd" || item == "api") s = Subtask::kAcd;
    else if (item == "dag" || item == "da") s = Subtask::kDag;
    else if (item == "rg") s = Subtask::kRg;
    else throw ConfigError("unknown subtask '" + item + "' (expected dst, acd, dag, rg)");
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("no subtask selected");
  std::sort(out.begin(), out.end());
  return out;
}

std::string language_name(std::string_view code) {
  static const std::map<std::string, std::string, std::less<>> kNames = {
      {"zh", "Chinese"}, {"en", "English"}, {"fr", "French"},
      {"hi", "Hindi"},   {"ko", "Korean"},  {"en-hi", "English-Hindi"}};
  auto it = kNames.find(code);
  return it == kNames.end() ? std::string(code) : it->second;
}

std::string model_label(std::string_view model_id) {
  const std::string id = text::ascii_lower(model_id);
  if (id.rfind("gpt-4", 0) == 0) return "GPT-4";
  if (id.rfind("gpt-3.5", 0) == 0) return "GPT-3.5";
  return std::string(model_id);
}

bool RunConfig::runs(Subtask s) const { return std::find(subtasks.begin(), subtasks.end(), s) != subtasks.end(); }

// Results -------------------------------------------------------------------

namespace {

ordered_json trace_json(const StageTrace& t) {
  ordered_json j;
  j["stage"] = t.stage;
  j["skipped"] = t.skipped;
  j["prompt"] = t.prompt;
  j["response"] = t.response;
  return j;
}

ordered_json failure_json(const DstFailure& f) {
  ordered_json j;
  j["kind"] = to_string(f.kind);
  j["message"] = f.message;
  if (!f.domain.empty()) {
    j["domain"] = f.domain;
    j["slot"] = f.slot;
    j["value"] = f.value;
  }
  return j;
}

ordered_json subtask_json(const SubtaskOutcome& o) {
  ordered_json j;
  j["output"] = o.output;
  j["error"] = o.error ? json(*o.error) : json(nullptr);
  return j;
}

}  // namespace

ordered_json result_to_json(const TurnResult& r, const TurnRecord& turn, const GrammarOptions& grammar,
                            bool with_trace) {
  ordered_json j;
  j["turn_id"] = r.turn_id;
  j["language"] = r.language;
  ordered_json trace = ordered_json::array();
  if (r.dst) {
    const DstOutcome& d = *r.dst;
    ordered_json dj;
    dj["selected_domains"] = d.selected_domains;
    dj["raw_state"] = d.raw_state_text;
    dj["normalized_state"] = d.normalized_state_text;
    if (const DialogueState* s = d.state()) {
      dj["predicted"] = serialize_state(*s, grammar);
      dj["failure"] = nullptr;
    } else {
      dj["predicted"] = nullptr;
      dj["failure"] = failure_json(*d.failure());
    }
    dj["gold"] = serialize_state(turn.gold_state, grammar);
    dj["correct"] = r.dst_correct;
    dj["mismatch_class"] = r.mismatch_class ? json(to_string(*r.mismatch_class)) : json(nullptr);
    j["dst"] = std::move(dj);
    for (const auto& t : d.trace) trace.push_back(trace_json(t));
  }
  if (r.acd) {
    ordered_json aj = subtask_json(*r.acd);
    aj["predicted"] = r.acd->api_call ? json(*r.acd->api_call) : json(nullptr);
    aj["gold"] = turn.gold_api_call;
    aj["correct"] = r.acd_correct;
    j["acd"] = std::move(aj);
    trace.push_back(trace_json(r.acd->trace));
  }
  if (r.dag) {
    ordered_json gj = subtask_json(*r.dag);
    gj["gold"] = serialize_acts(turn.gold_agent_acts, grammar);
    gj["correct"] = r.dag_correct;
    j["dag"] = std::move(gj);
    trace.push_back(trace_json(r.dag->trace));
  }
  if (r.rg) {
    ordered_json rj = subtask_json(*r.rg);
    rj["gold"] = turn.gold_response;
    j["rg"] = std::move(rj);
    trace.push_back(trace_json(r.rg->trace));
  }
  if (with_trace) j["trace"] = std::move(trace);
  return j;
}

std::filesystem::path ResourcePaths::ontology_file(const std::string& language) const {
  return ontology_dir.value_or(data_dir / "ontology") / (language + ".json");
}

std::filesystem::path ResourcePaths::bank_file(const std::string& language) const {
  return bank_dir.value_or(data_dir / "banks") / (language + ".json");
}

LanguageResources load_resources(const ResourcePaths& paths, const std::string& language) {
  if (!is_supported_language(language)) throw ConfigError("unsupported language '" + language + "'");
  const auto onto = paths.ontology_file(language);
  const auto bank = paths.bank_file(language);
  if (!std::filesystem::exists(onto)) throw ConfigError("no ontology for '" + language + "' at " + onto.string());
  if (!std::filesystem::exists(bank)) throw ConfigError("no few-shot bank for '" + language + "' at " + bank.string());
  LanguageResources res;
  res.language = language;
  res.ontology = std::make_shared<const Ontology>(Ontology::load(onto, language));
  BankOptions opts;
  opts.domain_set = res.ontology->domains();
  res.bank = std::make_shared<const FewShotBank>(load_fewshot_bank(bank, language, opts));
  return res;
}

// Running a split -----------------------------------------------------------

namespace {

void check_resources(const Pipeline& p, const RunConfig& config) {
  p.check_mode(config.mode);
  const FewShotBank& bank = *p.resources().bank;
  const std::string lang = p.resources().language;
  auto require = [&](bool ok, const char* what) {
    if (!ok) throw ConfigError("the " + lang + " few-shot bank has no " + what + " examples");
  };
  if (config.runs(Subtask::kDst)) {
    if (config.mode == DstMode::kNaive) {
      require(bank.state_example_count() > 0, "state-generation");
    } else {
      require(!bank.domain_selection.empty(), "domain-selection");
    }
  }
  if (config.runs(Subtask::kAcd)) require(!bank.acd.empty(), "API-call-detection");
  if (config.runs(Subtask::kDag)) require(!bank.dag.empty(), "dialogue-act");
  if (config.runs(Subtask::kRg)) require(!bank.rg.empty(), "response-generation");
}

TurnResult run_turn(std::size_t index, const TurnRecord& turn, const Pipeline& p, const RunConfig& config) {
  TurnResult r;
  r.index = index;
  r.turn_id = turn.id();
  r.language = turn.language;
  if (config.runs(Subtask::kDst)) {
    r.dst = p.run(turn, config.mode);
    r.dst_correct = em_dst(*r.dst, turn.gold_state);
    if (!r.dst_correct) {
      const DialogueState* s = r.dst->state();
      r.mismatch_class = classify_mismatch(
          diff_states(s ? std::optional<DialogueState>(*s) : std::nullopt, turn.gold_state));
    }
  }
  if (config.runs(Subtask::kAcd)) {
    r.acd = p.run_acd(turn);
    r.acd_correct = r.acd->api_call && *r.acd->api_call == turn.gold_api_call;
  }
  if (config.runs(Subtask::kDag)) {
    r.dag = p.run_dag(turn);
    r.dag_correct = !r.dag->error && em_acts(r.dag->output, serialize_acts(turn.gold_agent_acts, p.grammar()),
                                             &p.ontology(), p.grammar());
  }
  if (config.runs(Subtask::kRg)) r.rg = p.run_rg(turn);
  if (!config.trace) {
    if (r.dst) {
      for (auto& t : r.dst->trace) t.prompt.clear();
    }
    for (auto* o : {&r.acd, &r.dag, &r.rg}) {
      if (*o) (*o)->trace.prompt.clear();
    }
  }
  return r;
}

std::string state_text_of(const DstOutcome& d, const GrammarOptions& grammar) {
  if (const DialogueState* s = d.state()) return serialize_state(*s, grammar);
  const DstFailure& f = *d.failure();
  std::string shown = d.normalized_state_text.empty() ? d.raw_state_text : d.normalized_state_text;
  return "[" + to_string(f.kind) + " failure] " + shown;
}

}  // namespace

MetricsReport aggregate(const std::string& language, const std::string& model,
                        const std::vector<const TurnResult*>& results, const std::vector<const TurnRecord*>& turns,
                        const RunConfig& config) {
  MetricsReport rep;
  rep.language = language;
  rep.model = model;
  rep.n_turns = results.size();
  const double n = static_cast<double>(results.size());
  auto pct = [&](std::size_t k) { return results.empty() ? 0.0 : 100.0 * static_cast<double>(k) / n; };

  if (config.runs(Subtask::kDst)) {
    SubtaskTally t;
    for (const auto* r : results) {
      if (r->dst_correct) {
        ++t.correct;
      } else {
        ++t.incorrect;
        if (!r->dst->ok()) ++t.errors;
        ++rep.mismatch_classes[to_string(*r->mismatch_class)];
      }
    }
    rep.tallies["dst"] = t;
    rep.dst_acc = pct(t.correct);
  }
  if (config.runs(Subtask::kAcd)) {
    std::vector<bool> preds, golds;
    SubtaskTally t;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& o = *results[i]->acd;
      // Unmappable answers count as wrong: predict the opposite of gold.
      preds.push_back(o.api_call ? *o.api_call : !turns[i]->gold_api_call);
      golds.push_back(turns[i]->gold_api_call);
      results[i]->acd_correct ? ++t.correct : ++t.incorrect;
      if (o.error) ++t.errors;
    }
    rep.tallies["acd"] = t;
    rep.api_acc = acc_binary(preds, golds);
  }
  if (config.runs(Subtask::kDag)) {
    SubtaskTally t;
    for (const auto* r : results) {
      r->dag_correct ? ++t.correct : ++t.incorrect;
      if (r->dag->error) ++t.errors;
    }
    rep.tallies["dag"] = t;
    rep.da_acc = pct(t.correct);
  }
  if (config.runs(Subtask::kRg)) {
    std::vector<std::string> cands, refs;
    SubtaskTally t;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& o = *results[i]->rg;
      cands.push_back(o.error ? std::string() : o.output);
      refs.push_back(turns[i]->gold_response);
      if (o.error) {
        ++t.incorrect;
        ++t.errors;
      } else {
        ++t.correct;
      }
    }
    rep.tallies["rg"] = t;
    if (!results.empty()) {
      rep.rg_bleu = bleu(cands, refs, language);
      rep.rg_avg_len = avg_length(cands, language);
    }
  }
  return rep;
}

SplitRun run_split(const std::vector<TurnRecord>& turns, const PipelineSet& pipelines, const RunConfig& config) {
  if (config.subtasks.empty()) throw ConfigError("no subtask selected");
  std::set<std::string> languages;
  for (const auto& t : turns) languages.insert(t.language);
  for (const auto& lang : languages) {
    auto it = pipelines.find(lang);
    if (it == pipelines.end() || !it->second) {
      throw ConfigError("no resources configured for language '" + lang + "'");
    }
    check_resources(*it->second, config);
  }

  SplitRun run;
  run.results.resize(turns.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr first_error;
  std::mutex mu;
  std::optional<std::ofstream> checkpoint;
  if (config.checkpoint) {
    checkpoint.emplace(*config.checkpoint, std::ios::trunc);
    if (!*checkpoint) throw ConfigError("cannot write " + config.checkpoint->string());
  }

  auto worker = [&] {
    while (!abort) {
      const std::size_t i = next++;
      if (i >= turns.size()) return;
      try {
        const Pipeline& p = *pipelines.at(turns[i].language);
        run.results[i] = run_turn(i, turns[i], p, config);
        if (checkpoint) {
          const std::string line =
              result_to_json(run.results[i], turns[i], p.grammar(), config.trace).dump(-1, ' ', false, json::error_handler_t::replace);
          std::lock_guard lock(mu);
          *checkpoint << line << "\n" << std::flush;
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
        abort = true;
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(config.workers, static_cast<int>(std::max<std::size_t>(turns.size(), 1))));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  for (const auto& lang : languages) {
    const Pipeline& p = *pipelines.at(lang);
    std::vector<const TurnResult*> results;
    std::vector<const TurnRecord*> records;
    for (std::size_t i = 0; i < turns.size(); ++i) {
      if (turns[i].language != lang) continue;
      results.push_back(&run.results[i]);
      records.push_back(&turns[i]);
      const TurnResult& r = run.results[i];
      if (r.dst && !r.dst_correct) {
        run.mismatches.push_back({r.turn_id, lang, state_text_of(*r.dst, p.grammar()),
                                  serialize_state(turns[i].gold_state, p.grammar()), *r.mismatch_class});
      }
    }
    run.reports.push_back(aggregate(lang, p.options().model_id, results, records, config));
  }
  return run;
}

// Reports -------------------------------------------------------------------

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

struct Column {
  const char* header;
  std::optional<double> MetricsReport::*field;
  int decimals;
};

const std::vector<Column>& columns() {
  static const std::vector<Column> kColumns = {
      {"DST Acc.", &MetricsReport::dst_acc, 1},   {"API Acc.", &MetricsReport::api_acc, 1},
      {"DA Acc.", &MetricsReport::da_acc, 1},     {"RG BLEU", &MetricsReport::rg_bleu, 1},
      {"RG Avg. Length", &MetricsReport::rg_avg_len, 2}};
  return kColumns;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "markdown" || name == "md") return ReportFormat::kMarkdown;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  throw ConfigError("unknown report format '" + std::string(name) + "' (expected markdown, csv, json)");
}

std::string render_report(const std::vector<MetricsReport>& reports, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::kMarkdown: {
      out << "| Language | Model |";
      for (const auto& c : columns()) out << ' ' << c.header << " |";
      out << "\n|---|---|";
      for (std::size_t i = 0; i < columns().size(); ++i) out << "---|";
      out << '\n';
      for (const auto& r : reports) {
        out << "| " << language_name(r.language) << " | " << model_label(r.model) << " |";
        for (const auto& c : columns()) {
          const auto& v = r.*(c.field);
          out << ' ' << (v ? fixed(*v, c.decimals) : "-") << " |";
        }
        out << '\n';
      }
      break;
    }
    case ReportFormat::kCsv: {
      std::vector<const Column*> present;
      for (const auto& c : columns()) {
        if (std::any_of(reports.begin(), reports.end(), [&](const MetricsReport& r) { return (r.*(c.field)).has_value(); })) {
          present.push_back(&c);
        }
      }
      out << "Language,Model,N Turns";
      for (const auto* c : present) out << ',' << c->header;
      out << '\n';
      for (const auto& r : reports) {
        out << csv_cell(language_name(r.language)) << ',' << csv_cell(model_label(r.model)) << ',' << r.n_turns;
        for (const auto* c : present) {
          const auto& v = r.*(c->field);
          out << ',' << (v ? fixed(*v, c->decimals) : "");
        }
        out << '\n';
      }
      break;
    }
    case ReportFormat::kJson: {
      ordered_json j;
      j["reports"] = ordered_json::array();
      for (const auto& r : reports) j["reports"].push_back(report_to_json(r));
      out << j.dump(2) << '\n';
      break;
    }
  }
  return out.str();
}

std::vector<MetricsReport> parse_report_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("reports") || !doc["reports"].is_array()) {
    throw FormatError("report json needs a 'reports' array");
  }
  std::vector<MetricsReport> out;
  for (const auto& r : doc["reports"]) out.push_back(report_from_json(r));
  return out;
}

// Ablation ------------------------------------------------------------------

std::string ablation_label(DstMode mode, std::string_view model_id) {
  switch (mode) {
    case DstMode::kFull: return "Our (" + model_label(model_id) + ")";
    case DstMode::kNoNorm: return "w/o any normalization";
    case DstMode::kDictNorm: return "w/ dictionary-based normalization";
    case DstMode::kNaive: return "Naive prompting";
  }
  return "";
}

AblationTable run_ablation(const std::vector<TurnRecord>& turns, const PipelineSet& pipelines,
                           const std::vector<DstMode>& modes, int workers) {
  AblationTable table;
  std::map<std::string, std::vector<TurnRecord>> by_language;
  for (const auto& t : turns) by_language[t.language].push_back(t);
  for (const auto& [lang, _] : by_language) {
    if (!pipelines.contains(lang)) throw ConfigError("no resources configured for language '" + lang + "'");
    table.languages.push_back(lang);
  }
  const std::string model = pipelines.empty() ? std::string() : pipelines.begin()->second->options().model_id;
  for (DstMode mode : modes) {
    AblationRow row;
    row.mode = mode;
    row.label = ablation_label(mode, model);
    for (const auto& [lang, lang_turns] : by_language) {
      RunConfig cfg;
      cfg.subtasks = {Subtask::kDst};
      cfg.mode = mode;
      cfg.workers = workers;
      try {
        pipelines.at(lang)->check_mode(mode);
      } catch (const ConfigError&) {
        row.accuracy[lang] = std::nullopt;
        continue;
      }
      SplitRun run = run_split(lang_turns, pipelines, cfg);
      row.accuracy[lang] = run.reports.front().dst_acc;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string render_ablation(const AblationTable& table, ReportFormat format) {
  std::ostringstream out;
  auto cell = [](const std::optional<double>& v) { return v ? fixed(*v, 1) : std::string("n/a"); };
  switch (format) {
    case ReportFormat::kMarkdown:
      out << "| |";
      for (const auto& l : table.languages) out << ' ' << language_name(l) << " |";
      out << "\n|---|";
      for (std::size_t i = 0; i < table.languages.size(); ++i) out << "---|";
      out << '\n';
      for (const auto& row : table.rows) {
        out << "| " << row.label << " |";
        for (const auto& l : table.languages) out << ' ' << cell(row.accuracy.at(l)) << " |";
        out << '\n';
      }
      break;
    case ReportFormat::kCsv:
      out << "Method,Mode";
      for (const auto& l : table.languages) out << ',' << csv_cell(language_name(l));
      out << '\n';
      for (const auto& row : table.rows) {
        out << csv_cell(row.label) << ',' << to_string(row.mode);
        for (const auto& l : table.languages) out << ',' << cell(row.accuracy.at(l));
        out << '\n';
      }
      break;
    case ReportFormat::kJson: {
      ordered_json j;
      j["languages"] = table.languages;
      j["rows"] = ordered_json::array();
      for (const auto& row : table.rows) {
        ordered_json r;
        r["mode"] = to_string(row.mode);
        r["label"] = row.label;
        r["dst_acc"] = ordered_json::object();
        for (const auto& l : table.languages) {
          const auto& v = row.accuracy.at(l);
          r["dst_acc"][l] = v ? json(*v) : json(nullptr);
        }
        j["rows"].push_back(std::move(r));
      }
      out << j.dump(2) << '\n';
      break;
    }
  }
  return out.str();
}

// Worksheet -----------------------------------------------------------------

namespace {

const char* const kWorksheetHeader = "turn_id\tlanguage\tpredicted\tgold\tmachine_class\thuman_category";

std::string escape_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (true) {
    std::size_t tab = line.find('\t', pos);
    cells.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  return cells;
}

}  // namespace

std::string render_worksheet(const std::vector<MismatchRecord>& mismatches) {
  std::string out = std::string(kWorksheetHeader) + "\n";
  for (const auto& m : mismatches) {
    out += escape_cell(m.turn_id) + '\t' + escape_cell(m.language) + '\t' + escape_cell(m.predicted) + '\t' +
           escape_cell(m.gold) + '\t' + to_string(m.machine_class) + "\t\n";
  }
  return out;
}

void export_worksheet(const std::vector<MismatchRecord>& mismatches, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write worksheet " + path.string());
  out << render_worksheet(mismatches);
}

std::vector<WorksheetRow> read_worksheet(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open worksheet " + path.string());
  std::vector<WorksheetRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kWorksheetHeader) throw FormatError("worksheet line 1: unexpected header");
      continue;
    }
    if (text::trim(line).empty()) continue;
    const auto cells = split_tabs(line);
    if (cells.size() != 6) {
      throw FormatError("worksheet line " + std::to_string(line_no) + ": expected 6 columns, found " +
                        std::to_string(cells.size()));
    }
    WorksheetRow row;
    row.turn_id = cells[0];
    row.language = cells[1];
    if (!text::trim(cells[5]).empty()) row.annotation = parse_annotation(cells[0], cells[5], line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AdjustedTable> apply_annotations(const std::vector<MetricsReport>& reports,
                                             const std::vector<WorksheetRow>& worksheet) {
  std::vector<AdjustedTable> tables;
  for (const auto& rep : reports) {
    if (!rep.dst_acc) continue;
    std::map<AnnotationCategory, std::size_t> counts;
    std::map<ErrorClass, std::size_t> error_counts;
    for (const auto& row : worksheet) {
      if (row.language != rep.language || !row.annotation) continue;
      ++counts[row.annotation->category];
      if (row.annotation->error_sub) ++error_counts[*row.annotation->error_sub];
    }
    auto pct = [&](std::size_t k) {
      return rep.n_turns == 0 ? 0.0 : 100.0 * static_cast<double>(k) / static_cast<double>(rep.n_turns);
    };
    AdjustedTable table;
    table.language = rep.language;
    table.base_accuracy = *rep.dst_acc;
    std::vector<double> issue_pcts;
    for (auto cat : dataset_issue_rows()) issue_pcts.push_back(pct(counts[cat]));
    const auto cumulative = adjusted_accuracy(table.base_accuracy, issue_pcts);
    for (std::size_t i = 0; i < issue_pcts.size(); ++i) {
      table.rows.push_back({to_string(dataset_issue_rows()[i]), issue_pcts[i], cumulative[i]});
    }
    table.rows.push_back({"Error", pct(counts[AnnotationCategory::kError]), std::nullopt});
    for (auto c : {ErrorClass::kDomain, ErrorClass::kSlot, ErrorClass::kSlotValue, ErrorClass::kPostProcessing}) {
      table.rows.push_back({"Error:" + to_string(c), pct(error_counts[c]), std::nullopt});
    }
    tables.push_back(std::move(table));
  }
  return tables;
}

std::string render_adjusted(const std::vector<AdjustedTable>& tables) {
  std::ostringstream out;
  for (const auto& t : tables) {
    out << "## " << language_name(t.language) << "\n\n";
    out << "| Category | % | Acc. |\n|---|---|---|\n";
    out << "| Base | | " << fixed(t.base_accuracy, 1) << " |\n";
    for (const auto& r : t.rows) {
      out << "| " << r.category << " | " << fixed(r.percentage, 1) << " | "
          << (r.accuracy ? fixed(*r.accuracy, 1) : "") << " |\n";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace polytod
