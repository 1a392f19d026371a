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

// polytod: command-line front end for the evaluation harness.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "polytod/dataset.hpp"
#include "polytod/errors.hpp"
#include "polytod/harness.hpp"
#include "polytod/metrics.hpp"
#include "polytod/ontology.hpp"
#include "polytod/pipeline.hpp"
#include "polytod/prompts.hpp"
#include "polytod/provider.hpp"
#include "polytod/text.hpp"

#ifndef POLYTOD_DATA_DIR
#define POLYTOD_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace polytod;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitUsage = 2;

struct ProviderFlags {
  std::string provider = "http";
  std::string script;
  std::string record_misses;
  std::string model = "gpt-4-1106-preview";
  std::string api_base;
  std::string cache_dir;
  bool no_cache = false;
  int temperature_milli = 0;
};

struct ResourceFlags {
  std::string data_dir = POLYTOD_DATA_DIR;
  std::string ontology_dir;
  std::string bank_dir;
  std::string templates;
};

void add_provider_flags(CLI::App* cmd, ProviderFlags& f) {
  cmd->add_option("--provider", f.provider, "Model backend")->check(CLI::IsMember({"http", "mock"}))->capture_default_str();
  cmd->add_option("--script", f.script, "Mock script (JSON) for --provider mock");
  cmd->add_option("--record-misses", f.record_misses,
                  "Mock only: append unscripted prompts to this file and answer them with an empty response");
  cmd->add_option("--model", f.model, "Model id sent to the provider")->capture_default_str();
  cmd->add_option("--api-base", f.api_base, "Chat-completions base URL (default: $POLYTOD_API_BASE or OpenAI)");
  cmd->add_option("--temperature-milli", f.temperature_milli, "Sampling temperature in thousandths")
      ->capture_default_str();
  cmd->add_option("--cache-dir", f.cache_dir,
                  "Response cache directory (http default: $POLYTOD_CACHE_DIR or ~/.cache/polytod; mock: none)");
  cmd->add_flag("--no-cache", f.no_cache, "Disable the response cache");
}

void add_resource_flags(CLI::App* cmd, ResourceFlags& f) {
  cmd->add_option("--data-dir", f.data_dir, "Directory holding ontology/ and banks/")->capture_default_str();
  cmd->add_option("--ontology-dir", f.ontology_dir, "Overrides <data-dir>/ontology");
  cmd->add_option("--bank-dir", f.bank_dir, "Overrides <data-dir>/banks");
  cmd->add_option("--templates", f.templates, "Directory of *.tmpl prompt templates (default: built in)");
}

std::optional<fs::path> default_cache_dir() {
  if (const char* d = std::getenv("POLYTOD_CACHE_DIR"); d && *d) return fs::path(d);
  if (const char* d = std::getenv("XDG_CACHE_HOME"); d && *d) return fs::path(d) / "polytod";
  if (const char* d = std::getenv("HOME"); d && *d) return fs::path(d) / ".cache" / "polytod";
  return std::nullopt;
}

struct Provider {
  std::shared_ptr<LlmClient> client;
  std::shared_ptr<MockBackend> mock;
};

Provider make_provider(const ProviderFlags& f, const std::string& format_version) {
  Provider p;
  std::shared_ptr<ChatBackend> backend;
  if (f.provider == "mock") {
    MockScript script;
    if (!f.script.empty()) {
      script = MockScript::load(f.script);
    } else if (f.record_misses.empty()) {
      throw ConfigError("--provider mock needs --script or --record-misses");
    }
    p.mock = std::make_shared<MockBackend>(std::move(script));
    if (!f.record_misses.empty()) p.mock->record_misses_to(f.record_misses);
    backend = p.mock;
  } else {
    HttpOptions opts = HttpOptions::from_env();
    if (!f.api_base.empty()) opts.base_url = f.api_base;
    backend = std::make_shared<HttpBackend>(opts);
  }
  std::optional<ResponseCache> cache;
  if (!f.no_cache) {
    std::optional<fs::path> dir;
    if (!f.cache_dir.empty()) {
      dir = fs::path(f.cache_dir);
    } else if (f.provider == "http") {
      dir = default_cache_dir();
    }
    if (dir) cache.emplace(*dir);
  }
  p.client = std::make_shared<LlmClient>(backend, std::move(cache), format_version);
  return p;
}

std::shared_ptr<const PromptLibrary> load_library(const ResourceFlags& f) {
  return f.templates.empty() ? PromptLibrary::builtin() : PromptLibrary::load_dir(f.templates);
}

PipelineSet make_pipelines(const std::set<std::string>& languages, const ResourceFlags& rf,
                           const ProviderFlags& pf, const std::shared_ptr<LlmClient>& client,
                           const std::shared_ptr<const PromptLibrary>& library) {
  ResourcePaths paths;
  paths.data_dir = rf.data_dir;
  if (!rf.ontology_dir.empty()) paths.ontology_dir = fs::path(rf.ontology_dir);
  if (!rf.bank_dir.empty()) paths.bank_dir = fs::path(rf.bank_dir);
  auto renderer = std::make_shared<const PromptRenderer>(library);
  PipelineOptions opts;
  opts.model_id = pf.model;
  opts.temperature_milli = pf.temperature_milli;
  PipelineSet set;
  for (const auto& lang : languages) {
    set[lang] = std::make_shared<const Pipeline>(load_resources(paths, lang), renderer, client, opts);
  }
  return set;
}

std::set<std::string> parse_languages(const std::string& list) {
  std::set<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = text::trim(item);
    if (item.empty()) continue;
    if (!is_supported_language(item)) throw ConfigError("unsupported language '" + item + "'");
    out.insert(item);
  }
  return out;
}

// Loads the split strictly and keeps the requested languages (all when empty).
std::vector<TurnRecord> load_split(const std::string& path, std::set<std::string>& languages) {
  auto turns = load_turns_strict(path);
  if (languages.empty()) {
    for (const auto& t : turns) languages.insert(t.language);
    return turns;
  }
  std::vector<TurnRecord> kept;
  for (auto& t : turns) {
    if (languages.contains(t.language)) kept.push_back(std::move(t));
  }
  return kept;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

void print_cache_summary(const Provider& p) {
  const CacheStats s = p.client->cache_stats();
  std::cerr << "backend calls: " << p.client->backend_calls();
  if (p.client->caching()) std::cerr << ", cache hits: " << s.hits << ", cache misses: " << s.misses;
  if (p.mock && p.mock->misses()) std::cerr << ", unscripted prompts: " << p.mock->misses();
  std::cerr << "\n";
}

void print_trace(std::ostream& os, const StageTrace& t) {
  os << "=== " << t.stage << (t.skipped ? " (skipped)" : "") << "\n";
  if (!t.prompt.empty()) os << "--- prompt\n" << t.prompt << "\n";
  os << "--- response\n" << t.response << "\n";
}

// Commands ------------------------------------------------------------------

struct RunFlags {
  std::string lang;
  std::string split;
  std::string mode = "full";
  std::string subtasks = "dst,acd,dag,rg";
  int workers = 1;
  std::string out;
  bool trace = false;
  ResourceFlags res;
  ProviderFlags prov;
};

int cmd_run(const RunFlags& f, const std::string& effective_config) {
  RunConfig cfg;
  cfg.mode = parse_dst_mode(f.mode);
  cfg.subtasks = parse_subtasks(f.subtasks);
  cfg.workers = f.workers;
  cfg.trace = f.trace;

  std::set<std::string> languages = parse_languages(f.lang);
  const auto turns = load_split(f.split, languages);
  auto library = load_library(f.res);
  Provider provider = make_provider(f.prov, library->format_version());
  const PipelineSet pipelines = make_pipelines(languages, f.res, f.prov, provider.client, library);

  const fs::path out(f.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());
  const fs::path partial = out / "results.ndrec.partial";
  cfg.checkpoint = partial;

  const SplitRun run = run_split(turns, pipelines, cfg);

  std::string results;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const auto& p = *pipelines.at(turns[i].language);
    results += result_to_json(run.results[i], turns[i], p.grammar(), cfg.trace)
                   .dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    results += '\n';
  }
  write_file(out / "results.ndrec", results);
  fs::remove(partial, ec);
  write_file(out / "report.md", render_report(run.reports, ReportFormat::kMarkdown));
  write_file(out / "report.csv", render_report(run.reports, ReportFormat::kCsv));
  write_file(out / "report.json", render_report(run.reports, ReportFormat::kJson));
  export_worksheet(run.mismatches, out / "mismatches.tsv");
  write_file(out / "effective-config.toml", effective_config);

  std::cout << render_report(run.reports, ReportFormat::kMarkdown);
  print_cache_summary(provider);
  return 0;
}

struct AblateFlags {
  std::string lang;
  std::string split;
  std::string modes = "full,no_norm,dict_norm,naive";
  std::string format = "markdown";
  int workers = 1;
  std::string out;
  ResourceFlags res;
  ProviderFlags prov;
};

int cmd_ablate(const AblateFlags& f) {
  std::vector<DstMode> modes;
  std::stringstream ss(f.modes);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = text::trim(item);
    if (!item.empty()) modes.push_back(parse_dst_mode(item));
  }
  if (modes.empty()) throw ConfigError("no ablation mode selected");
  const ReportFormat format = parse_report_format(f.format);
  std::set<std::string> languages = parse_languages(f.lang);
  const auto turns = load_split(f.split, languages);
  auto library = load_library(f.res);
  Provider provider = make_provider(f.prov, library->format_version());
  const PipelineSet pipelines = make_pipelines(languages, f.res, f.prov, provider.client, library);
  const std::string table = render_ablation(run_ablation(turns, pipelines, modes, f.workers), format);
  if (!f.out.empty()) write_file(f.out, table);
  std::cout << table;
  print_cache_summary(provider);
  return 0;
}

struct ValidateFlags {
  std::string path;
  std::string kind = "turns";
  std::string lang;
};

int cmd_validate(const ValidateFlags& f) {
  if (f.kind == "turns") {
    std::optional<std::string> lang;
    if (!f.lang.empty()) lang = f.lang;
    const TurnLoad load = load_turns(f.path, lang);
    if (!load.report.ok()) {
      std::cout << load.report.to_string();
      std::cout << load.report.issues.size() << " invalid record(s), " << load.records.size() << " valid\n";
      return 1;
    }
    std::cout << "ok: " << load.records.size() << " turn(s)\n";
    return 0;
  }
  if (f.lang.empty()) throw ConfigError("--lang is required for --kind " + f.kind);
  try {
    if (f.kind == "ontology") {
      const Ontology o = Ontology::load(f.path, f.lang);
      std::cout << "ok: " << o.domains().size() << " domain(s), " << o.dictionary_size() << " dictionary entries\n";
    } else {
      const FewShotBank b = load_fewshot_bank(f.path, f.lang);
      std::cout << "ok: " << b.domain_selection.size() << " domain-selection, " << b.state_example_count()
                << " state-generation, " << b.normalization.size() << " normalization, " << b.acd.size()
                << " acd, " << b.dag.size() << " dag, " << b.rg.size() << " rg example(s)\n";
    }
  } catch (const ValidationError& e) {
    std::cout << e.what() << "\n";
    return 1;
  } catch (const FormatError& e) {
    std::cout << e.what() << "\n";
    return 1;
  }
  return 0;
}

struct InspectFlags {
  std::string split;
  std::string id;
  std::string mode = "full";
  std::string subtasks = "dst,acd,dag,rg";
  bool trace = false;
  ResourceFlags res;
  ProviderFlags prov;
};

int cmd_inspect(const InspectFlags& f) {
  const auto turns = load_turns_strict(f.split);
  const TurnRecord* turn = nullptr;
  for (const auto& t : turns) {
    if (t.id() == f.id) turn = &t;
  }
  if (!turn) {
    std::cerr << "polytod: no turn with id '" << f.id << "' in " << f.split << "\n";
    return 1;
  }
  RunConfig cfg;
  cfg.mode = parse_dst_mode(f.mode);
  cfg.subtasks = parse_subtasks(f.subtasks);
  cfg.trace = true;
  auto library = load_library(f.res);
  Provider provider = make_provider(f.prov, library->format_version());
  const PipelineSet pipelines = make_pipelines({turn->language}, f.res, f.prov, provider.client, library);
  const SplitRun run = run_split({*turn}, pipelines, cfg);
  const TurnResult& r = run.results.front();
  const auto& p = *pipelines.at(turn->language);
  if (f.trace) {
    if (r.dst) {
      for (const auto& t : r.dst->trace) print_trace(std::cout, t);
    }
    for (const auto* o : {&r.acd, &r.dag, &r.rg}) {
      if (*o) print_trace(std::cout, (*o)->trace);
    }
    std::cout << "=== result\n";
  }
  std::cout << result_to_json(r, *turn, p.grammar(), false).dump(2, ' ', false,
                                                                 nlohmann::json::error_handler_t::replace)
            << "\n";
  return 0;
}

struct CacheFlags {
  std::string cache_dir;
  std::string model;
};

int cmd_cache(const std::string& action, const CacheFlags& f) {
  std::optional<fs::path> dir = f.cache_dir.empty() ? default_cache_dir() : std::optional<fs::path>(f.cache_dir);
  if (!dir) throw ConfigError("no cache directory; pass --cache-dir");
  ResponseCache cache(*dir);
  if (action == "stats") {
    const CacheStats s = cache.scan();
    std::cout << "directory: " << dir->string() << "\nentries: " << s.entries << "\nbytes: " << s.bytes << "\n";
  } else {
    std::optional<std::string> model;
    if (!f.model.empty()) model = f.model;
    std::cout << "removed " << cache.clear(model) << " entries\n";
  }
  return 0;
}

struct AnnotateFlags {
  std::string run_dir;
  std::string out;
  std::string worksheet;
};

int cmd_annotate_export(const AnnotateFlags& f) {
  const fs::path results = fs::path(f.run_dir) / "results.ndrec";
  std::ifstream in(results);
  if (!in) throw ConfigError("cannot open " + results.string());
  std::vector<MismatchRecord> mismatches;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.contains("dst") || j["dst"]["correct"].get<bool>()) continue;
      const auto& d = j["dst"];
      MismatchRecord m;
      m.turn_id = j["turn_id"].get<std::string>();
      m.language = j["language"].get<std::string>();
      m.predicted = d["predicted"].is_string() ? d["predicted"].get<std::string>()
                                               : "[" + d["failure"]["kind"].get<std::string>() + " failure] " +
                                                     d["normalized_state"].get<std::string>();
      m.gold = d["gold"].get<std::string>();
      auto cls = parse_error_class(d["mismatch_class"].get<std::string>());
      if (!cls) throw FormatError("unknown mismatch class");
      m.machine_class = *cls;
      mismatches.push_back(std::move(m));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(results.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (f.out.empty()) {
    std::cout << render_worksheet(mismatches);
  } else {
    export_worksheet(mismatches, f.out);
    std::cerr << mismatches.size() << " mismatch(es) written to " << f.out << "\n";
  }
  return 0;
}

int cmd_annotate_apply(const AnnotateFlags& f) {
  const fs::path report = fs::path(f.run_dir) / "report.json";
  std::ifstream in(report);
  if (!in) throw ConfigError("cannot open " + report.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const auto reports = parse_report_json(ss.str());
  const auto worksheet = read_worksheet(f.worksheet.empty() ? fs::path(f.run_dir) / "mismatches.tsv"
                                                            : fs::path(f.worksheet));
  const std::string table = render_adjusted(apply_annotations(reports, worksheet));
  if (!f.out.empty()) write_file(f.out, table);
  std::cout << table;
  return 0;
}

struct ConvertFlags {
  std::string dump;
  std::string mapping;
  std::string out;
};

int cmd_convert(const ConvertFlags& f) {
  std::ifstream in(f.mapping);
  if (!in) throw ConfigError("cannot open mapping " + f.mapping);
  nlohmann::json mapping;
  try {
    mapping = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(f.mapping + ": " + e.what());
  }
  const std::size_t n = convert_external(f.dump, mapping, f.out);
  std::cout << "wrote " << n << " turn(s) to " << f.out << "\n";
  return 0;
}

struct ChatFlags {
  std::string lang = "en";
  ResourceFlags res;
  ProviderFlags prov;
};

int cmd_chat(const ChatFlags& f) {
  auto library = load_library(f.res);
  Provider provider = make_provider(f.prov, library->format_version());
  const PipelineSet pipelines = make_pipelines({f.lang}, f.res, f.prov, provider.client, library);
  const Pipeline& p = *pipelines.at(f.lang);

  TurnRecord turn;
  turn.dialogue_id = "chat";
  turn.language = f.lang;
  std::cout << "polytod chat (" << language_name(f.lang) << "). /reset clears the state, /quit exits.\n";
  std::string line;
  while (std::cout << "user> " << std::flush, std::getline(std::cin, line)) {
    line = text::trim(line);
    if (line.empty()) continue;
    if (line == "/quit" || line == "/exit") break;
    if (line == "/reset") {
      turn = TurnRecord{};
      turn.dialogue_id = "chat";
      turn.language = f.lang;
      std::cout << "state: null\n";
      continue;
    }
    turn.user_utterance = line;
    const DstOutcome dst = p.run_dst(turn, NormalizationMode::kLlm);
    if (const DialogueState* s = dst.state()) {
      turn.gold_state = *s;
    } else {
      std::cout << "(state not updated: " << dst.failure()->message << ")\n";
      turn.gold_state = turn.prev_gold_state;
    }
    std::cout << "state: " << serialize_state(turn.gold_state, p.grammar()) << "\n";
    const SubtaskOutcome acd = p.run_acd(turn);
    turn.gold_api_call = acd.api_call.value_or(false);
    turn.gold_api_result.reset();
    const SubtaskOutcome dag = p.run_dag(turn);
    try {
      turn.gold_agent_acts = parse_acts(dag.output, p.grammar());
    } catch (const ParseError&) {
      turn.gold_agent_acts.clear();
    }
    std::cout << "acts: " << (dag.output.empty() ? "-" : dag.output) << "\n";
    const SubtaskOutcome rg = p.run_rg(turn);
    std::cout << "agent> " << (rg.error ? "(" + *rg.error + ")" : rg.output) << "\n";

    turn.prev_gold_state = turn.gold_state;
    turn.prev_agent_acts.push_back(turn.gold_agent_acts);
    if (turn.prev_agent_acts.size() > 2) turn.prev_agent_acts.erase(turn.prev_agent_acts.begin());
    ++turn.turn_index;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual task-oriented dialogue evaluation with hierarchical prompting", "polytod"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "Evaluate a split turn by turn");
  run_cmd->add_option("--lang", run.lang, "Comma-separated languages to keep (default: all in the split)");
  run_cmd->add_option("--split", run.split, "Canonical turn file (NDJSON)")->required();
  run_cmd->add_option("--mode", run.mode, "full, no_norm, dict_norm or naive")->capture_default_str();
  run_cmd->add_option("--subtasks", run.subtasks, "Comma-separated subset of dst,acd,dag,rg")->capture_default_str();
  run_cmd->add_option("--workers", run.workers, "Concurrent turns")->check(CLI::PositiveNumber)->capture_default_str();
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_flag("--trace", run.trace, "Keep per-stage prompts in results.ndrec");
  add_resource_flags(run_cmd, run.res);
  add_provider_flags(run_cmd, run.prov);

  AblateFlags ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "DST accuracy for each pipeline configuration");
  ablate_cmd->add_option("--lang", ablate.lang, "Comma-separated languages to keep (default: all in the split)");
  ablate_cmd->add_option("--split", ablate.split, "Canonical turn file (NDJSON)")->required();
  ablate_cmd->add_option("--modes", ablate.modes, "Comma-separated modes")->capture_default_str();
  ablate_cmd->add_option("--format", ablate.format, "markdown, csv or json")->capture_default_str();
  ablate_cmd->add_option("--workers", ablate.workers, "Concurrent turns")->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--out", ablate.out, "Also write the table to this file");
  add_resource_flags(ablate_cmd, ablate.res);
  add_provider_flags(ablate_cmd, ablate.prov);

  ValidateFlags validate;
  auto* validate_cmd = app.add_subcommand("validate-data", "Check a turn file, ontology or few-shot bank");
  validate_cmd->add_option("path", validate.path, "File to check")->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--kind", validate.kind, "turns, ontology or bank")
      ->check(CLI::IsMember({"turns", "ontology", "bank"}))
      ->capture_default_str();
  validate_cmd->add_option("--lang", validate.lang, "Expected language");

  InspectFlags inspect;
  auto* inspect_cmd = app.add_subcommand("inspect-turn", "Run one turn and show what each stage saw");
  inspect_cmd->add_option("--split", inspect.split, "Canonical turn file (NDJSON)")->required();
  inspect_cmd->add_option("--id", inspect.id, "Turn id, dialogue_id:turn_index")->required();
  inspect_cmd->add_option("--mode", inspect.mode, "full, no_norm, dict_norm or naive")->capture_default_str();
  inspect_cmd->add_option("--subtasks", inspect.subtasks, "Comma-separated subset of dst,acd,dag,rg");
  inspect_cmd->add_flag("--trace", inspect.trace, "Print every prompt and response");
  add_resource_flags(inspect_cmd, inspect.res);
  add_provider_flags(inspect_cmd, inspect.prov);

  CacheFlags cache;
  std::string cache_action;
  auto* cache_cmd = app.add_subcommand("cache", "Inspect or clear the response cache");
  cache_cmd->add_option("action", cache_action, "stats or clear")
      ->required()
      ->check(CLI::IsMember({"stats", "clear"}));
  cache_cmd->add_option("--cache-dir", cache.cache_dir, "Cache directory");
  cache_cmd->add_option("--model", cache.model, "clear: only entries of this model");

  AnnotateFlags annotate;
  std::string annotate_action;
  auto* annotate_cmd = app.add_subcommand("annotate", "Human mismatch annotation worksheet");
  annotate_cmd->add_option("action", annotate_action, "export or apply")
      ->required()
      ->check(CLI::IsMember({"export", "apply"}));
  annotate_cmd->add_option("--run", annotate.run_dir, "Output directory of a previous run")->required();
  annotate_cmd->add_option("--worksheet", annotate.worksheet, "apply: annotated worksheet (default: <run>/mismatches.tsv)");
  annotate_cmd->add_option("--out", annotate.out, "Write the result here instead of stdout");

  ConvertFlags convert;
  auto* convert_cmd = app.add_subcommand("convert", "Map an external dataset dump onto canonical turns");
  convert_cmd->add_option("--dump", convert.dump, "External dump (JSON or NDJSON)")->required()->check(CLI::ExistingFile);
  convert_cmd->add_option("--mapping", convert.mapping, "Field mapping config (JSON)")->required()->check(CLI::ExistingFile);
  convert_cmd->add_option("--out", convert.out, "Canonical turn file to write")->required();

  ChatFlags chat;
  auto* chat_cmd = app.add_subcommand("chat", "Interactive single-turn pipeline demo");
  chat_cmd->add_option("--lang", chat.lang, "Language")->capture_default_str();
  add_resource_flags(chat_cmd, chat.res);
  add_provider_flags(chat_cmd, chat.prov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run, run_cmd->config_to_str(true, false));
    if (*ablate_cmd) return cmd_ablate(ablate);
    if (*validate_cmd) return cmd_validate(validate);
    if (*inspect_cmd) return cmd_inspect(inspect);
    if (*cache_cmd) return cmd_cache(cache_action, cache);
    if (*annotate_cmd) {
      return annotate_action == "export" ? cmd_annotate_export(annotate) : cmd_annotate_apply(annotate);
    }
    if (*convert_cmd) return cmd_convert(convert);
    if (*chat_cmd) return cmd_chat(chat);
  } catch (const Error& e) {
    std::cerr << "polytod: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitUsage;
}
