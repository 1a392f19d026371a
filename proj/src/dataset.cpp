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

#include "polytod/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "polytod/errors.hpp"
#include "polytod/ontology.hpp"
#include "polytod/text.hpp"

namespace polytod {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<std::string>& supported_languages() {
  static const std::vector<std::string> kLanguages = {"zh", "en", "fr", "hi", "ko", "en-hi"};
  return kLanguages;
}

bool is_supported_language(std::string_view code) {
  const auto& langs = supported_languages();
  return std::find(langs.begin(), langs.end(), code) != langs.end();
}

std::string TurnRecord::id() const { return dialogue_id + ":" + std::to_string(turn_index); }

std::string ValidationReport::to_string() const {
  std::ostringstream out;
  for (const auto& issue : issues) out << "line " << issue.line << ": " << issue.message << "\n";
  return out.str();
}

namespace {

// Collects problems for one record instead of stopping at the first one.
class FieldReader {
 public:
  FieldReader(const json& j, std::vector<std::string>& problems) : j_(j), problems_(problems) {}

  const json* get(const char* name, bool required = true) {
    if (!j_.is_object() || !j_.contains(name) || (required && j_[name].is_null())) {
      if (required) problems_.push_back(std::string("missing field '") + name + "'");
      return nullptr;
    }
    return &j_[name];
  }

  std::string string(const char* name) {
    const json* v = get(name);
    if (!v) return {};
    if (!v->is_string()) {
      problems_.push_back(std::string("field '") + name + "' must be a string");
      return {};
    }
    return v->get<std::string>();
  }

  std::optional<DialogueState> state(const char* name, const GrammarOptions& g) {
    const json* v = get(name);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      problems_.push_back(std::string("field '") + name + "' must be a string");
      return std::nullopt;
    }
    try {
      return parse_state(v->get<std::string>(), g);
    } catch (const ParseError& e) {
      problems_.push_back(std::string("field '") + name + "': " + e.what());
      return std::nullopt;
    }
  }

  std::optional<AgentActs> acts_string(const json& v, const std::string& what,
                                       const GrammarOptions& g) {
    if (!v.is_string()) {
      problems_.push_back(what + " must be a string");
      return std::nullopt;
    }
    try {
      return parse_acts(v.get<std::string>(), g);
    } catch (const ParseError& e) {
      problems_.push_back(what + ": " + e.what());
      return std::nullopt;
    }
  }

  std::vector<std::string>& problems() { return problems_; }

 private:
  const json& j_;
  std::vector<std::string>& problems_;
};

std::vector<AgentActs> read_recent_acts(FieldReader& r, const json* v, const std::string& what,
                                        const GrammarOptions& g) {
  std::vector<AgentActs> out;
  if (!v) return out;
  if (!v->is_array()) {
    r.problems().push_back(what + " must be an array of act strings");
    return out;
  }
  if (v->size() > 2) r.problems().push_back(what + " holds more than two entries");
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (auto acts = r.acts_string((*v)[i], what + "[" + std::to_string(i) + "]", g)) {
      out.push_back(std::move(*acts));
    }
  }
  return out;
}

}  // namespace

TurnRecord turn_from_json(const json& j, const GrammarOptions& grammar) {
  std::vector<std::string> problems;
  if (!j.is_object()) throw ValidationError("turn record must be an object", {});
  FieldReader r(j, problems);
  TurnRecord t;
  t.dialogue_id = r.string("dialogue_id");
  if (const json* idx = r.get("turn_index")) {
    if (idx->is_number_integer() && idx->get<long long>() >= 0) {
      t.turn_index = idx->get<int>();
    } else {
      problems.push_back("field 'turn_index' must be a non-negative integer");
    }
  }
  t.language = r.string("language");
  if (!t.language.empty() && !is_supported_language(t.language)) {
    problems.push_back("unsupported language '" + t.language + "'");
  }
  t.user_utterance = r.string("user_utterance");
  t.prev_agent_acts = read_recent_acts(r, r.get("prev_agent_acts"), "field 'prev_agent_acts'",
                                       grammar);
  if (auto s = r.state("prev_gold_state", grammar)) t.prev_gold_state = std::move(*s);
  if (auto s = r.state("gold_state", grammar)) t.gold_state = std::move(*s);
  if (const json* api = r.get("gold_api_call")) {
    if (api->is_boolean()) {
      t.gold_api_call = api->get<bool>();
    } else {
      problems.push_back("field 'gold_api_call' must be a boolean");
    }
  }
  if (const json* res = r.get("gold_api_result", false); res && !res->is_null()) {
    if (res->is_string()) {
      t.gold_api_result = res->get<std::string>();
    } else {
      problems.push_back("field 'gold_api_result' must be a string or null");
    }
  }
  if (const json* acts = r.get("gold_agent_acts")) {
    if (auto parsed = r.acts_string(*acts, "field 'gold_agent_acts'", grammar)) {
      t.gold_agent_acts = std::move(*parsed);
    }
  }
  t.gold_response = r.string("gold_response");
  if (t.turn_index == 0 && (!t.prev_agent_acts.empty() || !t.prev_gold_state.empty())) {
    problems.push_back("turn 0 must have no previous acts and a null previous state");
  }
  if (!problems.empty()) {
    throw ValidationError("invalid turn record " + t.id(), std::move(problems));
  }
  return t;
}

ordered_json turn_to_json(const TurnRecord& t, const GrammarOptions& grammar) {
  ordered_json j;
  j["dialogue_id"] = t.dialogue_id;
  j["turn_index"] = t.turn_index;
  j["language"] = t.language;
  j["user_utterance"] = t.user_utterance;
  j["prev_agent_acts"] = ordered_json::array();
  for (const auto& acts : t.prev_agent_acts) j["prev_agent_acts"].push_back(serialize_acts(acts, grammar));
  j["prev_gold_state"] = serialize_state(t.prev_gold_state, grammar);
  j["gold_state"] = serialize_state(t.gold_state, grammar);
  j["gold_api_call"] = t.gold_api_call;
  j["gold_api_result"] = t.gold_api_result ? ordered_json(*t.gold_api_result) : ordered_json(nullptr);
  j["gold_agent_acts"] = serialize_acts(t.gold_agent_acts, grammar);
  j["gold_response"] = t.gold_response;
  return j;
}

std::string turn_to_line(const TurnRecord& turn, const GrammarOptions& grammar) {
  return turn_to_json(turn, grammar).dump(-1, ' ', false, json::error_handler_t::replace);
}

TurnLoad load_turns(const std::filesystem::path& path, const std::optional<std::string>& language,
                    const GrammarOptions& grammar) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open turn file " + path.string());
  TurnLoad out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      out.report.issues.push_back({lineno, std::string("not a JSON record: ") + e.what()});
      continue;
    }
    if (language && j.is_object() && j.value("language", std::string()) != *language) continue;
    try {
      out.records.push_back(turn_from_json(j, grammar));
    } catch (const ValidationError& e) {
      out.report.issues.push_back({lineno, e.what()});
    }
  }
  return out;
}

std::vector<TurnRecord> load_turns_strict(const std::filesystem::path& path,
                                          const std::optional<std::string>& language,
                                          const GrammarOptions& grammar) {
  TurnLoad load = load_turns(path, language, grammar);
  if (!load.report.ok()) {
    std::vector<std::string> problems;
    for (const auto& issue : load.report.issues) {
      problems.push_back("line " + std::to_string(issue.line) + ": " + issue.message);
    }
    throw ValidationError(path.string() + " has invalid records", std::move(problems));
  }
  return std::move(load.records);
}

// Few-shot banks -----------------------------------------------------------

const std::vector<StateGenerationExample>* FewShotBank::state_examples(
    std::string_view domain) const {
  for (const auto& [d, examples] : state_generation) {
    if (d == domain) return &examples;
  }
  return nullptr;
}

std::size_t FewShotBank::state_example_count() const {
  std::size_t n = 0;
  for (const auto& [d, examples] : state_generation) n += examples.size();
  return n;
}

namespace {

class BankReader {
 public:
  BankReader(std::string_view language, const BankOptions& opts)
      : language_(language),
        grammar_(opts.grammar),
        domains_(opts.domain_set.empty() ? default_domains() : opts.domain_set) {}

  void check_language(const ordered_json& ex, const std::string& where) {
    if (ex.contains("lang") && ex["lang"] != language_) {
      problems.push_back(where + ": example language '" + ex["lang"].get<std::string>() +
                         "' differs from bank language '" + language_ + "'");
    }
  }

  std::string str(const ordered_json& ex, const char* key, const std::string& where) {
    if (!ex.contains(key) || !ex[key].is_string()) {
      problems.push_back(where + ": missing string '" + key + "'");
      return {};
    }
    return ex[key].get<std::string>();
  }

  DialogueState state(const ordered_json& ex, const char* key, const std::string& where) {
    std::string raw = str(ex, key, where);
    try {
      return parse_state(raw, grammar_);
    } catch (const ParseError& e) {
      problems.push_back(where + "." + key + ": " + e.what());
      return {};
    }
  }

  AgentActs acts(const ordered_json& v, const std::string& where) {
    if (!v.is_string()) {
      problems.push_back(where + ": act entry must be a string");
      return {};
    }
    try {
      return parse_acts(v.get<std::string>(), grammar_);
    } catch (const ParseError& e) {
      problems.push_back(where + ": " + e.what());
      return {};
    }
  }

  TurnContext context(const ordered_json& ex, const std::string& where) {
    check_language(ex, where);
    TurnContext ctx;
    ctx.state = state(ex, "state", where);
    if (ex.contains("acts")) {
      const auto& a = ex["acts"];
      if (!a.is_array() || a.size() > 2) {
        problems.push_back(where + ": 'acts' must be an array of at most two act strings");
      } else {
        for (std::size_t i = 0; i < a.size(); ++i) {
          ctx.recent_acts.push_back(acts(a[i], where + ".acts[" + std::to_string(i) + "]"));
        }
      }
    }
    ctx.user = str(ex, "user", where);
    return ctx;
  }

  bool known_domain(const std::string& d) const {
    return std::find(domains_.begin(), domains_.end(), d) != domains_.end();
  }

  const std::vector<std::string>& domains() const { return domains_; }

  std::vector<std::string> problems;

 private:
  std::string language_;
  GrammarOptions grammar_;
  std::vector<std::string> domains_;
};

const ordered_json& array_field(const ordered_json& doc, const char* key) {
  static const ordered_json kEmpty = ordered_json::array();
  if (!doc.contains(key)) return kEmpty;
  if (!doc[key].is_array()) throw FormatError(std::string("bank field '") + key + "' must be an array");
  return doc[key];
}

}  // namespace

FewShotBank fewshot_bank_from_json(const ordered_json& doc, std::string_view language,
                                   const BankOptions& opts) {
  if (!doc.is_object()) throw FormatError("few-shot bank must be a JSON object");
  BankReader r(language, opts);
  FewShotBank bank;
  bank.language = doc.value("language", std::string());
  if (bank.language != language) {
    r.problems.push_back("bank language '" + bank.language + "' does not match requested '" +
                         std::string(language) + "'");
  }

  const auto& ds = array_field(doc, "domain_selection");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::string where = "domain_selection[" + std::to_string(i) + "]";
    DomainSelectionExample ex;
    ex.context = r.context(ds[i], where);
    if (!ds[i].contains("domains") || !ds[i]["domains"].is_array() || ds[i]["domains"].empty()) {
      r.problems.push_back(where + ": 'domains' must be a non-empty array");
    } else {
      for (const auto& d : ds[i]["domains"]) {
        std::string name = d.is_string() ? d.get<std::string>() : d.dump();
        if (!r.known_domain(name)) r.problems.push_back(where + ": unknown domain '" + name + "'");
        ex.domains.push_back(std::move(name));
      }
    }
    bank.domain_selection.push_back(std::move(ex));
  }

  if (doc.contains("state_generation")) {
    if (!doc["state_generation"].is_object()) {
      throw FormatError("bank field 'state_generation' must be an object keyed by domain");
    }
    for (const auto& [domain, list] : doc["state_generation"].items()) {
      if (!r.known_domain(domain)) r.problems.push_back("state_generation: unknown domain '" + domain + "'");
      if (!list.is_array()) throw FormatError("state_generation." + domain + " must be an array");
      std::vector<StateGenerationExample> examples;
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string where = "state_generation." + domain + "[" + std::to_string(i) + "]";
        StateGenerationExample ex;
        ex.context = r.context(list[i], where);
        ex.output = r.state(list[i], "output", where);
        examples.push_back(std::move(ex));
      }
      bank.state_generation.emplace_back(domain, std::move(examples));
    }
  }

  const auto& norm = array_field(doc, "normalization");
  for (std::size_t i = 0; i < norm.size(); ++i) {
    const std::string where = "normalization[" + std::to_string(i) + "]";
    r.check_language(norm[i], where);
    bank.normalization.push_back({r.state(norm[i], "input", where), r.state(norm[i], "output", where)});
  }

  const auto& acd = array_field(doc, "acd");
  for (std::size_t i = 0; i < acd.size(); ++i) {
    const std::string where = "acd[" + std::to_string(i) + "]";
    AcdExample ex;
    ex.context = r.context(acd[i], where);
    if (!acd[i].contains("api_call") || !acd[i]["api_call"].is_boolean()) {
      r.problems.push_back(where + ": 'api_call' must be a boolean");
    } else {
      ex.api_call = acd[i]["api_call"].get<bool>();
    }
    bank.acd.push_back(std::move(ex));
  }

  const auto& dag = array_field(doc, "dag");
  for (std::size_t i = 0; i < dag.size(); ++i) {
    const std::string where = "dag[" + std::to_string(i) + "]";
    DagExample ex;
    ex.context = r.context(dag[i], where);
    if (dag[i].contains("api_result") && dag[i]["api_result"].is_string()) {
      ex.api_result = dag[i]["api_result"].get<std::string>();
    }
    ex.output = r.acts(dag[i].value("output", ordered_json()), where + ".output");
    bank.dag.push_back(std::move(ex));
  }

  const auto& rg = array_field(doc, "rg");
  for (std::size_t i = 0; i < rg.size(); ++i) {
    const std::string where = "rg[" + std::to_string(i) + "]";
    r.check_language(rg[i], where);
    RgExample ex;
    ex.user = r.str(rg[i], "user", where);
    ex.agent_acts = r.acts(rg[i].value("agent_acts", ordered_json()), where + ".agent_acts");
    ex.output = r.str(rg[i], "output", where);
    bank.rg.push_back(std::move(ex));
  }

  if (!r.problems.empty()) {
    throw ValidationError("few-shot bank for '" + std::string(language) + "' is invalid",
                          std::move(r.problems));
  }

  std::set<std::string> covered;
  for (const auto& ex : bank.domain_selection) covered.insert(ex.domains.begin(), ex.domains.end());
  std::vector<std::string> uncovered;
  for (const auto& d : r.domains()) {
    if (!covered.contains(d)) uncovered.push_back(d);
  }
  if (!uncovered.empty()) throw CoverageError(std::move(uncovered));
  return bank;
}

FewShotBank load_fewshot_bank(const std::filesystem::path& path, std::string_view language,
                              const BankOptions& opts) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open few-shot bank " + path.string());
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return fewshot_bank_from_json(doc, language, opts);
}

// External dumps -----------------------------------------------------------

namespace {

constexpr const char* kRequiredFields[] = {
    "dialogue_id",     "turn_index", "language",      "user_utterance",  "prev_agent_acts",
    "prev_gold_state", "gold_state", "gold_api_call", "gold_agent_acts", "gold_response"};
constexpr const char* kOptionalFields[] = {"gold_api_result"};

struct SourceTurn {
  const json* dialogue;
  const json* turn;
};

std::vector<json> read_dump(const std::filesystem::path& path, const json& mapping) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dump " + path.string());
  std::vector<json> docs;
  const std::string input = mapping.value("input", std::string("json"));
  if (input == "ndjson") {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (text::trim(line).empty()) continue;
      try {
        docs.push_back(json::parse(line));
      } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  } else if (input == "json") {
    try {
      docs.push_back(json::parse(in));
    } catch (const json::parse_error& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  } else {
    throw FormatError("mapping 'input' must be 'json' or 'ndjson'");
  }
  return docs;
}

const json* at_pointer(const json& doc, const std::string& pointer) {
  try {
    const json::json_pointer p(pointer);
    return doc.contains(p) ? &doc.at(p) : nullptr;
  } catch (const json::exception&) {
    return nullptr;
  }
}

json coerce(const std::string& field, const json& v, const GrammarOptions& grammar) {
  if (field == "turn_index" && v.is_string()) return std::stoi(v.get<std::string>());
  if (field == "gold_api_call" && v.is_string()) {
    const std::string s = text::ascii_lower(text::trim(v.get<std::string>()));
    if (s == "yes" || s == "true") return true;
    if (s == "no" || s == "false") return false;
  }
  if (field == "gold_api_result" && !v.is_string() && !v.is_null()) return v.dump();
  if (field == "gold_agent_acts" && v.is_array()) {
    std::vector<std::string> parts;
    for (const auto& a : v) parts.push_back(a.is_string() ? a.get<std::string>() : a.dump());
    return text::join(parts, grammar.separator);
  }
  return v;
}

}  // namespace

std::size_t convert_external(const std::filesystem::path& dump, const json& mapping,
                             const std::filesystem::path& out, const GrammarOptions& grammar) {
  const json fields = mapping.value("fields", json::object());
  const json defaults = mapping.value("defaults", json::object());
  std::vector<std::string> missing;
  for (const char* f : kRequiredFields) {
    if (!fields.contains(f) && !defaults.contains(f)) missing.emplace_back(f);
  }
  if (!missing.empty()) throw MappingError(std::move(missing));

  const std::vector<json> docs = read_dump(dump, mapping);
  std::vector<SourceTurn> sources;
  const std::string dialogues_ptr = mapping.value("dialogues", std::string());
  const std::string turns_ptr = mapping.value("turns", std::string());
  for (const auto& doc : docs) {
    const json* dialogues = dialogues_ptr.empty() ? &doc : at_pointer(doc, dialogues_ptr);
    if (!dialogues) throw FormatError("dump has no value at '" + dialogues_ptr + "'");
    auto add_dialogue = [&](const json& dialogue) {
      const json* turns = turns_ptr.empty() ? &dialogue : at_pointer(dialogue, turns_ptr);
      if (!turns) throw FormatError("dialogue has no value at '" + turns_ptr + "'");
      if (turns->is_array()) {
        for (const auto& t : *turns) sources.push_back({&dialogue, &t});
      } else {
        sources.push_back({&dialogue, turns});
      }
    };
    if (dialogues->is_array() && !turns_ptr.empty()) {
      for (const auto& d : *dialogues) add_dialogue(d);
    } else {
      add_dialogue(*dialogues);
    }
  }

  std::map<std::string, int> next_index;
  std::map<std::string, std::pair<std::string, std::vector<std::string>>> history;
  std::vector<std::string> lines;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& src = sources[i];
    auto resolve = [&](const std::string& field) -> std::optional<json> {
      if (!fields.contains(field)) {
        if (defaults.contains(field)) return defaults[field];
        return std::nullopt;
      }
      const std::string spec = fields[field].get<std::string>();
      if (spec.rfind("dialogue:", 0) == 0) {
        const json* v = at_pointer(*src.dialogue, spec.substr(9));
        if (v) return coerce(field, *v, grammar);
      } else if (spec == "@index" || spec == "@previous") {
        return std::nullopt;  // resolved below, needs dialogue_id
      } else if (const json* v = at_pointer(*src.turn, spec)) {
        return coerce(field, *v, grammar);
      }
      if (defaults.contains(field)) return defaults[field];
      return std::nullopt;
    };

    ordered_json rec;
    std::vector<std::string> unresolved;
    auto dialogue_id = resolve("dialogue_id");
    if (dialogue_id && !dialogue_id->is_string()) dialogue_id = json(dialogue_id->dump());
    const std::string did = dialogue_id ? dialogue_id->get<std::string>() : std::string();
    for (const char* f : kRequiredFields) {
      const std::string field(f);
      const std::string spec =
          fields.contains(field) ? fields[field].get<std::string>() : std::string();
      if (field == "dialogue_id") {
        if (dialogue_id) rec[field] = did;
      } else if (spec == "@index") {
        rec[field] = next_index[did];
      } else if (spec == "@previous" && field == "prev_gold_state") {
        auto it = history.find(did);
        rec[field] = it == history.end() ? std::string("null") : it->second.first;
      } else if (spec == "@previous" && field == "prev_agent_acts") {
        auto it = history.find(did);
        ordered_json acts = ordered_json::array();
        if (it != history.end()) {
          const auto& all = it->second.second;
          for (std::size_t k = all.size() > 2 ? all.size() - 2 : 0; k < all.size(); ++k) acts.push_back(all[k]);
        }
        rec[field] = acts;
      } else if (auto v = resolve(field)) {
        rec[field] = *v;
      } else {
        unresolved.push_back(field);
      }
      if (field == "gold_api_call") {
        // gold_api_result sits right after gold_api_call in canonical order.
        for (const char* opt : kOptionalFields) {
          auto v = resolve(opt);
          rec[opt] = v ? *v : json(nullptr);
        }
      }
    }
    if (!unresolved.empty()) {
      problems.push_back("record " + std::to_string(i) + ": no value for " + text::join(unresolved, ", "));
      continue;
    }
    try {
      turn_from_json(json::parse(rec.dump()), grammar);
    } catch (const ValidationError& e) {
      problems.push_back("record " + std::to_string(i) + ": " + e.what());
      continue;
    }
    ++next_index[did];
    auto& h = history[did];
    h.first = rec["gold_state"].get<std::string>();
    h.second.push_back(rec["gold_agent_acts"].get<std::string>());
    lines.push_back(rec.dump(-1, ' ', false, json::error_handler_t::replace));
  }
  if (!problems.empty()) {
    throw ValidationError("conversion produced invalid records", std::move(problems));
  }

  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot write " + out.string());
  for (const auto& l : lines) os << l << "\n";
  return lines.size();
}

}  // namespace polytod
