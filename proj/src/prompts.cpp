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

#include "polytod/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "json.hpp"
#include "polytod/errors.hpp"
#include "polytod/text.hpp"

namespace polytod {

namespace detail {
const std::map<std::string, std::string>& builtin_templates();
}

namespace {

const std::regex& placeholder_re() {
  static const std::regex kRe(R"(\{\{\s*([A-Za-z0-9_]+)\s*\}\})");
  return kRe;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (true) {
    std::size_t eol = s.find('\n', pos);
    if (eol == std::string_view::npos) {
      lines.emplace_back(s.substr(pos));
      break;
    }
    lines.emplace_back(s.substr(pos, eol - pos));
    pos = eol + 1;
  }
  return lines;
}

std::string quote(const std::string& s) { return nlohmann::json(s).dump(-1, ' ', false); }

std::string rstrip(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

Template Template::parse(std::string name, std::string_view source) {
  Template t;
  t.name_ = std::move(name);
  std::string_view body = source;
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
  std::set<std::string> seen;
  for (std::string line : split_lines(body)) {
    bool had_comment = false;
    for (std::size_t open = line.find("{#"); open != std::string::npos; open = line.find("{#", open)) {
      std::size_t close = line.find("#}", open + 2);
      if (close == std::string::npos) {
        throw TemplateError("template '" + t.name_ + "': unterminated comment");
      }
      line.erase(open, close + 2 - open);
      had_comment = true;
    }
    if (had_comment) {
      line = rstrip(line);
      if (text::trim(line).empty()) continue;
    }
    for (std::sregex_iterator it(line.begin(), line.end(), placeholder_re()), end; it != end; ++it) {
      if (seen.insert((*it)[1]).second) t.placeholders_.push_back((*it)[1]);
    }
    t.lines_.push_back(std::move(line));
  }
  return t;
}

std::string Template::render(const TemplateValues& values) const {
  std::vector<std::string> out;
  for (const auto& line : lines_) {
    std::string rendered;
    bool drop = false;
    std::size_t last = 0;
    for (std::sregex_iterator it(line.begin(), line.end(), placeholder_re()), end; it != end; ++it) {
      const std::string key = (*it)[1];
      auto v = values.find(key);
      if (v == values.end()) {
        throw TemplateError("template '" + name_ + "': no value for placeholder '" + key + "'");
      }
      if (!v->second) {
        drop = true;
        break;
      }
      const std::string prefix = line.substr(last, it->position() - last);
      rendered += prefix;
      const bool indent_block = last == 0 && text::trim(prefix).empty();
      const auto value_lines = split_lines(*v->second);
      for (std::size_t i = 0; i < value_lines.size(); ++i) {
        if (i) {
          rendered += '\n';
          if (indent_block && !value_lines[i].empty()) rendered += prefix;
        }
        rendered += value_lines[i];
      }
      last = it->position() + it->length();
    }
    if (drop) continue;
    rendered += line.substr(last);
    out.push_back(std::move(rendered));
  }
  return text::join(out, "\n");
}

// Library -------------------------------------------------------------------

std::shared_ptr<const PromptLibrary> PromptLibrary::from_sources(
    const std::map<std::string, std::string>& sources) {
  auto lib = std::make_shared<PromptLibrary>();
  std::string material;
  for (const auto& [name, source] : sources) {
    lib->templates_.emplace(name, Template::parse(name, source));
    material += name + '\0' + source + '\0';
  }
  for (const char* required : kRequired) {
    if (!lib->templates_.contains(required)) {
      throw ConfigError(std::string("prompt template '") + required + "' is missing");
    }
  }
  lib->format_version_ = "prompts-1:" + text::sha256_hex(material).substr(0, 16);
  return lib;
}

std::shared_ptr<const PromptLibrary> PromptLibrary::builtin() {
  static const auto kBuiltin = from_sources(detail::builtin_templates());
  return kBuiltin;
}

std::shared_ptr<const PromptLibrary> PromptLibrary::load_dir(const std::filesystem::path& dir) {
  std::map<std::string, std::string> sources;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    if (e.path().extension() != ".tmpl") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    sources[e.path().stem().string()] = ss.str();
  }
  if (ec) throw ConfigError("cannot read template directory " + dir.string() + ": " + ec.message());
  return from_sources(sources);
}

const Template& PromptLibrary::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw ConfigError("prompt template '" + name + "' is missing");
  return it->second;
}

// Renderer ------------------------------------------------------------------

PromptRenderer::PromptRenderer(std::shared_ptr<const PromptLibrary> library, RendererOptions opts)
    : library_(std::move(library)), opts_(std::move(opts)) {}

void PromptRenderer::check_language(const PromptContext& ctx, const FewShotBank& bank) const {
  if (ctx.language != bank.language) {
    throw LanguageMismatchError("few-shot bank language '" + bank.language +
                                "' does not match turn language '" + ctx.language + "'");
  }
}

std::string PromptRenderer::context_block(const TurnContext& turn) const {
  std::optional<std::string> two_back, one_back;
  const auto& acts = turn.recent_acts;
  auto render = [&](const AgentActs& a) -> std::optional<std::string> {
    if (a.empty()) return std::nullopt;
    return serialize_acts(a, opts_.grammar);
  };
  if (acts.size() >= 2) {
    two_back = render(acts[acts.size() - 2]);
    one_back = render(acts.back());
  } else if (acts.size() == 1) {
    one_back = render(acts.back());
  }
  return library_->get("turn_context")
      .render({{"state", serialize_state(turn.state, opts_.grammar)},
               {"acts_two_back", two_back},
               {"acts_one_back", one_back},
               {"user", turn.user}});
}

std::string PromptRenderer::domain_selection(const PromptContext& ctx, const FewShotBank& bank) const {
  check_language(ctx, bank);
  if (bank.domain_selection.empty()) throw EmptyBankError("no domain-selection examples");
  std::vector<std::string> examples;
  const Template& ex = library_->get("domain_selection_example");
  for (const auto& e : bank.domain_selection) {
    examples.push_back(ex.render({{"context", context_block(e.context)}, {"domains", text::join(e.domains, ", ")}}));
  }
  return library_->get("domain_selection")
      .render({{"domain_choices", text::join(opts_.domain_choices, ", ")},
               {"examples", text::join(examples, "\n\n")},
               {"input", context_block(ctx.turn)}});
}

std::string PromptRenderer::state_generation(const PromptContext& ctx,
                                             const std::vector<std::string>& domains,
                                             const Ontology& ontology, const FewShotBank& bank) const {
  check_language(ctx, bank);
  if (domains.empty()) throw UnknownDomainError("state generation needs at least one domain");
  std::vector<std::string> sorted = domains;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<std::string> schemas;
  std::vector<std::string> examples;
  const Template& ex = library_->get("state_generation_example");
  for (const auto& d : sorted) {
    const auto* slots = ontology.slots(d);
    if (!slots) throw UnknownDomainError("domain '" + d + "' is not in the ontology");
    std::vector<std::string> names;
    for (const auto& s : *slots) names.push_back(s.name);
    schemas.push_back(d + ": " + text::join(names, ", "));
    if (const auto* list = bank.state_examples(d)) {
      for (const auto& e : *list) {
        examples.push_back(ex.render(
            {{"context", context_block(e.context)}, {"output", serialize_state(e.output, opts_.grammar)}}));
      }
    }
  }
  return library_->get("state_generation")
      .render({{"schemas", text::join(schemas, "\n")},
               {"examples", text::join(examples, "\n\n")},
               {"input", context_block(ctx.turn)}});
}

std::optional<std::string> PromptRenderer::normalization(std::string_view raw_state,
                                                         const std::vector<std::string>& domains,
                                                         const Ontology& ontology,
                                                         const FewShotBank& bank) const {
  const DialogueState raw = parse_state(raw_state, opts_.grammar);
  std::vector<std::string> sorted = domains;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  bool needed = false;
  for (const auto& a : raw.assignments()) {
    if (std::binary_search(sorted.begin(), sorted.end(), a.domain) &&
        ontology.allowed_values(a.domain, a.slot)) {
      needed = true;
      break;
    }
  }
  if (!needed) return std::nullopt;

  std::vector<std::string> schemas;
  for (const auto& d : sorted) {
    const auto* slots = ontology.slots(d);
    if (!slots) continue;
    std::vector<std::string> parts;
    for (const auto& s : *slots) {
      if (!s.enumerated()) continue;
      std::vector<std::string> quoted;
      for (const auto& v : s.allowed_values) quoted.push_back(quote(v));
      parts.push_back(quote(s.name) + ": [" + text::join(quoted, ", ") + "]");
    }
    if (!parts.empty()) schemas.push_back(d + ": " + text::join(parts, ", "));
  }

  std::vector<std::string> examples;
  const Template& ex = library_->get("normalization_example");
  for (const auto& e : bank.normalization) {
    examples.push_back(ex.render({{"input", serialize_state(e.input, opts_.grammar)},
                                  {"output", serialize_state(e.output, opts_.grammar)}}));
  }
  return library_->get("normalization")
      .render({{"enum_schemas", text::join(schemas, "\n")},
               {"examples", text::join(examples, "\n\n")},
               {"raw_state", serialize_state(raw, opts_.grammar)}});
}

std::string PromptRenderer::acd(const PromptContext& ctx, const FewShotBank& bank) const {
  check_language(ctx, bank);
  if (bank.acd.empty()) throw EmptyBankError("no API-call-detection examples in the " + bank.language + " bank");
  std::vector<std::string> examples;
  const Template& ex = library_->get("acd_example");
  for (const auto& e : bank.acd) {
    examples.push_back(ex.render({{"context", context_block(e.context)}, {"answer", e.api_call ? "yes" : "no"}}));
  }
  return library_->get("acd").render({{"examples", text::join(examples, "\n\n")}, {"input", context_block(ctx.turn)}});
}

std::string PromptRenderer::dag(const PromptContext& ctx, const FewShotBank& bank) const {
  check_language(ctx, bank);
  if (bank.dag.empty()) throw EmptyBankError("no dialogue-act examples in the " + bank.language + " bank");
  std::vector<std::string> examples;
  const Template& ex = library_->get("dag_example");
  for (const auto& e : bank.dag) {
    examples.push_back(ex.render({{"context", context_block(e.context)},
                                  {"api_result", e.api_result},
                                  {"output", serialize_acts(e.output, opts_.grammar)}}));
  }
  return library_->get("dag").render({{"examples", text::join(examples, "\n\n")},
                                      {"input", context_block(ctx.turn)},
                                      {"api_result", ctx.api_result}});
}

std::string PromptRenderer::rg(const PromptContext& ctx, const FewShotBank& bank) const {
  check_language(ctx, bank);
  if (bank.rg.empty()) throw EmptyBankError("no response-generation examples in the " + bank.language + " bank");
  std::vector<std::string> examples;
  const Template& ex = library_->get("rg_example");
  for (const auto& e : bank.rg) {
    examples.push_back(ex.render({{"user", e.user},
                                  {"agent_acts", serialize_acts(e.agent_acts, opts_.grammar)},
                                  {"output", e.output}}));
  }
  return library_->get("rg").render({{"examples", text::join(examples, "\n\n")},
                                     {"user", ctx.turn.user},
                                     {"agent_acts", serialize_acts(ctx.acts_to_verbalize, opts_.grammar)}});
}

std::string PromptRenderer::naive_dst(const PromptContext& ctx, const FewShotBank& bank) const {
  check_language(ctx, bank);
  if (bank.state_example_count() == 0) {
    throw EmptyBankError("no state-generation examples in the " + bank.language + " bank");
  }
  std::vector<std::string> examples;
  const Template& ex = library_->get("state_generation_example");
  for (const auto& [domain, list] : bank.state_generation) {
    for (const auto& e : list) {
      examples.push_back(
          ex.render({{"context", context_block(e.context)}, {"output", serialize_state(e.output, opts_.grammar)}}));
    }
  }
  return library_->get("naive_dst").render({{"examples", text::join(examples, "\n\n")}, {"input", context_block(ctx.turn)}});
}

}  // namespace polytod
