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

#include "polytod/pipeline.hpp"

#include <algorithm>
#include <set>

#include "polytod/errors.hpp"
#include "polytod/text.hpp"

namespace polytod {

namespace {

// Trailing punctuation dropped before matching yes/no answers.
const std::vector<std::string>& answer_punctuation() {
  static const std::vector<std::string> kPunct = {".", "!", "?", ",", ";", ":", "。", "！", "？", "，", "।"};
  return kPunct;
}

std::string strip_trailing_punctuation(std::string s) {
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    for (const auto& p : answer_punctuation()) {
      if (s.size() >= p.size() && s.compare(s.size() - p.size(), p.size(), p) == 0) {
        s.erase(s.size() - p.size());
        s = text::trim(s);
        changed = true;
      }
    }
  }
  return s;
}

bool in_lexicon(const std::string& key, const std::vector<std::string>& words) {
  return std::any_of(words.begin(), words.end(),
                     [&](const std::string& w) { return text::lookup_key(w) == key; });
}

std::string first_line(std::string_view s) {
  const std::string t = text::trim(s);
  return text::trim(std::string_view(t).substr(0, t.find('\n')));
}

// Drops a leading echo of the prompt's cue, e.g. "Output:".
std::string strip_cues(std::string s, std::initializer_list<std::string_view> cues) {
  for (auto cue : cues) {
    std::string stripped = text::strip_prefix_ci(s, cue);
    if (stripped.size() != text::trim(s).size()) return stripped;
  }
  return text::trim(s);
}

DstFailure failure(FailureKind kind, std::string message) {
  DstFailure f;
  f.kind = kind;
  f.message = std::move(message);
  return f;
}

}  // namespace

std::string to_string(DstMode mode) {
  switch (mode) {
    case DstMode::kFull: return "full";
    case DstMode::kNoNorm: return "no_norm";
    case DstMode::kDictNorm: return "dict_norm";
    case DstMode::kNaive: return "naive";
  }
  return "full";
}

DstMode parse_dst_mode(std::string_view name) {
  if (name == "full") return DstMode::kFull;
  if (name == "no_norm") return DstMode::kNoNorm;
  if (name == "dict_norm") return DstMode::kDictNorm;
  if (name == "naive") return DstMode::kNaive;
  throw ConfigError("unknown DST mode '" + std::string(name) + "' (expected full, no_norm, dict_norm or naive)");
}

NormalizationMode normalization_of(DstMode mode) {
  switch (mode) {
    case DstMode::kNoNorm: return NormalizationMode::kNone;
    case DstMode::kDictNorm: return NormalizationMode::kDictionary;
    default: return NormalizationMode::kLlm;
  }
}

std::string to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::kSelection: return "selection";
    case FailureKind::kProvider: return "provider";
    case FailureKind::kParse: return "parse";
    case FailureKind::kCanonicalization: return "canonicalization";
    case FailureKind::kEmpty: return "empty";
  }
  return "parse";
}

YesNoLexicon default_lexicon(std::string_view language) {
  if (language == "zh") return {{"是", "是的", "需要", "对", "yes"}, {"否", "不", "不需要", "不是", "no"}};
  if (language == "fr") return {{"oui", "yes"}, {"non", "no"}};
  if (language == "hi") return {{"हाँ", "हां", "yes"}, {"नहीं", "no"}};
  if (language == "ko") return {{"예", "네", "yes"}, {"아니요", "아니오", "no"}};
  if (language == "en-hi") return {{"yes", "haan", "हाँ", "हां"}, {"no", "nahi", "nahin", "नहीं"}};
  return {{"yes", "y", "true"}, {"no", "n", "false"}};
}

std::optional<bool> map_yes_no(std::string_view response, const YesNoLexicon& lexicon) {
  const std::string line = first_line(response);
  std::vector<std::string> candidates{strip_trailing_punctuation(line)};
  const auto tokens = text::split_whitespace(line);
  if (!tokens.empty()) candidates.push_back(strip_trailing_punctuation(tokens.front()));
  for (const auto& c : candidates) {
    const std::string key = text::lookup_key(c);
    if (key.empty()) continue;
    const bool yes = in_lexicon(key, lexicon.yes);
    const bool no = in_lexicon(key, lexicon.no);
    if (yes != no) return yes;
  }
  return std::nullopt;
}

std::variant<DialogueState, DstFailure> postprocess(std::string_view state_text, const Ontology& ontology,
                                                    const GrammarOptions& grammar) {
  DialogueState parsed;
  try {
    parsed = parse_state(state_text, grammar);
  } catch (const ParseError& e) {
    return failure(FailureKind::kParse, e.what());
  }
  DialogueState out;
  for (const auto& a : parsed.assignments()) {
    std::string value = a.value;
    if (const SlotSpec* spec = ontology.find_slot(a.domain, a.slot); spec && spec->enumerated()) {
      auto canonical = ontology.canonical_member(a.domain, a.slot, a.value);
      if (!canonical) {
        DstFailure f = failure(FailureKind::kCanonicalization,
                               "\"" + a.value + "\" is not an allowed value of " + a.domain + "." + a.slot);
        f.domain = a.domain;
        f.slot = a.slot;
        f.value = a.value;
        return f;
      }
      value = *canonical;
    }
    out.set(a.domain, a.slot, {a.relation, value});
  }
  return out;
}

TurnContext dst_context(const TurnRecord& turn) {
  return {turn.prev_gold_state, turn.prev_agent_acts, turn.user_utterance};
}

TurnContext post_state_context(const TurnRecord& turn) {
  return {turn.gold_state, turn.prev_agent_acts, turn.user_utterance};
}

Pipeline::Pipeline(LanguageResources resources, std::shared_ptr<const PromptRenderer> renderer,
                   std::shared_ptr<LlmClient> client, PipelineOptions opts)
    : resources_(std::move(resources)),
      renderer_(std::move(renderer)),
      client_(std::move(client)),
      opts_(std::move(opts)) {
  if (!resources_.ontology || !resources_.bank) throw ConfigError("pipeline needs an ontology and a few-shot bank");
  if (resources_.ontology->language() != resources_.language) {
    throw LanguageMismatchError("ontology language '" + resources_.ontology->language() +
                                "' does not match '" + resources_.language + "'");
  }
  if (resources_.bank->language != resources_.language) {
    throw LanguageMismatchError("few-shot bank language '" + resources_.bank->language +
                                "' does not match '" + resources_.language + "'");
  }
  lexicon_ = opts_.lexicon ? *opts_.lexicon : default_lexicon(resources_.language);
}

void Pipeline::check_mode(DstMode mode) const {
  if (mode == DstMode::kDictNorm && !ontology().has_dictionary()) {
    throw ConfigError("there is no normalization dictionary for language '" + resources_.language + "'");
  }
}

std::string Pipeline::call(const std::string& prompt, int max_tokens) const {
  CompletionRequest req;
  req.model_id = opts_.model_id;
  req.prompt = prompt;
  req.decoding.temperature_milli = opts_.temperature_milli;
  req.decoding.max_output_tokens = max_tokens;
  return client_->complete(req);
}

PromptContext Pipeline::prompt_context(const TurnContext& ctx) const {
  PromptContext p;
  p.language = resources_.language;
  p.turn = ctx;
  return p;
}

std::vector<std::string> Pipeline::select_domains(const TurnContext& ctx, StageTrace* trace) const {
  const std::string prompt = renderer_->domain_selection(prompt_context(ctx), *resources_.bank);
  if (trace) *trace = {"domain_selection", prompt, "", false};
  const std::string response = call(prompt, opts_.max_tokens.domain_selection);
  if (trace) trace->response = response;

  std::string body = strip_cues(text::truncate_at_blank_line(response), {"Domain(s):", "Domains:", "Domain:"});
  std::replace(body.begin(), body.end(), '\n', ',');
  std::vector<std::string> domains;
  std::set<std::string> seen;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t comma = body.find(',', pos);
    if (comma == std::string::npos) comma = body.size();
    std::string name = text::ascii_lower(text::trim(std::string_view(body).substr(pos, comma - pos)));
    while (!name.empty() && (name.back() == '.' || name.back() == ';')) name.pop_back();
    if (ontology().has_domain(name) && seen.insert(name).second) domains.push_back(name);
    pos = comma + 1;
  }
  if (domains.empty()) {
    throw EmptySelectionError("no known domain in domain-selection response \"" + text::trim(response) + "\"");
  }
  return domains;
}

std::string Pipeline::generate_state(const TurnContext& ctx, const std::vector<std::string>& domains,
                                     StageTrace* trace) const {
  const std::string prompt =
      renderer_->state_generation(prompt_context(ctx), domains, ontology(), *resources_.bank);
  if (trace) *trace = {"state_generation", prompt, "", false};
  const std::string response = call(prompt, opts_.max_tokens.state_generation);
  if (trace) trace->response = response;
  return strip_cues(text::truncate_at_blank_line(response), {"Output:"});
}

std::string Pipeline::normalize(std::string_view raw_state, const std::vector<std::string>& domains,
                                NormalizationMode mode, StageTrace* trace) const {
  if (trace) *trace = {"normalization", "", "", true};
  switch (mode) {
    case NormalizationMode::kNone:
      parse_state(raw_state, grammar());
      return std::string(raw_state);
    case NormalizationMode::kDictionary: {
      check_mode(DstMode::kDictNorm);
      const DialogueState raw = parse_state(raw_state, grammar());
      DialogueState out;
      for (const auto& a : raw.assignments()) {
        std::string value = a.value;
        if (const SlotSpec* spec = ontology().find_slot(a.domain, a.slot); spec && spec->enumerated()) {
          if (auto mapped = ontology().dictionary_normalize(a.domain, a.slot, a.value)) value = *mapped;
        }
        out.set(a.domain, a.slot, {a.relation, value});
      }
      std::string text = serialize_state(out, grammar());
      if (trace) trace->response = text;
      return text;
    }
    case NormalizationMode::kLlm: {
      auto prompt = renderer_->normalization(raw_state, domains, ontology(), *resources_.bank);
      if (!prompt) return std::string(raw_state);
      if (trace) *trace = {"normalization", *prompt, "", false};
      const std::string response = call(*prompt, opts_.max_tokens.normalization);
      if (trace) trace->response = response;
      return strip_cues(text::truncate_at_blank_line(response), {"Output:", "Normalized:"});
    }
  }
  return std::string(raw_state);
}

DstOutcome Pipeline::run_dst(const TurnRecord& turn, NormalizationMode mode) const {
  DstOutcome out;
  const TurnContext ctx = dst_context(turn);
  auto fail = [&](FailureKind kind, const std::exception& e) {
    out.final = failure(kind, e.what());
    return out;
  };

  StageTrace t1;
  try {
    out.selected_domains = select_domains(ctx, &t1);
  } catch (const EmptySelectionError& e) {
    out.trace.push_back(t1);
    return fail(FailureKind::kSelection, e);
  } catch (const ProviderError& e) {
    out.trace.push_back(t1);
    return fail(FailureKind::kProvider, e);
  }
  out.trace.push_back(t1);

  StageTrace t2;
  try {
    out.raw_state_text = generate_state(ctx, out.selected_domains, &t2);
  } catch (const ProviderError& e) {
    out.trace.push_back(t2);
    return fail(FailureKind::kProvider, e);
  }
  out.trace.push_back(t2);
  if (out.raw_state_text.empty()) {
    out.final = failure(FailureKind::kEmpty, "empty state-generation response");
    return out;
  }

  StageTrace t3;
  try {
    out.normalized_state_text = normalize(out.raw_state_text, out.selected_domains, mode, &t3);
  } catch (const ParseError& e) {
    out.trace.push_back(t3);
    return fail(FailureKind::kParse, e);
  } catch (const ProviderError& e) {
    out.trace.push_back(t3);
    return fail(FailureKind::kProvider, e);
  }
  out.trace.push_back(t3);

  out.final = postprocess(out.normalized_state_text, ontology(), grammar());
  return out;
}

DstOutcome Pipeline::run_naive_dst(const TurnRecord& turn) const {
  DstOutcome out;
  StageTrace t;
  PromptContext pctx = prompt_context(dst_context(turn));
  t.stage = "naive_dst";
  t.prompt = renderer_->naive_dst(pctx, *resources_.bank);
  try {
    t.response = call(t.prompt, opts_.max_tokens.state_generation);
  } catch (const ProviderError& e) {
    out.trace.push_back(t);
    out.final = failure(FailureKind::kProvider, e.what());
    return out;
  }
  out.trace.push_back(t);
  out.raw_state_text = strip_cues(text::truncate_at_blank_line(t.response), {"Output:"});
  out.normalized_state_text = out.raw_state_text;
  if (out.raw_state_text.empty()) {
    out.final = failure(FailureKind::kEmpty, "empty state-generation response");
    return out;
  }
  out.final = postprocess(out.raw_state_text, ontology(), grammar());
  if (const DialogueState* s = out.state()) out.selected_domains = s->domains();
  return out;
}

DstOutcome Pipeline::run(const TurnRecord& turn, DstMode mode) const {
  check_mode(mode);
  if (mode == DstMode::kNaive) return run_naive_dst(turn);
  return run_dst(turn, normalization_of(mode));
}

SubtaskOutcome Pipeline::run_acd(const TurnRecord& turn) const {
  SubtaskOutcome out;
  out.trace.stage = "acd";
  out.trace.prompt = renderer_->acd(prompt_context(post_state_context(turn)), *resources_.bank);
  try {
    out.trace.response = call(out.trace.prompt, opts_.max_tokens.acd);
  } catch (const ProviderError& e) {
    out.error = e.what();
    return out;
  }
  out.output = strip_cues(text::truncate_at_blank_line(out.trace.response), {"API call needed (yes/no):"});
  out.api_call = map_yes_no(out.output, lexicon_);
  if (!out.api_call) out.error = "cannot map \"" + out.output + "\" to yes or no";
  return out;
}

SubtaskOutcome Pipeline::run_dag(const TurnRecord& turn) const {
  SubtaskOutcome out;
  PromptContext pctx = prompt_context(post_state_context(turn));
  pctx.api_result = turn.gold_api_result;
  out.trace.stage = "dag";
  out.trace.prompt = renderer_->dag(pctx, *resources_.bank);
  try {
    out.trace.response = call(out.trace.prompt, opts_.max_tokens.dag);
  } catch (const ProviderError& e) {
    out.error = e.what();
    return out;
  }
  out.output = strip_cues(text::truncate_at_blank_line(out.trace.response), {"Output:"});
  if (out.output.empty()) out.error = "empty dialogue-act response";
  return out;
}

SubtaskOutcome Pipeline::run_rg(const TurnRecord& turn) const {
  SubtaskOutcome out;
  PromptContext pctx = prompt_context(post_state_context(turn));
  pctx.acts_to_verbalize = turn.gold_agent_acts;
  out.trace.stage = "rg";
  out.trace.prompt = renderer_->rg(pctx, *resources_.bank);
  try {
    out.trace.response = call(out.trace.prompt, opts_.max_tokens.rg);
  } catch (const ProviderError& e) {
    out.error = e.what();
    return out;
  }
  out.output = text::trim(out.trace.response);
  if (out.output.empty()) out.error = "empty response";
  return out;
}

}  // namespace polytod
