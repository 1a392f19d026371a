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

#include "polytod/state.hpp"

#include <algorithm>
#include <cctype>

#include "polytod/errors.hpp"
#include "polytod/text.hpp"

namespace polytod {

bool GrammarOptions::is_relation(std::string_view token) const {
  return std::find(relations.begin(), relations.end(), token) != relations.end();
}

const GrammarOptions& default_grammar() {
  static const GrammarOptions kDefault;
  return kDefault;
}

DialogueState::DialogueState(SectionMap sections) : sections_(std::move(sections)) {
  std::erase_if(sections_, [](const auto& kv) { return kv.second.empty(); });
}

bool DialogueState::set(const std::string& domain, const std::string& slot,
                        SlotValue value) {
  auto& slots = sections_[domain];
  auto [it, inserted] = slots.insert_or_assign(slot, std::move(value));
  return !inserted;
}

std::size_t DialogueState::slot_count() const {
  std::size_t n = 0;
  for (const auto& [d, slots] : sections_) n += slots.size();
  return n;
}

std::vector<std::string> DialogueState::domains() const {
  std::vector<std::string> out;
  for (const auto& [d, slots] : sections_) out.push_back(d);
  return out;
}

std::vector<SlotAssignment> DialogueState::assignments() const {
  std::vector<SlotAssignment> out;
  for (const auto& [d, slots] : sections_) {
    for (const auto& [s, v] : slots) out.push_back({d, s, v.relation, v.value});
  }
  return out;
}

const SlotValue* DialogueState::find(std::string_view domain,
                                     std::string_view slot) const {
  auto d = sections_.find(std::string(domain));
  if (d == sections_.end()) return nullptr;
  auto s = d->second.find(std::string(slot));
  return s == d->second.end() ? nullptr : &s->second;
}

namespace {

enum class Tok { kLParen, kRParen, kComma, kQuoted, kWord, kEnd };

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  const Token& peek() {
    if (!peeked_) {
      current_ = lex();
      peeked_ = true;
    }
    return current_;
  }

  Token next() {
    peek();
    peeked_ = false;
    return current_;
  }

 private:
  static bool is_delim(char c) {
    return c == '(' || c == ')' || c == ',' || c == '"' ||
           std::isspace(static_cast<unsigned char>(c));
  }

  Token lex() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ >= src_.size()) return {Tok::kEnd, "", pos_};
    const std::size_t start = pos_;
    switch (src_[pos_]) {
      case '(':
        ++pos_;
        return {Tok::kLParen, "(", start};
      case ')':
        ++pos_;
        return {Tok::kRParen, ")", start};
      case ',':
        ++pos_;
        return {Tok::kComma, ",", start};
      case '"': {
        std::size_t close = src_.find('"', pos_ + 1);
        if (close == std::string_view::npos) {
          throw ParseError(start, "closing '\"' for quoted value (unterminated quote)");
        }
        std::string body(src_.substr(pos_ + 1, close - pos_ - 1));
        pos_ = close + 1;
        return {Tok::kQuoted, std::move(body), start};
      }
      default:
        while (pos_ < src_.size() && !is_delim(src_[pos_])) ++pos_;
        return {Tok::kWord, std::string(src_.substr(start, pos_ - start)), start};
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  bool peeked_ = false;
  Token current_{Tok::kEnd, "", 0};
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::kEnd:
      return "end of input";
    case Tok::kQuoted:
      return "quoted value";
    default:
      return "'" + t.text + "'";
  }
}

std::string expect_word(Lexer& lex, const std::string& what) {
  Token t = lex.next();
  if (t.kind != Tok::kWord) throw ParseError(t.offset, what + ", found " + describe(t));
  return text::nfc(t.text);
}

std::string expect_domain_header(Lexer& lex) {
  Token open = lex.next();
  if (open.kind != Tok::kLParen) {
    throw ParseError(open.offset, "'(' opening a domain header, found " + describe(open));
  }
  Token name = lex.next();
  if (name.kind == Tok::kRParen) throw ParseError(name.offset, "domain name (empty domain header)");
  if (name.kind != Tok::kWord) {
    throw ParseError(name.offset, "domain name, found " + describe(name));
  }
  Token close = lex.next();
  if (close.kind != Tok::kRParen) {
    throw ParseError(close.offset, "')' closing the domain header, found " + describe(close));
  }
  return text::ascii_lower(text::nfc(name.text));
}

std::string expect_relation(Lexer& lex, const GrammarOptions& opts) {
  Token t = lex.next();
  if (t.kind != Tok::kWord) {
    throw ParseError(t.offset, "relation token, found " + describe(t));
  }
  if (!opts.is_relation(t.text)) {
    throw ParseError(t.offset, "known relation token, found unknown relation '" + t.text + "'");
  }
  return t.text;
}

std::string expect_value(Lexer& lex) {
  Token t = lex.next();
  if (t.kind != Tok::kQuoted) throw ParseError(t.offset, "quoted value, found " + describe(t));
  std::string v = text::trim(text::nfc(t.text));
  if (v.empty()) throw ParseError(t.offset, "non-empty quoted value");
  return v;
}

// After an entry: consumes an optional ',' and reports what follows.
enum class After { kEntry, kSection, kEnd };

After after_entry(Lexer& lex) {
  const Token& t = lex.peek();
  if (t.kind == Tok::kEnd) return After::kEnd;
  if (t.kind == Tok::kLParen) return After::kSection;
  if (t.kind != Tok::kComma) {
    throw ParseError(t.offset, "',' or '(' after an entry, found " + describe(t));
  }
  lex.next();
  const Token& n = lex.peek();
  if (n.kind == Tok::kEnd) return After::kEnd;  // tolerated trailing comma
  if (n.kind == Tok::kLParen) return After::kSection;
  return After::kEntry;
}

bool is_null_literal(std::string_view text) { return text::trim(text) == "null"; }

std::string quote(const std::string& v) { return "\" " + v + " \""; }

}  // namespace

StateParse parse_state_with_warnings(std::string_view input, const GrammarOptions& opts) {
  StateParse out;
  if (is_null_literal(input)) return out;
  Lexer lex(input);
  if (lex.peek().kind == Tok::kEnd) {
    throw ParseError(lex.peek().offset, "'null' or a domain section");
  }
  After next = After::kSection;
  std::string domain;
  while (next != After::kEnd) {
    if (next == After::kSection) domain = expect_domain_header(lex);
    std::string slot = expect_word(lex, "slot name");
    std::string relation = expect_relation(lex, opts);
    std::string value = expect_value(lex);
    if (out.state.set(domain, slot, SlotValue{relation, value})) {
      out.warnings.push_back("duplicate assignment for (" + domain + ", " + slot +
                             "); keeping the last one");
    }
    next = after_entry(lex);
  }
  return out;
}

DialogueState parse_state(std::string_view text, const GrammarOptions& opts) {
  return parse_state_with_warnings(text, opts).state;
}

std::string serialize_state(const DialogueState& state, const GrammarOptions& opts) {
  if (state.empty()) return "null";
  std::vector<std::string> sections;
  for (const auto& [domain, slots] : state.sections()) {
    std::vector<std::string> entries;
    for (const auto& [slot, v] : slots) {
      entries.push_back(slot + " " + v.relation + " " + quote(v.value));
    }
    sections.push_back("( " + domain + " ) " + text::join(entries, opts.separator));
  }
  return text::join(sections, opts.separator);
}

AgentActs parse_acts(std::string_view input, const GrammarOptions& opts) {
  AgentActs acts;
  if (text::trim(input).empty() || is_null_literal(input)) return acts;
  Lexer lex(input);
  After next = After::kSection;
  std::string domain;
  while (next != After::kEnd) {
    if (next == After::kSection) domain = expect_domain_header(lex);
    AgentAct act;
    act.domain = domain;
    act.act = expect_word(lex, "act name");
    act.slot = expect_word(lex, "slot name");
    const Token& t = lex.peek();
    if (t.kind == Tok::kQuoted) throw ParseError(t.offset, "relation token before the value");
    if (t.kind == Tok::kWord) {
      act.relation = expect_relation(lex, opts);
      act.value = expect_value(lex);
    }
    acts.push_back(std::move(act));
    next = after_entry(lex);
  }
  return acts;
}

std::string serialize_acts(const AgentActs& acts, const GrammarOptions& opts) {
  std::vector<std::string> entries;
  for (const auto& a : acts) {
    std::string e = "( " + a.domain + " ) " + a.act + " " + a.slot;
    if (a.value) e += " " + a.relation + " " + quote(*a.value);
    entries.push_back(std::move(e));
  }
  return text::join(entries, opts.separator);
}

bool StructuralDiff::empty() const {
  return missing_domains.empty() && extra_domains.empty() && missing_slots.empty() &&
         extra_slots.empty() && value_mismatches.empty() && !normalization_failed;
}

StructuralDiff diff_states(const std::optional<DialogueState>& predicted,
                           const DialogueState& gold) {
  StructuralDiff diff;
  if (!predicted) {
    diff.normalization_failed = true;
    for (const auto& a : gold.assignments()) {
      diff.missing_domains.insert(a.domain);
      diff.missing_slots.emplace(a.domain, a.slot);
    }
    return diff;
  }
  const auto& pred = predicted->sections();
  for (const auto& [domain, gslots] : gold.sections()) {
    auto p = pred.find(domain);
    if (p == pred.end()) {
      diff.missing_domains.insert(domain);
      for (const auto& [slot, v] : gslots) diff.missing_slots.emplace(domain, slot);
      continue;
    }
    for (const auto& [slot, gv] : gslots) {
      auto ps = p->second.find(slot);
      if (ps == p->second.end()) {
        diff.missing_slots.emplace(domain, slot);
      } else if (ps->second != gv) {
        auto render = [&](const SlotValue& v) {
          return v.relation == gv.relation ? v.value : v.relation + " " + v.value;
        };
        diff.value_mismatches.push_back({domain, slot, render(ps->second), gv.value});
      }
    }
  }
  for (const auto& [domain, pslots] : pred) {
    auto g = gold.sections().find(domain);
    if (g == gold.sections().end()) diff.extra_domains.insert(domain);
    for (const auto& [slot, v] : pslots) {
      if (g == gold.sections().end() || !g->second.contains(slot)) {
        diff.extra_slots.emplace(domain, slot);
      }
    }
  }
  return diff;
}

}  // namespace polytod
