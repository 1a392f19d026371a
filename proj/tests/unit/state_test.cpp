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

#include <set>

#include "doctest.h"
#include "polytod/errors.hpp"
#include "polytod/state.hpp"
#include "support.hpp"

using namespace polytod;

namespace {

DialogueState make(std::initializer_list<std::tuple<const char*, const char*, const char*>> triples) {
  DialogueState s;
  for (const auto& [d, slot, v] : triples) s.set(d, slot, SlotValue{"equal_to", v});
  return s;
}

}  // namespace

TEST_CASE("parse_state: null and single sections") {
  CHECK(parse_state("null").empty());
  CHECK(parse_state("  null \n").empty());

  const auto s = parse_state(R"(( tv ) production_country_or_area equal_to " Japanese TV show ")");
  REQUIRE(s.sections().size() == 1);
  const auto* v = s.find("tv", "production_country_or_area");
  REQUIRE(v);
  CHECK(v->relation == "equal_to");
  CHECK(v->value == "Japanese TV show");

  const auto three = parse_state(
      R"(( tv ) decade equal_to " 2010s " , production_country_or_area equal_to " Japanese TV show " , type equal_to " suspenseful ")");
  CHECK(three.domains() == std::vector<std::string>{"tv"});
  CHECK(three.slot_count() == 3);
  CHECK(three.find("tv", "decade")->value == "2010s");
}

TEST_CASE("parse_state: multiple sections with and without a separating comma") {
  const auto a = parse_state(R"(( tv ) type equal_to " sci-fi " , ( movie ) decade equal_to " 2000s ")");
  const auto b = parse_state(R"(( tv ) type equal_to " sci-fi " ( movie ) decade equal_to " 2000s ")");
  CHECK(a == b);
  CHECK(a.domains() == std::vector<std::string>{"movie", "tv"});
}

TEST_CASE("parse_state: quoted values keep commas and parentheses") {
  const auto s = parse_state(R"(( hotel ) name equal_to " Inn (East), Gate 2 ")");
  CHECK(s.find("hotel", "name")->value == "Inn (East), Gate 2");
}

TEST_CASE("parse_state: malformed input") {
  SUBCASE("unterminated quote") {
    try {
      parse_state(R"(( tv ) decade equal_to " 2010s)");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 23);
      CHECK(e.expectation().find("unterminated") != std::string::npos);
    }
  }
  SUBCASE("missing relation") { CHECK_THROWS_AS(parse_state(R"(( tv ) decade " 2010s ")"), ParseError); }
  SUBCASE("empty domain header") { CHECK_THROWS_AS(parse_state(R"(( ) decade equal_to " 2010s ")"), ParseError); }
  SUBCASE("unknown relation") {
    CHECK_THROWS_AS(parse_state(R"(( tv ) decade greater_than " 2010s ")"), ParseError);
  }
  SUBCASE("empty value") { CHECK_THROWS_AS(parse_state(R"(( tv ) decade equal_to "  ")"), ParseError); }
  SUBCASE("assignment before any header") {
    CHECK_THROWS_AS(parse_state(R"(decade equal_to " 2010s ")"), ParseError);
  }
  SUBCASE("empty text") { CHECK_THROWS_AS(parse_state(""), ParseError); }
}

TEST_CASE("parse_state: configured relations") {
  GrammarOptions g;
  g.relations = {"equal_to", "not_equal_to"};
  const auto s = parse_state(R"(( hotel ) stars not_equal_to " 3 ")", g);
  CHECK(s.find("hotel", "stars")->relation == "not_equal_to");
  CHECK(serialize_state(s, g) == R"(( hotel ) stars not_equal_to " 3 ")");
}

TEST_CASE("parse_state: duplicate slot keeps the last value and warns") {
  const auto r = parse_state_with_warnings(R"(( tv ) type equal_to " crime " , type equal_to " comedy ")");
  CHECK(r.state.find("tv", "type")->value == "comedy");
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("tv") != std::string::npos);
}

TEST_CASE("parse_state: values are NFC-normalized") {
  // "é" precomposed vs e + combining acute
  const auto a = parse_state("( hotel ) name equal_to \" Caf\xC3\xA9 \"");
  const auto b = parse_state("( hotel ) name equal_to \" Cafe\xCC\x81 \"");
  CHECK(a == b);
}

TEST_CASE("serialize_state") {
  CHECK(serialize_state(DialogueState{}) == "null");

  DialogueState s;
  s.set("tv", "type", {"equal_to", "sci-fi"});
  s.set("movie", "production_country_or_area", {"equal_to", "India"});
  s.set("tv", "decade", {"equal_to", "2010s"});
  CHECK(serialize_state(s) ==
        R"(( movie ) production_country_or_area equal_to " India " , ( tv ) decade equal_to " 2010s " , type equal_to " sci-fi ")");

  GrammarOptions g;
  g.separator = " ; ";
  CHECK(serialize_state(s, g).find(" ; ( tv )") != std::string::npos);
}

TEST_CASE("acts: parse and serialize") {
  const auto acts = parse_acts(R"(( tv ) inform Douban_score equal_to " 9.1 ")");
  REQUIRE(acts.size() == 1);
  CHECK(acts[0].domain == "tv");
  CHECK(acts[0].act == "inform");
  CHECK(acts[0].slot == "Douban_score");
  CHECK(acts[0].relation == "equal_to");
  CHECK(acts[0].value == "9.1");

  CHECK(parse_acts("").empty());
  CHECK(parse_acts("   ").empty());

  const auto two = parse_acts("( tv ) recommend title equal_to \" Lucky Seven \"\n( tv ) request type");
  REQUIRE(two.size() == 2);
  CHECK(two[0].act == "recommend");
  CHECK(two[1].act == "request");
  CHECK_FALSE(two[1].value.has_value());
  CHECK(serialize_acts(two) == R"(( tv ) recommend title equal_to " Lucky Seven " , ( tv ) request type)");

  // order is preserved, not sorted
  const auto rev = parse_acts(R"(( tv ) request type , ( movie ) inform title equal_to " Up ")");
  CHECK(rev[0].domain == "tv");
  CHECK(parse_acts(serialize_acts(rev)) == rev);

  CHECK_THROWS_AS(parse_acts(R"(( tv ) inform title equal_to " x)"), ParseError);
  CHECK_THROWS_AS(parse_acts(R"(( tv ) inform)"), ParseError);
}

TEST_CASE("diff_states") {
  const auto gold = make({{"movie", "production_country_or_area", "India"}, {"tv", "type", "sci-fi"}});

  CHECK(diff_states(gold, gold).empty());

  const auto no_movie = make({{"tv", "type", "sci-fi"}});
  auto d = diff_states(no_movie, gold);
  CHECK(d.missing_domains == std::set<std::string>{"movie"});
  CHECK(d.extra_domains.empty());
  CHECK(d.missing_slots.count({"movie", "production_country_or_area"}) == 1);

  const auto us = make({{"tv", "production_country_or_area", "United States"}});
  const auto america = make({{"tv", "production_country_or_area", "America"}});
  d = diff_states(us, america);
  REQUIRE(d.value_mismatches.size() == 1);
  CHECK(d.value_mismatches[0].predicted == "United States");
  CHECK(d.value_mismatches[0].gold == "America");
  CHECK(d.missing_domains.empty());
  CHECK(d.missing_slots.empty());

  d = diff_states(std::nullopt, gold);
  CHECK(d.normalization_failed);
  CHECK(d.missing_domains == std::set<std::string>{"movie", "tv"});
  CHECK_FALSE(d.empty());

  CHECK(diff_states(std::nullopt, DialogueState{}).normalization_failed);
}

TEST_CASE("property: parse(serialize(s)) == s") {
  testing::StateGenerator gen(0x5eed);
  for (int i = 0; i < 2000; ++i) {
    const auto s = gen.state();
    const auto text = serialize_state(s);
    REQUIRE_MESSAGE(parse_state(text) == s, text);
    // serialize is a fixed point of parse . serialize
    REQUIRE(serialize_state(parse_state(text)) == text);
  }
}

TEST_CASE("property: order and whitespace do not change the parse") {
  testing::StateGenerator gen(42);
  for (int i = 0; i < 1000; ++i) {
    const auto s = gen.state();
    const auto a = gen.scrambled(s);
    const auto b = gen.scrambled(s);
    REQUIRE_MESSAGE(parse_state(a) == parse_state(b), a << "\n" << b);
    REQUIRE(parse_state(a) == s);
  }
}

TEST_CASE("property: diff is empty exactly when states are equal") {
  // every state over 2 domains x 2 slots x {absent, v1, v2}
  const std::vector<std::pair<std::string, std::string>> cells = {
      {"movie", "type"}, {"movie", "decade"}, {"tv", "type"}, {"tv", "decade"}};
  std::vector<DialogueState> all;
  for (int code = 0; code < 81; ++code) {
    DialogueState s;
    int c = code;
    for (const auto& [d, slot] : cells) {
      if (c % 3) s.set(d, slot, {"equal_to", c % 3 == 1 ? "a" : "b"});
      c /= 3;
    }
    all.push_back(s);
  }
  for (const auto& p : all) {
    for (const auto& g : all) {
      const auto d = diff_states(p, g);
      REQUIRE(d.empty() == (p == g));
      REQUIRE_FALSE(d.normalization_failed);
    }
  }
}
