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

#include "doctest.h"
#include "polytod/errors.hpp"
#include "polytod/ontology.hpp"
#include "polytod/text.hpp"
#include "support.hpp"

using namespace polytod;
using nlohmann::json;
namespace pt = polytod::testing;

TEST_CASE("ontology: minimal file") {
  const json doc = {{"format_version", 1},
                    {"language", "en"},
                    {"domains", {{"hotel", {{"slots", json::array({{{"name", "name"}}})}}}}}};
  const auto o = Ontology::from_json(doc, "en");
  CHECK(o.domains() == std::vector<std::string>{"hotel"});
  CHECK_FALSE(o.allowed_values("hotel", "name"));
  CHECK_FALSE(o.has_dictionary());
}

TEST_CASE("ontology: validation lists every problem") {
  const json doc = json::parse(R"({
    "format_version": 1, "language": "en",
    "domains": {
      "tv": {"slots": [
        {"name": "type", "kind": "enumerated", "values": ["comedy", "crime", "comedy"]},
        {"name": "decade", "kind": "enumerated", "values": []},
        {"name": "title"}, {"name": "title"}
      ]},
      "banana": {"slots": [{"name": "x"}]}
    }
  })");
  try {
    Ontology::from_json(doc, "en");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string all = text::join(e.problems(), "\n");
    CHECK(e.problems().size() >= 4);
    CHECK(all.find("(tv, type)") != std::string::npos);
    CHECK(all.find("(tv, decade)") != std::string::npos);
    CHECK(all.find("title") != std::string::npos);
    CHECK(all.find("banana") != std::string::npos);
  }
}

TEST_CASE("ontology: malformed files") {
  pt::TempDir tmp;
  pt::write_file(tmp / "bad.json", "{ not json");
  CHECK_THROWS_AS(Ontology::load(tmp / "bad.json", "en"), FormatError);
  CHECK_THROWS_AS(Ontology::load(tmp / "missing.json", "en"), FormatError);
  pt::write_file(tmp / "v2.json", R"({"format_version": 2, "language": "en", "domains": {}})");
  CHECK_THROWS_AS(Ontology::load(tmp / "v2.json", "en"), FormatError);
  pt::write_file(tmp / "fr.json", R"({"format_version": 1, "language": "fr", "domains": {"tv": {"slots": []}}})");
  CHECK_THROWS_AS(Ontology::load(tmp / "fr.json", "en"), ValidationError);
}

TEST_CASE("ontology: tv fixture") {
  const auto o = Ontology::load(pt::fixture_path("tv_ontology.json"), "en");
  const auto types = o.allowed_values("tv", "type");
  REQUIRE(types);
  CHECK(types->size() == 5);
  CHECK(*types == std::vector<std::string>{"comedy", "crime", "action", "sci-fi", "romantic"});
  CHECK_FALSE(o.allowed_values("tv", "title"));
  CHECK_FALSE(o.allowed_values("weather", "city"));
  CHECK_FALSE(o.allowed_values("tv", "nope"));
}

TEST_CASE("ontology: dictionary_normalize") {
  const auto o = Ontology::load(pt::data_path("ontology/en.json"), "en");
  REQUIRE(o.has_dictionary());
  CHECK(o.dictionary_normalize("tv", "production_country_or_area", "United States") == "America");
  CHECK(o.dictionary_normalize("tv", "production_country_or_area", "  united states ") == "America");
  CHECK(o.dictionary_normalize("tv", "production_country_or_area", "America") == "America");
  CHECK(o.dictionary_normalize("tv", "type", "Sci-Fi") == "sci-fi");
  CHECK_FALSE(o.dictionary_normalize("tv", "type", "science fiction TV show"));
  CHECK(o.dictionary_normalize("tv", "title", "Unnatural") == "Unnatural");
  CHECK_FALSE(o.dictionary_normalize("tv", "no_such_slot", "x"));
}

TEST_CASE("ontology: dictionary_normalize is idempotent on its outputs") {
  const auto o = Ontology::load(pt::data_path("ontology/en.json"), "en");
  for (const auto& [d, slot, surface, canonical] : read_dictionary_tsv(pt::data_path("ontology/en.dict.tsv"))) {
    const auto once = o.dictionary_normalize(d, slot, surface);
    REQUIRE(once == canonical);
    REQUIRE(o.dictionary_normalize(d, slot, *once) == once);
  }
  for (const auto& d : o.domains()) {
    for (const auto& spec : *o.slots(d)) {
      for (const auto& v : spec.allowed_values) REQUIRE(o.dictionary_normalize(d, spec.name, v) == v);
    }
  }
}

TEST_CASE("ontology: dictionary targets must be allowed values") {
  pt::TempDir tmp;
  pt::write_file(tmp / "o.json", R"({"format_version": 1, "language": "en", "dictionary": "d.tsv",
    "domains": {"tv": {"slots": [{"name": "type", "kind": "enumerated", "values": ["sci-fi"]}]}}})");
  pt::write_file(tmp / "d.tsv", "tv\ttype\tscience fiction\tspace opera\n");
  CHECK_THROWS_AS(Ontology::load(tmp / "o.json", "en"), ValidationError);
  pt::write_file(tmp / "d.tsv", "# comment\n\ntv\ttype\tscience fiction\tsci-fi\n");
  CHECK(Ontology::load(tmp / "o.json", "en").dictionary_size() == 1);
}

TEST_CASE("ontology: bundled files") {
  const auto en = Ontology::load(pt::data_path("ontology/en.json"), "en");
  const auto zh = Ontology::load(pt::data_path("ontology/zh.json"), "zh");
  CHECK(en.domains().size() == 12);
  CHECK(zh.domains().size() == 12);
  CHECK_FALSE(zh.has_dictionary());
  CHECK(default_domains() == std::vector<std::string>{"movie", "tv", "attraction", "retaurant", "car", "hotel",
                                                      "hospital", "weather", "flight", "pc", "train", "class"});
}

TEST_CASE("ontology: canonical_member uses the shared lookup key") {
  const auto o = Ontology::load(pt::data_path("ontology/en.json"), "en");
  CHECK(o.canonical_member("tv", "type", " SCI-FI ") == "sci-fi");
  CHECK_FALSE(o.canonical_member("tv", "type", "space opera"));
  CHECK_FALSE(o.canonical_member("tv", "title", "sci-fi"));
  CHECK(text::lookup_key("  Stra\xC3\x9F" "e ") == text::lookup_key("STRASSE"));
}
