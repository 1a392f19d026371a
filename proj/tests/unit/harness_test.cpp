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
#include "polytod/harness.hpp"
#include "support.hpp"

using namespace polytod;
using nlohmann::json;
namespace pt = polytod::testing;

namespace {

const json& expected() {
  static const json doc = json::parse(pt::read_file(pt::fixture_path("expected.json")));
  return doc;
}

MetricsReport expected_report(const std::string& section, const std::string& language, const std::string& model) {
  json j = expected().at(section).at(language);
  j["model"] = model;
  return report_from_json(j);
}

const std::vector<TurnRecord>& corpus() {
  static const auto records = load_turns_strict(pt::corpus_path());
  return records;
}

SplitRun golden_run(int workers, const RunConfig& base = {}) {
  auto client = pt::mock_client(pt::fixture_path("golden_script.json"));
  RunConfig cfg = base;
  cfg.workers = workers;
  return run_split(corpus(), pt::pipelines({"en", "zh"}, client), cfg);
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("golden run matches the hand-scored expectation at any worker count") {
  std::string first_json;
  for (int workers : {1, 4, 8}) {
    CAPTURE(workers);
    const auto run = golden_run(workers);
    REQUIRE(run.reports.size() == 2);
    CHECK(run.reports[0] == expected_report("golden", "en", "gpt-4-1106-preview"));
    CHECK(run.reports[1] == expected_report("golden", "zh", "gpt-4-1106-preview"));
    const auto rendered = render_report(run.reports, ReportFormat::kJson);
    if (first_json.empty()) first_json = rendered;
    CHECK(rendered == first_json);

    REQUIRE(run.results.size() == corpus().size());
    for (std::size_t i = 0; i < run.results.size(); ++i) {
      CHECK(run.results[i].index == i);
      CHECK(run.results[i].turn_id == corpus()[i].id());
    }
    CHECK(run.mismatches.size() == 4);
  }
}

TEST_CASE("tallies account for every turn") {
  const auto run = golden_run(4);
  for (const auto& r : run.reports) {
    std::size_t mismatches = 0;
    for (const auto& [cls, n] : r.mismatch_classes) mismatches += n;
    CHECK(r.tallies.at("dst").correct + mismatches == r.n_turns);
    for (const auto& [task, t] : r.tallies) {
      CAPTURE(task);
      CHECK(t.correct + t.incorrect == r.n_turns);
      CHECK(t.errors <= t.incorrect);
    }
  }
}

TEST_CASE("mismatches carry traces and classes") {
  RunConfig cfg;
  cfg.trace = true;
  const auto run = golden_run(2, cfg);
  std::map<std::string, ErrorClass> by_turn;
  for (const auto& m : run.mismatches) by_turn[m.turn_id] = m.machine_class;
  CHECK(by_turn.at("en-tv-01:1") == ErrorClass::kSlot);
  CHECK(by_turn.at("en-tv-01:2") == ErrorClass::kDomain);
  CHECK(by_turn.at("zh-att-01:1") == ErrorClass::kSlotValue);
  CHECK(by_turn.at("zh-tv-01:0") == ErrorClass::kPostProcessing);

  const auto& r = run.results[1];
  REQUIRE(r.dst);
  CHECK(r.dst->trace.size() == 3);
  const auto line = result_to_json(r, corpus()[1], default_grammar(), true);
  CHECK(line.contains("dst"));
  CHECK(line.dump().find("domain_selection") != std::string::npos);
}

TEST_CASE("checkpoint file gets one line per turn") {
  pt::TempDir tmp;
  RunConfig cfg;
  cfg.checkpoint = tmp / "results.ndrec";
  golden_run(8, cfg);
  const auto text = pt::read_file(tmp / "results.ndrec");
  CHECK(count_lines(text) == corpus().size());
  std::set<std::string> ids;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    ids.insert(json::parse(text.substr(start, end - start)).at("turn_id").get<std::string>());
    start = end + 1;
  }
  CHECK(ids.size() == corpus().size());
}

TEST_CASE("subtask selection") {
  RunConfig cfg;
  cfg.subtasks = parse_subtasks("acd,rg");
  const auto run = golden_run(1, cfg);
  for (const auto& r : run.reports) {
    CHECK_FALSE(r.dst_acc);
    CHECK_FALSE(r.da_acc);
    CHECK(r.api_acc);
    CHECK(r.rg_bleu);
    CHECK_FALSE(r.tallies.contains("dst"));
  }
  CHECK_THROWS_AS(parse_subtasks("dst,nlu"), ConfigError);
  CHECK_THROWS_AS(parse_subtasks(""), ConfigError);
}

TEST_CASE("configuration errors abort before any model call") {
  auto client = pt::mock_client(pt::fixture_path("golden_script.json"));
  CHECK_THROWS_AS(run_split(corpus(), pt::pipelines({"en"}, client), RunConfig{}), ConfigError);
  RunConfig dict;
  dict.mode = DstMode::kDictNorm;
  CHECK_THROWS_AS(run_split(corpus(), pt::pipelines({"en", "zh"}, client), dict), ConfigError);
  CHECK(client->backend_calls() == 0);
}

TEST_CASE("ablation over the four modes") {
  auto client = pt::mock_client(pt::fixture_path("ablation_script.json"));
  const auto table = run_ablation(corpus(), pt::pipelines({"en", "zh"}, client),
                                  {DstMode::kFull, DstMode::kNoNorm, DstMode::kDictNorm, DstMode::kNaive}, 4);
  CHECK(table.languages == std::vector<std::string>{"en", "zh"});
  REQUIRE(table.rows.size() == 4);
  const auto& exp = expected().at("ablation");
  for (const auto& row : table.rows) {
    CAPTURE(row.label);
    for (const auto& lang : table.languages) {
      const auto& cell = exp.at(to_string(row.mode)).at(lang);
      if (cell.is_null()) {
        CHECK_FALSE(row.accuracy.at(lang));
      } else {
        REQUIRE(row.accuracy.at(lang));
        CHECK(*row.accuracy.at(lang) == cell.get<double>());
      }
    }
  }
  CHECK(table.rows[0].label == "Our (GPT-4)");
  const auto md = render_ablation(table, ReportFormat::kMarkdown);
  CHECK(md.find("| w/ dictionary-based normalization | 91.7 | n/a |") != std::string::npos);
  CHECK(md.find("| Naive prompting |") != std::string::npos);
}

TEST_CASE("report rendering") {
  MetricsReport r;
  r.language = "en";
  r.model = "gpt-4";
  r.n_turns = 1000;
  r.dst_acc = 74.9;
  r.api_acc = 96.0;
  r.da_acc = 61.2;
  r.rg_bleu = 30.6;
  r.rg_avg_len = 13.39;
  const auto md = render_report({r}, ReportFormat::kMarkdown);
  CHECK(md.find("\n| English | GPT-4 | 74.9 | 96.0 | 61.2 | 30.6 | 13.39 |\n") != std::string::npos);
  CHECK(md.rfind("| Language | Model | DST Acc. | API Acc. | DA Acc. | RG BLEU | RG Avg. Length |", 0) == 0);

  MetricsReport dst_only;
  dst_only.language = "zh";
  dst_only.model = "gpt-3.5-turbo";
  dst_only.n_turns = 8;
  dst_only.dst_acc = 75.0;
  const auto csv = render_report({dst_only}, ReportFormat::kCsv);
  CHECK(csv == "Language,Model,N Turns,DST Acc.\nChinese,GPT-3.5,8,75.0\n");

  const auto back = parse_report_json(render_report({r, dst_only}, ReportFormat::kJson));
  REQUIRE(back.size() == 2);
  CHECK(back[0] == r);
  CHECK(back[1] == dst_only);
  CHECK_THROWS_AS(parse_report_json("{}"), FormatError);
  CHECK_THROWS_AS(parse_report_format("xml"), ConfigError);
  CHECK(language_name("en-hi") == "English-Hindi");
  CHECK(model_label("gpt-4-1106-preview") == "GPT-4");
  CHECK(model_label("llama") == "llama");
}

TEST_CASE("worksheet export and annotation import") {
  pt::TempDir tmp;
  const auto run = golden_run(1);
  export_worksheet(run.mismatches, tmp / "ws.tsv");
  const auto exported = pt::read_file(tmp / "ws.tsv");
  CHECK(count_lines(exported) == run.mismatches.size() + 1);

  SUBCASE("unannotated worksheet leaves the base accuracy") {
    const auto tables = apply_annotations(run.reports, read_worksheet(tmp / "ws.tsv"));
    REQUIRE(tables.size() == 2);
    for (const auto& t : tables) {
      for (const auto& row : t.rows) {
        CHECK(row.percentage == 0.0);
        if (row.accuracy) CHECK(*row.accuracy == t.base_accuracy);
      }
    }
  }
  SUBCASE("one PoorGoldLabel mismatch out of 20 turns adds 5 points") {
    MetricsReport twenty;
    twenty.language = "en";
    twenty.model = "m";
    twenty.n_turns = 20;
    twenty.dst_acc = 70.0;
    std::string ws = "turn_id\tlanguage\tpredicted\tgold\tmachine_class\thuman_category\n";
    ws += "a:1\ten\tx\ty\tSlot\tPoorGoldLabel\n";
    ws += "a:2\ten\tx\ty\tSlot\t\n";
    ws += "a:3\ten\tx\ty\tDomain\tError:Domain\n";
    pt::write_file(tmp / "ann.tsv", ws);
    const auto tables = apply_annotations({twenty}, read_worksheet(tmp / "ann.tsv"));
    REQUIRE(tables.size() == 1);
    const auto& rows = tables[0].rows;
    CHECK(rows[0].category == "MultipleCorrectAnswers");
    CHECK(*rows[0].accuracy == 70.0);
    CHECK(rows[1].category == "PoorGoldLabel");
    CHECK(rows[1].percentage == 5.0);
    CHECK(*rows[1].accuracy == 75.0);
    CHECK(*rows[2].accuracy == 75.0);
    CHECK(rows[3].category == "Error");
    CHECK(rows[3].percentage == 5.0);
    CHECK(rows[4].category == "Error:Domain");
    CHECK(rows[4].percentage == 5.0);
    CHECK(render_adjusted(tables).find("| PoorGoldLabel | 5.0 | 75.0 |") != std::string::npos);
  }
  SUBCASE("invalid category names the line") {
    pt::write_file(tmp / "bad.tsv", exported + "x:1\ten\ta\tb\tSlot\tPoorLabel\n");
    try {
      read_worksheet(tmp / "bad.tsv");
      FAIL("expected UnknownCategoryError");
    } catch (const UnknownCategoryError& e) {
      CHECK(e.line() == run.mismatches.size() + 2);
    }
  }
  SUBCASE("cells survive escaping") {
    MismatchRecord m;
    m.turn_id = "d:0";
    m.language = "en";
    m.predicted = "a\tb\nc\\d";
    m.gold = "null";
    const auto text = render_worksheet({m});
    CHECK(text.find("a\\tb\\nc\\\\d") != std::string::npos);
    pt::write_file(tmp / "esc.tsv", text);
    CHECK(read_worksheet(tmp / "esc.tsv").size() == 1);
  }
}

TEST_CASE("a warm cache answers a repeated run without backend calls") {
  pt::TempDir tmp;
  const auto script = MockScript::load(pt::fixture_path("golden_script.json"));
  const auto version = PromptLibrary::builtin()->format_version();
  auto cold = std::make_shared<LlmClient>(std::make_shared<MockBackend>(script), ResponseCache(tmp / "cache"), version);
  const auto first = run_split(corpus(), pt::pipelines({"en", "zh"}, cold), RunConfig{});
  CHECK(cold->backend_calls() > 0);

  auto warm = std::make_shared<LlmClient>(std::make_shared<MockBackend>(script), ResponseCache(tmp / "cache"), version);
  const auto second = run_split(corpus(), pt::pipelines({"en", "zh"}, warm), RunConfig{});
  CHECK(warm->backend_calls() == 0);
  CHECK(render_report(first.reports, ReportFormat::kJson) == render_report(second.reports, ReportFormat::kJson));
}
