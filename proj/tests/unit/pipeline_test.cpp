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

#include <deque>
#include <mutex>

#include "doctest.h"
#include "polytod/errors.hpp"
#include "polytod/pipeline.hpp"
#include "support.hpp"

using namespace polytod;
namespace pt = polytod::testing;

namespace {

/// Answers calls in order from a queue; a "!" entry throws ProviderError.
class QueueBackend : public ChatBackend {
 public:
  explicit QueueBackend(std::deque<std::string> responses) : responses_(std::move(responses)) {}

  std::string complete(const CompletionRequest& req) override {
    std::lock_guard lock(mu_);
    requests.push_back(req);
    if (responses_.empty()) throw ProviderError("queue exhausted");
    auto r = responses_.front();
    responses_.pop_front();
    if (r == "!") throw ProviderError("scripted outage");
    return r;
  }

  std::vector<CompletionRequest> requests;

 private:
  std::mutex mu_;
  std::deque<std::string> responses_;
};

struct Harness {
  std::shared_ptr<QueueBackend> backend;
  std::shared_ptr<Pipeline> pipe;

  Harness(const std::string& language, std::deque<std::string> responses)
      : backend(std::make_shared<QueueBackend>(std::move(responses))),
        pipe(pt::pipeline(language, std::make_shared<LlmClient>(backend, std::nullopt, "t"))) {}
};

const TurnRecord& turn(const std::string& id) {
  static const auto records = load_turns_strict(pt::corpus_path());
  for (const auto& t : records) {
    if (t.id() == id) return t;
  }
  throw std::runtime_error("no turn " + id);
}

const char* kRaw = R"(( tv ) production_country_or_area equal_to " United States " , type equal_to " science fiction TV show ")";
const char* kNormalized = R"(( tv ) production_country_or_area equal_to " America " , type equal_to " sci-fi ")";

}  // namespace

TEST_CASE("select_domains") {
  const auto ctx = dst_context(turn("en-tv-01:0"));
  CHECK(Harness("en", {"Domain(s): tv"}).pipe->select_domains(ctx) == std::vector<std::string>{"tv"});
  CHECK(Harness("en", {"movie, tv"}).pipe->select_domains(ctx) == std::vector<std::string>{"movie", "tv"});
  CHECK(Harness("en", {"TV, tv, banana.\nmovie"}).pipe->select_domains(ctx) ==
        std::vector<std::string>{"tv", "movie"});
  CHECK(Harness("en", {"tv\n\nI picked tv because, hotel"}).pipe->select_domains(ctx) ==
        std::vector<std::string>{"tv"});
  CHECK_THROWS_AS(Harness("en", {"banana"}).pipe->select_domains(ctx), EmptySelectionError);
  CHECK_THROWS_AS(Harness("en", {""}).pipe->select_domains(ctx), EmptySelectionError);

  Harness h("en", {"tv"});
  StageTrace trace;
  h.pipe->select_domains(ctx, &trace);
  CHECK(trace.stage == "domain_selection");
  CHECK(trace.response == "tv");
  REQUIRE(h.backend->requests.size() == 1);
  CHECK(h.backend->requests[0].prompt == trace.prompt);
  CHECK(h.backend->requests[0].model_id == "gpt-4-1106-preview");
  CHECK(h.backend->requests[0].decoding.temperature_milli == 0);
  CHECK(h.backend->requests[0].decoding.max_output_tokens == 32);
}

TEST_CASE("generate_state truncates at the first blank line") {
  const auto ctx = dst_context(turn("en-tv-01:0"));
  Harness h("en", {"Output: ( tv ) type equal_to \" crime \"\n\nThe user asked for crime shows."});
  CHECK(h.pipe->generate_state(ctx, {"tv"}) == "( tv ) type equal_to \" crime \"");
  Harness multi("en", {"( tv ) type equal_to \" crime \"\n , decade equal_to \" 2010s \"\n  \nextra"});
  CHECK(multi.pipe->generate_state(ctx, {"tv"}) == "( tv ) type equal_to \" crime \"\n , decade equal_to \" 2010s \"");
}

TEST_CASE("normalize modes") {
  SUBCASE("none returns the input and calls nothing") {
    Harness h("en", {});
    CHECK(h.pipe->normalize(kRaw, {"tv"}, NormalizationMode::kNone) == kRaw);
    CHECK_THROWS_AS(h.pipe->normalize("( tv ) type equal_to \" x", {"tv"}, NormalizationMode::kNone), ParseError);
    CHECK(h.backend->requests.empty());
  }
  SUBCASE("dictionary maps listed surfaces only") {
    Harness h("en", {});
    CHECK(h.pipe->normalize(kRaw, {"tv"}, NormalizationMode::kDictionary) ==
          R"(( tv ) production_country_or_area equal_to " America " , type equal_to " science fiction TV show ")");
    CHECK(h.backend->requests.empty());
    Harness zh("zh", {});
    CHECK_THROWS_AS(zh.pipe->normalize("( tv ) type equal_to \" 爱情剧 \"", {"tv"},
                                       NormalizationMode::kDictionary),
                    ConfigError);
  }
  SUBCASE("llm") {
    Harness h("en", {std::string("Output: ") + kNormalized + "\n\nBoth values were mapped."});
    StageTrace trace;
    CHECK(h.pipe->normalize(kRaw, {"tv"}, NormalizationMode::kLlm, &trace) == kNormalized);
    CHECK_FALSE(trace.skipped);
    CHECK(trace.prompt.ends_with(std::string("Input: ") + kRaw + "\nOutput:"));
    CHECK(h.backend->requests.size() == 1);
  }
  SUBCASE("llm skip") {
    Harness h("en", {});
    StageTrace trace;
    const std::string raw = "( tv ) title equal_to \" Westworld \"";
    CHECK(h.pipe->normalize(raw, {"tv"}, NormalizationMode::kLlm, &trace) == raw);
    CHECK(trace.skipped);
    CHECK(h.backend->requests.empty());
  }
}

TEST_CASE("postprocess") {
  const auto res = pt::resources("en");
  const auto ok = postprocess(R"(( tv ) type equal_to " Sci-Fi " , decade equal_to "2010s")", *res.ontology);
  REQUIRE(std::holds_alternative<DialogueState>(ok));
  CHECK(serialize_state(std::get<DialogueState>(ok)) == R"(( tv ) decade equal_to " 2010s " , type equal_to " sci-fi ")");

  const auto bad = postprocess(R"(( tv ) type equal_to " space opera ")", *res.ontology);
  REQUIRE(std::holds_alternative<DstFailure>(bad));
  const auto& f = std::get<DstFailure>(bad);
  CHECK(f.kind == FailureKind::kCanonicalization);
  CHECK(f.domain == "tv");
  CHECK(f.slot == "type");
  CHECK(f.value == "space opera");

  const auto free = postprocess(R"(( tv ) title equal_to " Any Title ", ( weather ) city equal_to " x ")", *res.ontology);
  CHECK(std::holds_alternative<DialogueState>(free));

  const auto unparsable = postprocess(R"(( tv ) type "sci-fi")", *res.ontology);
  REQUIRE(std::holds_alternative<DstFailure>(unparsable));
  CHECK(std::get<DstFailure>(unparsable).kind == FailureKind::kParse);
}

TEST_CASE("run_dst end to end") {
  const auto& t = turn("en-tv-02:0");
  Harness h("en", {"Domain(s): tv", std::string("Output: ") + kRaw, kNormalized});
  const auto out = h.pipe->run_dst(t, NormalizationMode::kLlm);
  REQUIRE(out.ok());
  CHECK(*out.state() == t.gold_state);
  CHECK(out.selected_domains == std::vector<std::string>{"tv"});
  CHECK(out.raw_state_text == kRaw);
  CHECK(out.normalized_state_text == kNormalized);
  REQUIRE(out.trace.size() == 3);
  CHECK(out.trace[0].stage == "domain_selection");
  CHECK(out.trace[1].stage == "state_generation");
  CHECK(out.trace[2].stage == "normalization");
  CHECK(h.backend->requests[1].decoding.max_output_tokens == 256);

  Harness no_norm("en", {"tv", kRaw});
  const auto raw_only = no_norm.pipe->run(t, DstMode::kNoNorm);
  REQUIRE_FALSE(raw_only.ok());
  CHECK(raw_only.failure()->kind == FailureKind::kCanonicalization);
}

TEST_CASE("run_dst failures stay inside the outcome") {
  const auto& t = turn("en-tv-01:0");
  SUBCASE("selection") {
    Harness h("en", {"I cannot tell."});
    const auto out = h.pipe->run_dst(t, NormalizationMode::kLlm);
    REQUIRE_FALSE(out.ok());
    CHECK(out.failure()->kind == FailureKind::kSelection);
    CHECK(out.trace.size() == 1);
    CHECK(h.backend->requests.size() == 1);
  }
  SUBCASE("provider during generation") {
    Harness h("en", {"tv", "!"});
    const auto out = h.pipe->run_dst(t, NormalizationMode::kLlm);
    CHECK(out.failure()->kind == FailureKind::kProvider);
    CHECK(out.trace.size() == 2);
  }
  SUBCASE("empty generation") {
    Harness h("en", {"tv", "Output:\n\n( tv ) type equal_to \" crime \""});
    CHECK(h.pipe->run_dst(t, NormalizationMode::kLlm).failure()->kind == FailureKind::kEmpty);
  }
  SUBCASE("parse") {
    Harness h("en", {"tv", "( tv ) type equal_to \" crime"});
    const auto out = h.pipe->run_dst(t, NormalizationMode::kLlm);
    CHECK(out.failure()->kind == FailureKind::kParse);
    CHECK(out.trace.size() == 3);
  }
  SUBCASE("config errors escape") {
    Harness h("zh", {});
    CHECK_THROWS_AS(h.pipe->run(turn("zh-tv-01:0"), DstMode::kDictNorm), ConfigError);
    CHECK(h.backend->requests.empty());
  }
}

TEST_CASE("naive dst") {
  const auto& t = turn("en-tv-01:0");
  Harness h("en", {"Output: ( tv ) production_country_or_area equal_to \" Japanese TV show \"\n\nDone."});
  const auto out = h.pipe->run(t, DstMode::kNaive);
  REQUIRE(out.ok());
  CHECK(*out.state() == t.gold_state);
  CHECK(out.selected_domains == std::vector<std::string>{"tv"});
  REQUIRE(out.trace.size() == 1);
  CHECK(out.trace[0].stage == "naive_dst");
  CHECK(h.backend->requests.size() == 1);
}

TEST_CASE("acd") {
  const auto& t = turn("en-mv-01:1");
  CHECK(Harness("en", {"yes"}).pipe->run_acd(t).api_call == true);
  CHECK(Harness("en", {"No."}).pipe->run_acd(t).api_call == false);
  CHECK(Harness("en", {"API call needed (yes/no): Yes, the user wants a score."}).pipe->run_acd(t).api_call == true);
  const auto maybe = Harness("en", {"maybe"}).pipe->run_acd(t);
  CHECK_FALSE(maybe.api_call);
  CHECK(maybe.error);
  const auto down = Harness("en", {"!"}).pipe->run_acd(t);
  CHECK(down.error);
  CHECK_FALSE(down.api_call);

  const auto& zh = turn("zh-att-01:1");
  CHECK(Harness("zh", {"是的。"}).pipe->run_acd(zh).api_call == true);
  CHECK(Harness("zh", {"不需要"}).pipe->run_acd(zh).api_call == false);

  // gold current state in the context
  Harness h("en", {"yes"});
  const auto out = h.pipe->run_acd(t);
  CHECK(out.trace.prompt.find("    " + serialize_state(t.gold_state) + "\n</state>\n<history>\n    Agent acts:") !=
        std::string::npos);
}

TEST_CASE("map_yes_no") {
  const auto en = default_lexicon("en");
  CHECK(map_yes_no("Yes", en) == true);
  CHECK(map_yes_no("  no!  ", en) == false);
  CHECK(map_yes_no("N", en) == false);
  CHECK(map_yes_no("yes no", en) == true);
  CHECK_FALSE(map_yes_no("", en));
  CHECK_FALSE(map_yes_no("perhaps", en));
  CHECK(map_yes_no("\nNo\nyes", en) == false);
  const auto zh = default_lexicon("zh");
  CHECK(map_yes_no("是", zh) == true);
  CHECK(map_yes_no("否。", zh) == false);
  CHECK(map_yes_no("不是", zh) == false);
  CHECK_FALSE(map_yes_no("也许", zh));
}

TEST_CASE("dag and rg") {
  const auto& t = turn("en-mv-01:1");
  Harness h("en", {"Output: ( movie ) inform Douban_score equal_to \" 9.1 \"\n\nI looked at the result."});
  const auto dag = h.pipe->run_dag(t);
  CHECK(dag.output == "( movie ) inform Douban_score equal_to \" 9.1 \"");
  CHECK_FALSE(dag.error);
  REQUIRE(t.gold_api_result);
  CHECK(dag.trace.prompt.find("API result: " + *t.gold_api_result) != std::string::npos);
  CHECK(Harness("en", {"\n"}).pipe->run_dag(t).error);

  const auto& zt = turn("zh-att-01:2");
  Harness rg("zh", {"  可以的呢\n"});
  const auto out = rg.pipe->run_rg(zt);
  CHECK(out.output == "可以的呢");
  CHECK_FALSE(out.error);
  CHECK(out.trace.prompt.find("Agent acts: " + serialize_acts(zt.gold_agent_acts) + "\nResponse:") !=
        std::string::npos);
  CHECK(Harness("zh", {"   "}).pipe->run_rg(zt).error);
  CHECK(Harness("zh", {"!"}).pipe->run_rg(zt).error);
}

TEST_CASE("subtasks see the same gold context regardless of order") {
  const auto& t = turn("en-att-01:1");
  Harness a("en", {"yes", "( attraction ) inform area", "Fine."});
  Harness b("en", {"Fine.", "( attraction ) inform area", "yes"});
  const auto a_acd = a.pipe->run_acd(t);
  const auto a_dag = a.pipe->run_dag(t);
  const auto a_rg = a.pipe->run_rg(t);
  const auto b_rg = b.pipe->run_rg(t);
  const auto b_dag = b.pipe->run_dag(t);
  const auto b_acd = b.pipe->run_acd(t);
  CHECK(a_acd.trace.prompt == b_acd.trace.prompt);
  CHECK(a_dag.trace.prompt == b_dag.trace.prompt);
  CHECK(a_rg.trace.prompt == b_rg.trace.prompt);
}

TEST_CASE("repeated runs with a deterministic backend agree") {
  const auto& t = turn("en-tv-02:0");
  Harness h("en", {"tv", kRaw, kNormalized, "tv", kRaw, kNormalized});
  const auto first = h.pipe->run_dst(t, NormalizationMode::kLlm);
  const auto second = h.pipe->run_dst(t, NormalizationMode::kLlm);
  REQUIRE(first.ok());
  CHECK(*first.state() == *second.state());
  for (std::size_t i = 0; i < first.trace.size(); ++i) CHECK(first.trace[i].prompt == second.trace[i].prompt);
}

TEST_CASE("pipeline construction checks languages") {
  auto en = pt::resources("en");
  auto zh = pt::resources("zh");
  LanguageResources mixed{"en", en.ontology, zh.bank};
  CHECK_THROWS_AS(Pipeline(mixed, std::make_shared<PromptRenderer>(), nullptr), LanguageMismatchError);
  CHECK_THROWS_AS(parse_dst_mode("oracle"), ConfigError);
  CHECK(parse_dst_mode("dict_norm") == DstMode::kDictNorm);
}
