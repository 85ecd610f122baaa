#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

using adg::DecisionRow;
using adg::Slot;
using nlohmann::json;
using testing_support::read_fixture;

namespace {

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const adg::Error& e) {
    return e.code();
  }
  return "no error";
}

std::size_t occurrences(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

adg::FeedbackTemplate make_template(std::string key, std::string body) {
  adg::FeedbackTemplate t;
  t.key = std::move(key);
  t.body = std::move(body);
  t.required_slots = adg::detail::placeholders_of(t.body, t.key);
  return t;
}

std::map<std::string, adg::Adg> fixture_graphs() {
  return {{"en1", testing_support::en1()}, {"jp1", testing_support::jp1()}};
}

}  // namespace

// --- render -------------------------------------------------------------------

TEST(Render, SubstitutesSlots) {
  const auto t = make_template("k", "Your answer refers to paragraph {paragraph_number}.");
  EXPECT_EQ(adg::render(t, {{Slot::paragraph_number, "3"}}), "Your answer refers to paragraph 3.");
  EXPECT_EQ(adg::render(make_template("k", "{{literal}} {score_fraction}"), {{Slot::score_fraction, "1/2"}}),
            "{literal} 1/2");
}

TEST(Render, MissingSlotIsNamed) {
  const auto t = make_template("k", "Hint: {answer_hint}");
  try {
    adg::render(t, {{Slot::paragraph_number, "1"}});
    FAIL();
  } catch (const adg::Error& e) {
    EXPECT_EQ(e.code(), "missing-slot");
    EXPECT_EQ(e.subject(), "answer_hint");
  }
}

TEST(Render, UnknownPlaceholderFailsAtLoad) {
  auto doc = json::parse(read_fixture("templates.json"));
  doc["templates"][0]["body"] = "Look at {paragraph}.";
  EXPECT_EQ(code_of([&] { adg::load_registry(doc.dump()); }), "unknown-placeholder");
  doc["templates"][0]["body"] = "Unclosed {paragraph_number";
  EXPECT_EQ(code_of([&] { adg::load_registry(doc.dump()); }), "template-syntax");
}

TEST(Registry, RoundTripAndLookup) {
  const auto r = testing_support::templates();
  EXPECT_EQ(adg::load_registry(adg::serialize_registry(r)).templates(), r.templates());
  ASSERT_TRUE(r.find("full_credit", "ja"));
  EXPECT_EQ(r.find("full_credit", "ja")->language, "ja");
  EXPECT_EQ(r.find("full_credit", "fr")->language, "en");  // falls back to any language
  EXPECT_TRUE(r.find_analytic("C", "visible_only", "en"));
  EXPECT_FALSE(r.find_analytic("C", "other", "en"));
}

// --- validate_registry ----------------------------------------------------------

TEST(ValidateRegistry, CompleteRegistryIsOk) {
  const auto prompts = adg::load_corpus(read_fixture("prompts.json")).prompts;
  for (const auto& g : {testing_support::en1(), testing_support::jp1()}) {
    const auto report = adg::validate_registry(testing_support::templates(), g, prompts);
    EXPECT_TRUE(report.ok()) << report.to_text();
  }
}

using oracle::RegistryDefect;

class PlantedRegistryDefect : public ::testing::TestWithParam<RegistryDefect> {};

TEST_P(PlantedRegistryDefect, YieldsExactlyOneError) {
  auto doc = json::parse(read_fixture("templates.json"));
  auto graph_doc = json::parse(read_fixture("en1.adg.json"));
  GetParam().plant(doc, graph_doc);
  const auto g = adg::load_adg(graph_doc.dump());
  const auto registry = adg::load_registry(doc.dump());
  const auto prompts = adg::load_corpus(read_fixture("prompts.json")).prompts;
  const auto report = adg::validate_registry(registry, g, prompts);
  std::vector<adg::Finding> errors;
  for (const auto& f : report.findings()) {
    if (f.severity == adg::Severity::error) errors.push_back(f);
  }
  ASSERT_EQ(errors.size(), 1u) << report.to_text();
  EXPECT_EQ(errors[0].code, GetParam().code);
}

INSTANTIATE_TEST_SUITE_P(
    Taxonomy, PlantedRegistryDefect, ::testing::ValuesIn(oracle::registry_defects()),
    [](const auto& info) { return std::string(info.param.name); });

// --- decision table ---------------------------------------------------------------

using oracle::decision_graph;

TEST(DecisionTable, EveryCellFiresExactlyOneRow) {
  const auto registry = testing_support::templates();
  const adg::SelectionPolicy policy;
  const auto cells = oracle::decision_cells(policy);
  ASSERT_EQ(cells.size(), 3u * 2u * 12u);
  std::map<DecisionRow, int> histogram;
  for (const auto& cell : cells) {
    const auto where = "score=" + std::to_string(cell.score) + " aligned=" + std::to_string(cell.aligned) +
                       " relation=" + std::to_string(static_cast<int>(cell.relation)) + cell.label;
    ASSERT_EQ(cell.context.relation.has_value(), cell.aligned && cell.relation != oracle::Relation::none) << where;
    ASSERT_FALSE(cell.firing.empty()) << where;
    const auto sel = adg::select_template(registry, cell.graph, cell.context, policy);
    EXPECT_EQ(sel.row, cell.firing.front()) << where;
    EXPECT_TRUE(registry.has_key(sel.template_key));
    if (sel.row == DecisionRow::wrong_part) {
      EXPECT_EQ(sel.template_key, cell.graph.find_label(cell.label)->template_key);
    }
    ++histogram[sel.row];
  }
  EXPECT_EQ(histogram[DecisionRow::full_credit], 24);
  EXPECT_EQ(histogram[DecisionRow::no_reference], 24);
  EXPECT_EQ(histogram[DecisionRow::off_structure], 2);
}

TEST(DecisionTable, ContrastEdgeWithZeroScore) {
  const auto g = decision_graph("contrast", false);
  adg::SelectionContext ctx{"K", 0, 2, true, {}, adg::relation_between(g, "r", "ans"), std::nullopt};
  ctx.alignment.node_id = "r";
  ctx.alignment.aligned = true;
  const auto sel = adg::select_template(testing_support::templates(), g, ctx);
  EXPECT_EQ(sel.template_key, "wrong_part.contrast");
}

TEST(DecisionTable, OrientationFlipsCauseAndResult) {
  const auto registry = testing_support::templates();
  for (bool response_is_source : {false, true}) {
    const auto g = decision_graph("cause", response_is_source);
    adg::SelectionContext ctx{"K", 0, 2, true, {}, adg::relation_between(g, "r", "ans"), std::nullopt};
    ctx.alignment.node_id = "r";
    ctx.alignment.aligned = true;
    const auto sel = adg::select_template(registry, g, ctx);
    // edge ans->r: r is the cause of the answer; edge r->ans: r is its result
    EXPECT_EQ(sel.template_key, response_is_source ? "wrong_part.result" : "wrong_part.cause");
  }
}

TEST(DecisionTable, AnalyticRowAndErrors) {
  const auto registry = testing_support::templates();
  const auto g = testing_support::en1();
  adg::SelectionContext ctx{"C", 0, 2, false, {}, std::nullopt, std::string("visible_only")};
  EXPECT_EQ(adg::select_template(registry, g, ctx).row, DecisionRow::analytic);
  ctx.error_signature = "unknown";
  EXPECT_EQ(adg::select_template(registry, g, ctx).row, DecisionRow::no_reference);
  ctx.score = 3;
  EXPECT_EQ(code_of([&] { adg::select_template(registry, g, ctx); }), "score-range");
  ctx.score = 2;
  const auto empty = adg::load_registry(R"({"schema": "adg-templates/1", "templates": []})");
  EXPECT_EQ(code_of([&] { adg::select_template(empty, g, ctx); }), "unbound-template");
}

// --- generate_feedback ---------------------------------------------------------------

TEST(GenerateFeedback, WalkthroughForCriterionB) {
  const auto corpus = adg::load_corpus(read_fixture("walkthrough_corpus.json"));
  const auto report = adg::generate_feedback(testing_support::en1(), testing_support::templates(), corpus.prompt("en1"),
                                             corpus.responses[0], adg::CharNgramProvider{});
  ASSERT_EQ(report.items.size(), 3u);
  const auto& b = report.items[1];
  EXPECT_EQ(b.criterion_id, "B");
  EXPECT_EQ(b.row, DecisionRow::insufficient_elements);
  EXPECT_EQ(b.template_key, "insufficient_elements");
  ASSERT_TRUE(b.alignment);
  EXPECT_EQ(b.alignment->node_id, "c1");
  EXPECT_EQ(occurrences(b.rendered_text, "Language is an abstract symbol"), 1u);
  EXPECT_EQ(occurrences(b.rendered_text, "Language is a symbol"), 1u);
  EXPECT_EQ(b.slots.at(Slot::paragraph_number), "2");
  EXPECT_EQ(report.total_score, 5);
  EXPECT_EQ(report.max_total, 6);
  const auto text = report.to_text();
  EXPECT_EQ(text.find("[A1] 2/2"), 0u);
  EXPECT_LT(text.find("[B] 1/2"), text.find("[C] 2/2"));
}

TEST(GenerateFeedback, FullyCorrectResponseCongratulates) {
  const auto corpus = adg::load_corpus(read_fixture("full_corpus.json"));
  const auto report = adg::generate_feedback(testing_support::en1(), testing_support::templates(), corpus.prompts[0],
                                             corpus.responses[0], adg::CharNgramProvider{});
  for (const auto& item : report.items) EXPECT_EQ(item.row, DecisionRow::full_credit);
  EXPECT_NE(report.overall_message.find("Well done"), std::string::npos);
}

TEST(GenerateFeedback, JapaneseReport) {
  const auto corpus = adg::load_corpus(read_fixture("batch_corpus.json"));
  adg::FeedbackConfig config;
  config.policy.language = "ja";
  const auto& r = corpus.responses[1];
  ASSERT_EQ(r.prompt_id, "jp1");
  const auto report = adg::generate_feedback(testing_support::jp1(), testing_support::templates(), corpus.prompt("jp1"), r,
                                             adg::CharNgramProvider{}, config);
  EXPECT_EQ(report.language, "ja");
  for (const auto& item : report.items) EXPECT_EQ(adg::to_u32(item.rendered_text).size() > 0, true);
  EXPECT_NE(report.overall_message.find("点"), std::string::npos);
}

TEST(GenerateFeedback, RejectsMismatchedInputs) {
  auto corpus = adg::load_corpus(read_fixture("walkthrough_corpus.json"));
  auto r = corpus.responses[0];
  const auto g = testing_support::en1();
  const auto reg = testing_support::templates();
  r.per_criterion.erase("C");
  EXPECT_EQ(code_of([&] { adg::generate_feedback(g, reg, corpus.prompts[0], r, adg::CharNgramProvider{}); }), "missing-score");
  r = corpus.responses[0];
  r.prompt_id = "other";
  EXPECT_EQ(code_of([&] { adg::generate_feedback(g, reg, corpus.prompts[0], r, adg::CharNgramProvider{}); }), "prompt-mismatch");
}

TEST(GenerateFeedback, BatchEqualsSequentialAndIsDeterministic) {
  const auto corpus = adg::load_corpus(read_fixture("batch_corpus.json"));
  ASSERT_EQ(corpus.responses.size(), 20u);
  const auto graphs = fixture_graphs();
  const auto registry = testing_support::templates();
  const adg::CharNgramProvider provider;
  const auto parallel = adg::generate_batch(corpus, graphs, registry, provider, {}, false, 8);
  const auto serial = adg::generate_batch(corpus, graphs, registry, provider, {}, false, 1);
  ASSERT_EQ(parallel.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& r = corpus.responses[i];
    const auto single = adg::generate_feedback(graphs.at(r.prompt_id), registry, corpus.prompt(r.prompt_id), r, provider);
    EXPECT_EQ(parallel[i], single);
    EXPECT_EQ(parallel[i].to_document(), serial[i].to_document());
    EXPECT_EQ(parallel[i].items.size(), corpus.prompt(r.prompt_id).criteria.size());
    for (const auto& item : parallel[i].items) {
      EXPECT_EQ(item.rendered_text.find('{'), std::string::npos) << item.rendered_text;
      EXPECT_FALSE(item.rendered_text.empty());
    }
  }
}

TEST(GenerateFeedback, MonotoneFullCredit) {
  const auto corpus = adg::load_corpus(read_fixture("batch_corpus.json"));
  const auto graphs = fixture_graphs();
  const auto registry = testing_support::templates();
  for (auto r : corpus.responses) {
    for (auto& [c, entry] : r.per_criterion) entry.error_signature.reset();
    const auto& prompt = corpus.prompt(r.prompt_id);
    const auto before = adg::generate_feedback(graphs.at(r.prompt_id), registry, prompt, r, adg::CharNgramProvider{});
    for (auto& [c, entry] : r.per_criterion) entry.score = prompt.find_criterion(c)->max_score;
    const auto after = adg::generate_feedback(graphs.at(r.prompt_id), registry, prompt, r, adg::CharNgramProvider{});
    for (std::size_t i = 0; i < after.items.size(); ++i) {
      EXPECT_EQ(after.items[i].row, DecisionRow::full_credit);
      auto a = before.items[i].slots;
      auto b = after.items[i].slots;
      a.erase(Slot::score_fraction);
      b.erase(Slot::score_fraction);
      EXPECT_EQ(a, b) << r.response_id << " " << after.items[i].criterion_id;
      EXPECT_EQ(before.items[i].alignment, after.items[i].alignment);
    }
  }
}

TEST(GenerateFeedback, OracleNodesBypassAligner) {
  const auto corpus = adg::load_corpus(read_fixture("planted_corpus.json"));
  const auto reports = adg::generate_batch(corpus, fixture_graphs(), testing_support::templates(), adg::CharNgramProvider{},
                                           {}, true, 2);
  for (const auto& report : reports) {
    for (const auto& item : report.items) {
      ASSERT_TRUE(item.alignment);
      EXPECT_EQ(item.alignment->provider_kind, adg::ProviderKind::oracle);
      EXPECT_EQ(item.alignment->node_id, corpus.oracle_node(report.response_id, item.criterion_id).value());
    }
  }
}
