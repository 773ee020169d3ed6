#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "arena/allegories.h"
#include "arena/harness.h"
#include "oracles.h"

using namespace arena;
using namespace arena::allegories;

namespace {

const std::filesystem::path kRoot = ARENA_SOURCE_DIR;

std::vector<HistoricalEvent> events() { return load_events_dir(kRoot / "data/events"); }

const HistoricalEvent& find_event(const std::vector<HistoricalEvent>& all, const std::string& name) {
  for (const auto& e : all)
    if (e.name == name) return e;
  throw std::runtime_error("no event " + name);
}

InterpretationResult reading(const std::string& story, const std::string& event, Information info, bool ok,
                             const std::string& text = "") {
  InterpretationResult r;
  r.story_id = story;
  r.event_name = event;
  r.model = "reader";
  r.condition.information = info;
  if (info != Information::none) r.condition.sampled_name = "Ana";
  r.decoded_correct = ok;
  r.interpretation_text = text;
  return r;
}

}  // namespace

TEST(Events, ParseHeaderAndBody) {
  const auto e = parse_event("Name: Tulip mania\nAliases: tulipomania,  Tulip craze \nCulture: dutch\n\nPrices rose.\n\nThen fell.\n");
  EXPECT_EQ(e.name, "Tulip mania");
  EXPECT_EQ(e.aliases, (std::vector<std::string>{"tulipomania", "Tulip craze"}));
  EXPECT_EQ(e.culture_tag, "dutch");
  EXPECT_NE(e.wiki_text.find("Then fell."), std::string::npos);
  EXPECT_EQ(event_summary(e), "Tulip mania\nPrices rose.");
}

TEST(Events, DataDirectoryLoads) {
  const auto all = events();
  ASSERT_EQ(all.size(), 6u);
  for (const auto& e : all) {
    EXPECT_FALSE(e.culture_tag.empty()) << e.name;
    EXPECT_FALSE(e.wiki_text.empty()) << e.name;
  }
  EXPECT_EQ(find_event(all, "Apollo 13").aliases, (std::vector<std::string>{"Apollo 13 mission", "Apollo XIII"}));
}

TEST(HiddenClues, StrippedWithSpans) {
  const auto [text, clues] = strip_hidden_clues("A <hc>first</hc> and <HC>second</hc> end.");
  EXPECT_EQ(text, "A first and second end.");
  ASSERT_EQ(clues.size(), 2u);
  EXPECT_EQ(text.substr(clues[0].begin, clues[0].end - clues[0].begin), "first");
  EXPECT_EQ(text.substr(clues[1].begin, clues[1].end - clues[1].begin), "second");

  const auto [open, open_clues] = strip_hidden_clues("Start <hc>runs to the end");
  EXPECT_EQ(open, "Start runs to the end");
  EXPECT_EQ(open_clues.size(), 1u);
  EXPECT_EQ(strip_hidden_clues("stray</hc> close").first, "stray close");
}

TEST(AliasMatch, WordBoundedAndCaseInsensitive) {
  const auto all = events();
  const auto& salt = find_event(all, "Salt March");
  EXPECT_EQ(alias_match("Clearly the  SALT\nmarch of 1930.", salt), "Salt March");
  EXPECT_EQ(alias_match("an echo of the Dandi March", salt), "Dandi March");
  EXPECT_FALSE(alias_match("a basalt marcher walked", salt).has_value());
  const auto& apollo = find_event(all, "Apollo 13");
  EXPECT_FALSE(alias_match("Apollo 135 was never flown", apollo).has_value());
  EXPECT_EQ(alias_match("this is Apollo 13's story", apollo), "Apollo 13");
}

// Alias-level decoding over the hand-labelled fixture.
TEST(DecodeCheck, FixtureAgreement) {
  const auto all = events();
  std::ifstream in(kRoot / "tests/fixtures/decode_alias.tsv");
  ASSERT_TRUE(in);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string event, text, want;
    std::getline(fields, event, '\t');
    std::getline(fields, text, '\t');
    std::getline(fields, want, '\t');
    const auto r = decode_check(text, find_event(all, event), nullptr);
    EXPECT_EQ(r.identified, want == "yes") << line;
    ++rows;
  }
  EXPECT_EQ(rows, 30);
}

TEST(DecodeCheck, JudgeStages) {
  const auto all = events();
  const auto& tulip = find_event(all, "Tulip mania");
  const auto hit = decode_check("Plainly about tulipmania. The bulbs say so.", tulip, nullptr);
  EXPECT_TRUE(hit.identified);
  EXPECT_EQ(hit.stage, "alias");
  EXPECT_EQ(hit.evidence, "Plainly about tulipmania.");

  auto yes = make_agent(oracle::scripted("judge", "fixed-choice", {{"identified", "yes"}}), nullptr);
  const auto judged = decode_check("A speculative bubble in flowers. Nothing more.", tulip, yes.get());
  EXPECT_TRUE(judged.identified);
  EXPECT_EQ(judged.stage, "judge");
  EXPECT_EQ(judged.evidence, "A speculative bubble in flowers.");

  auto no = make_agent(oracle::scripted("judge", "fixed-choice"), nullptr);
  EXPECT_FALSE(decode_check("A story about bread.", tulip, no.get()).identified);

  oracle::CallbackAgent broken(oracle::scripted("judge", "fixed-choice"),
                               [](const Observation&) -> ParsedOutput { throw AgentError("down"); });
  const auto fallback = decode_check("A story about bread.", tulip, &broken);
  EXPECT_FALSE(fallback.identified);
  EXPECT_EQ(fallback.stage, "alias-only");
  EXPECT_EQ(fallback.warnings.size(), 1u);
}

TEST(Writer, CompliantStoryKeepsClues) {
  const auto all = events();
  const auto& e = find_event(all, "Salt March");
  auto writer = make_agent(oracle::scripted("w", "canned-writer"), nullptr);
  const auto notes = run_research(e, *writer);
  EXPECT_EQ(notes.pov_character, "Mira, a clerk in the capital");
  const auto a = run_writer(notes, e, Genre::fantasy, 3, *writer, "s1");
  EXPECT_TRUE(a.compliant);
  EXPECT_TRUE(a.compliance_warnings.empty());
  EXPECT_EQ(a.hidden_clues.size(), 3u);
  EXPECT_EQ(a.story_text.find("<hc>"), std::string::npos);
  EXPECT_EQ(a.writer_model, "w");
  EXPECT_EQ(a.plan_text, "Tell the story through the clerk's ledgers.");
}

TEST(Writer, NamingTheEventIsNonCompliant) {
  const auto all = events();
  const auto& e = find_event(all, "Salt March");
  auto writer = make_agent(oracle::scripted("w", "canned-writer", {{"mention_event", "1"}}), nullptr);
  const auto a = run_writer(run_research(e, *writer), e, Genre::science_fiction, 2, *writer, "s2");
  EXPECT_FALSE(a.compliant);
  ASSERT_EQ(a.compliance_warnings.size(), 1u);
  EXPECT_NE(a.compliance_warnings[0].find("Salt March"), std::string::npos);
  EXPECT_THROW(run_writer({}, e, Genre::fantasy, -1, *writer), ConfigError);
}

TEST(Corpus, RoundTripsThroughFiles) {
  const auto all = events();
  const auto dir = std::filesystem::temp_directory_path() / "arena-test-corpus";
  std::filesystem::remove_all(dir);
  const auto written = harness::write_allegory_corpus(std::span(all).subspan(0, 2), oracle::scripted("w", "canned-writer"),
                                                      Genre::fantasy, 3, dir, nullptr, "t");
  const auto loaded = load_corpus(dir);
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded, written);
  EXPECT_EQ(allegory_from_json(to_json(written[0])), written[0]);
  std::filesystem::remove_all(dir);
}

TEST(Names, ConditionNamePrefersPovCharacter) {
  const auto all = events();
  const auto& e = find_event(all, "Tulip mania");
  const auto table = NameTable::load(kRoot / "data/names.tsv");
  Rng rng(3);
  Allegory a;
  a.notes.pov_character = "Mira, a clerk in the capital";
  EXPECT_EQ(condition_name(a, e, table, rng), "Mira");
  a.notes.pov_character = "Arjun Rao (a poet)";
  EXPECT_EQ(condition_name(a, e, table, rng), "Arjun Rao");
  a.notes.pov_character = "an unnamed bulb trader";
  const std::string sampled = condition_name(a, e, table, rng);
  const std::vector<std::string> dutch = {"Pieter", "Anneke", "Joost", "Griet", "Maarten", "Lieke"};
  EXPECT_NE(std::find(dutch.begin(), dutch.end(), sampled), dutch.end()) << sampled;
  EXPECT_THROW(table.sample("martian", rng), ConfigError);
}

TEST(Conditions, PromptVariants) {
  Allegory a;
  a.story_text = "THE STORY BODY";
  InterpretationCondition none{Persona::historian, Information::none, std::nullopt};
  const auto base = interpretation_prompt(a, none);
  EXPECT_NE(base.find("THE STORY BODY"), std::string::npos);
  InterpretationCondition author{Persona::historian, Information::author_name, "Griet"};
  const auto with_author = interpretation_prompt(a, author);
  EXPECT_NE(with_author.find("Griet"), std::string::npos);
  EXPECT_NE(with_author.find(base), std::string::npos);
  InterpretationCondition reader{Persona::historian, Information::reader_name, "Griet"};
  EXPECT_NE(interpretation_prompt(a, reader).find("Griet"), std::string::npos);
  InterpretationCondition missing{Persona::critic, Information::reader_name, std::nullopt};
  EXPECT_THROW(interpretation_prompt(a, missing), ConfigError);
  InterpretationCondition extra{Persona::critic, Information::none, "Griet"};
  EXPECT_THROW(extra.validate(), ConfigError);
}

TEST(Judge, SlotAndCorrectness) {
  const auto all = events();
  Allegory a;
  a.story_id = "s";
  a.story_text = "story";
  auto judge = make_agent(oracle::scripted("j", "fixed-choice", {{"choice", "1"}}), nullptr);
  int correct = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const auto r = judge_allegory_pair(a, all[0], all[1], *judge, rng);
    EXPECT_TRUE(r.true_slot == 1 || r.true_slot == 2);
    EXPECT_EQ(r.choice, 1);
    EXPECT_EQ(r.correct, r.true_slot == 1);
    correct += r.correct;
  }
  // Both slots come up.
  EXPECT_GT(correct, 0);
  EXPECT_LT(correct, 40);
  Rng rng(1);
  EXPECT_THROW(judge_allegory_pair(a, all[0], all[0], *judge, rng), ConfigError);
}

TEST(Negatives, FileAndHarvest) {
  const auto table = load_negatives(kRoot / "data/negatives.tsv");
  EXPECT_EQ(table.at("Salt March"), "Tulip mania");
  const auto all = events();
  const std::vector<InterpretationResult> results = {
      reading("a", "Salt March", Information::none, false, "Surely the Chernobyl disaster."),
      reading("b", "Salt March", Information::none, false, "Tulip mania, or Chernobyl disaster again."),
      reading("c", "Salt March", Information::none, true, "Salt March and tulipomania"),
      reading("d", "Apollo 13", Information::none, false, "Tulip mania, clearly."),
  };
  const auto mined = harvest_negatives(results, all);
  EXPECT_EQ(mined.at("Salt March"), "Chernobyl disaster");
  EXPECT_EQ(mined.at("Apollo 13"), "Tulip mania");
  EXPECT_EQ(mined.count("Tulip mania"), 0u);
}

TEST(Accuracy, PairedAgainstDefault) {
  std::vector<InterpretationResult> results;
  for (int s = 0; s < 6; ++s) {
    const std::string id = "s" + std::to_string(s);
    results.push_back(reading(id, "e", Information::none, s < 2));
    results.push_back(reading(id, "e", Information::author_name, true));
    results.push_back(reading(id, "e", Information::reader_name, s < 2));
  }
  results.push_back(reading("extra", "e", Information::reader_name, true));
  const auto rows = accuracy_table(results);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.model, "reader");
    switch (r.information) {
      case Information::none:
        EXPECT_NEAR(r.accuracy, 2.0 / 6.0, 1e-12);
        EXPECT_FALSE(r.vs_default.has_value());
        break;
      case Information::author_name:
        // Four stories move from miss to hit, none the other way: t = 3.16 on 5 df.
        ASSERT_TRUE(r.vs_default.has_value());
        EXPECT_LT(r.vs_default->p_value, 0.05);
        EXPECT_TRUE(r.significant);
        EXPECT_EQ(r.accuracy, 1.0);
        break;
      case Information::reader_name:
        EXPECT_EQ(r.n, 7);
        ASSERT_TRUE(r.vs_default.has_value());
        EXPECT_EQ(r.vs_default->p_value, 1.0);
        EXPECT_FALSE(r.significant);
        EXPECT_EQ(r.warnings.size(), 1u);
        break;
    }
  }
}

TEST(Readings, ConditionGridAndSharedNames) {
  const auto all = events();
  const auto dir = std::filesystem::temp_directory_path() / "arena-test-readings";
  std::filesystem::remove_all(dir);
  harness::AllegoryReadingSetup setup;
  setup.corpus = harness::write_allegory_corpus(std::span(all).subspan(0, 2), oracle::scripted("w", "canned-writer"),
                                                Genre::fantasy, 3, dir, nullptr, "r");
  setup.events = all;
  setup.reader = oracle::scripted("reader", "fixed-interpretation", {{"text", "A parable of a clerk."}});
  setup.names = NameTable::load(kRoot / "data/names.tsv");
  const auto t = harness::play_allegory_readings(setup, 5, "readings", nullptr);
  ASSERT_FALSE(t.aborted());
  std::map<std::string, std::set<std::string>> names_per_story;
  int n = 0;
  for (const auto& e : t.events) {
    if (e.value("type", "") != "interpretation") continue;
    const auto r = interpretation_result_from_json(e.at("record"));
    ++n;
    EXPECT_FALSE(r.decoded_correct);
    if (r.condition.information == Information::none) {
      EXPECT_FALSE(r.condition.sampled_name.has_value());
    } else {
      ASSERT_TRUE(r.condition.sampled_name.has_value());
      names_per_story[r.story_id].insert(*r.condition.sampled_name);
    }
  }
  EXPECT_EQ(n, 2 * 9);
  for (const auto& [story, names] : names_per_story) EXPECT_EQ(names.size(), 1u) << story;
  std::filesystem::remove_all(dir);
}
