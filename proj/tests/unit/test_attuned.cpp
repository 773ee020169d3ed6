#include <gtest/gtest.h>

#include "arena/attuned.h"
#include "arena/harness.h"
#include "oracles.h"

using namespace arena;

namespace {

std::vector<Spectrum> spectra() { return load_spectrum_deck(std::string(ARENA_SOURCE_DIR) + "/data/spectra.tsv"); }

std::vector<attuned::SpectrumRound> rounds_of(const harness::Transcript& t) {
  std::vector<attuned::SpectrumRound> out;
  for (const auto& e : t.events)
    if (e.value("type", "") == "round") out.push_back(attuned::spectrum_round_from_json(e.at("record")));
  return out;
}

attuned::SpectrumRound sent(const std::string& model, int points) {
  attuned::SpectrumRound r;
  r.sender_model = model;
  r.active_team = 0;
  r.points = {points, points ? 0 : 1};
  return r;
}

}  // namespace

TEST(Rings, Points) {
  EXPECT_EQ(attuned::ring_points(0), 4);
  EXPECT_EQ(attuned::ring_points(2.5), 4);
  EXPECT_EQ(attuned::ring_points(3), 3);
  EXPECT_EQ(attuned::ring_points(7.5), 3);
  EXPECT_EQ(attuned::ring_points(8), 2);
  EXPECT_EQ(attuned::ring_points(12.5), 2);
  EXPECT_EQ(attuned::ring_points(13), 0);
}

TEST(ScoreAttuned, WorkedExamples) {
  auto check = [](int t, int s, int o, int ws, int wo) {
    const auto p = attuned::score_attuned(t, s, o);
    EXPECT_EQ(p.sender_team, ws) << t << "," << s << "," << o;
    EXPECT_EQ(p.opponent_team, wo) << t << "," << s << "," << o;
  };
  check(50, 50, 80, 4, 0);
  check(50, 63, 62, 0, 2);
  check(50, 70, 60, 0, 2);
  check(50, 65, 42, 0, 2);  // sender 15 away, opponent 8 away
  check(50, 65, 57, 0, 3);
  check(50, 90, 80, 0, 1);  // opponent closer but outside every ring
  check(50, 60, 40, 2, 0);  // tie goes to the sender team
}

TEST(ScoreAttuned, ExhaustiveAgainstPromptTable) {
  int mismatches = 0;
  for (int t = 0; t <= 100; ++t)
    for (int s = 0; s <= 100; ++s)
      for (int o = 0; o <= 100; ++o) {
        const auto got = attuned::score_attuned(t, s, o);
        const auto want = oracle::attuned_points(t, s, o);
        mismatches += got.sender_team != want[0] || got.opponent_team != want[1];
        // One team is awarded; a sender win outside every ring is worth 0, so both can be 0.
        mismatches += got.sender_team > 0 && got.opponent_team > 0;
        mismatches += std::abs(t - o) < std::abs(t - s) && got.opponent_team == 0;
      }
  EXPECT_EQ(mismatches, 0);
}

TEST(ScoreAttuned, SenderPointsMonotoneInDistance) {
  for (int t : {0, 37, 50, 100})
    for (int o = 0; o <= 100; ++o) {
      int last = 5;
      for (int d = 0; d <= 100; ++d) {
        if (t + d > 100) break;
        const int pts = attuned::score_attuned(t, t + d, o).sender_team;
        EXPECT_LE(pts, last);
        last = pts;
      }
    }
}

TEST(AggregateGuess, HalfUp) {
  EXPECT_EQ(attuned::aggregate_guess(50, 50), 50);
  EXPECT_EQ(attuned::aggregate_guess(50, 51), 51);
  EXPECT_EQ(attuned::aggregate_guess(0, 1), 1);
  EXPECT_EQ(attuned::aggregate_guess(10, 20), 15);
}

TEST(MatchOver, Thresholds) {
  auto m = attuned::new_match({oracle::scripted("a1", "midpoint-guesser"), oracle::scripted("a2", "midpoint-guesser")},
                              {oracle::scripted("b1", "midpoint-guesser"), oracle::scripted("b2", "midpoint-guesser")},
                              spectra(), 1);
  m.teams[0].score = 20;
  m.teams[1].score = 11;
  auto o = attuned::is_attuned_over(m);
  EXPECT_TRUE(o.over);
  EXPECT_EQ(o.winner, 0);
  m.teams[0].score = 19;
  m.teams[1].score = 19;
  EXPECT_FALSE(attuned::is_attuned_over(m).over);
}

TEST(NewMatch, RejectsSharedStoriesAndBadDecks) {
  auto a = std::array<AgentSpec, 2>{oracle::scripted("a1", "midpoint-guesser"), oracle::scripted("a2", "midpoint-guesser")};
  auto b = std::array<AgentSpec, 2>{oracle::scripted("b1", "midpoint-guesser"), oracle::scripted("b2", "midpoint-guesser")};
  a[0].shared_story_ids = a[1].shared_story_ids = {"salt_road"};
  b[0].shared_story_ids = b[1].shared_story_ids = {"salt_road"};
  EXPECT_THROW(attuned::new_match(a, b, spectra(), 1), ConfigError);
  b[0].shared_story_ids = b[1].shared_story_ids = {"paper_orchard"};
  EXPECT_NO_THROW(attuned::new_match(a, b, spectra(), 1));
  EXPECT_THROW(attuned::new_match(a, b, {}, 1), ConfigError);
  EXPECT_THROW(attuned::new_match(a, b, {{"", "Right"}}, 1), ConfigError);
}

TEST(MindRead, Ratios) {
  std::vector<attuned::SpectrumRound> rounds;
  for (int k = 0; k < 9; ++k) rounds.push_back(sent("m", k < 3 ? 2 + k : 0));
  EXPECT_NEAR(*attuned::mindread(rounds, "m"), 1.0 / 3.0, 1e-12);
  std::vector<attuned::SpectrumRound> zeros(4, sent("m", 0));
  EXPECT_EQ(*attuned::mindread(zeros, "m"), 0.0);
  EXPECT_FALSE(attuned::mindread(zeros, "other").has_value());
}

TEST(MindRead, PartnerCodeTeamIsPerfect) {
  harness::AttunedMatchSetup setup{{oracle::scripted("c1", "partner-code"), oracle::scripted("c2", "partner-code")},
                                   {oracle::scripted("m1", "midpoint-guesser"), oracle::scripted("m2", "midpoint-guesser")},
                                   spectra()};
  std::vector<attuned::SpectrumRound> coded;
  for (int m = 0; coded.size() < 20; ++m) {
    const auto t = harness::play_attuned_match(setup, derive_seed(1, m), "m", nullptr);
    ASSERT_FALSE(t.aborted());
    for (const auto& r : rounds_of(t))
      if (r.active_team == 0) coded.push_back(r);
  }
  for (const auto& r : coded) {
    EXPECT_EQ(r.team_guess[0], r.target);
    EXPECT_EQ(r.points[0], 4);
  }
  EXPECT_EQ(*attuned::mindread(coded, "c1"), 1.0);
  EXPECT_EQ(*attuned::mindread(coded, "c2"), 1.0);
}

TEST(MindRead, MidpointTeamsMatchAnalyticRate) {
  const double analytic = oracle::mindread_probability(50, 50);
  EXPECT_NEAR(analytic, 25.0 / 101.0, 1e-12);
  harness::AttunedMatchSetup setup{{oracle::scripted("a1", "midpoint-guesser"), oracle::scripted("a2", "midpoint-guesser")},
                                   {oracle::scripted("b1", "midpoint-guesser"), oracle::scripted("b2", "midpoint-guesser")},
                                   spectra()};
  int rounds = 0, hits = 0;
  for (int m = 0; rounds < 2000; ++m) {
    for (const auto& r : rounds_of(harness::play_attuned_match(setup, derive_seed(2, m), "m", nullptr))) {
      if (rounds == 2000) break;
      ++rounds;
      hits += r.points[static_cast<std::size_t>(r.active_team)] >= 2;
    }
  }
  EXPECT_NEAR(static_cast<double>(hits) / rounds, analytic, 0.03);
}

TEST(Match, TeamsAlternateAndOneTeamScores) {
  harness::AttunedMatchSetup setup{{oracle::scripted("c1", "partner-code"), oracle::scripted("c2", "partner-code")},
                                   {oracle::scripted("k1", "caption-keyword-matcher"), oracle::scripted("k2", "caption-keyword-matcher")},
                                   spectra()};
  const auto t = harness::play_attuned_match(setup, 8, "alt", nullptr);
  const auto rounds = rounds_of(t);
  ASSERT_GT(rounds.size(), 2u);
  for (std::size_t k = 0; k < rounds.size(); ++k) {
    EXPECT_EQ(rounds[k].active_team, static_cast<int>(k % 2));
    EXPECT_EQ((rounds[k].points[0] > 0) + (rounds[k].points[1] > 0), 1);
    EXPECT_EQ(attuned::spectrum_round_from_json(attuned::to_json(rounds[k])), rounds[k]);
  }
  EXPECT_EQ(harness::serialize(t), harness::serialize(harness::play_attuned_match(setup, 8, "alt", nullptr)));
}
