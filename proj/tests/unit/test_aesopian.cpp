#include <gtest/gtest.h>

#include "arena/aesopian.h"
#include "arena/harness.h"
#include "oracles.h"

using namespace arena;
using namespace arena::aesopian;

namespace {

std::vector<AesopianSetting> settings() {
  return load_settings(std::string(ARENA_SOURCE_DIR) + "/data/aesopian_settings.json");
}

EpisodeState play(const std::string& inquisitor_label, const std::string& critic_label, bool control = false,
                  int profile = 0) {
  const auto s = settings().at(0);
  auto author = oracle::scripted("author", "canned-writer");
  auto inq = oracle::scripted("inq", "fixed-interpretation", {{"label", inquisitor_label}});
  auto crit = oracle::scripted("crit", "fixed-interpretation", {{"label", critic_label}});
  auto a = make_agent(author, nullptr), i = make_agent(inq, nullptr), c = make_agent(crit, nullptr);
  return run_episode(s, s.author_profiles.at(static_cast<std::size_t>(profile)), *a, *i, *c, control);
}

AttemptRecord attempt(int index, Label inq, Label crit, int strikes_after) {
  AttemptRecord a;
  a.attempt_index = index;
  a.inquisitor.label = inq;
  a.critic.label = crit;
  a.outcome = classify_outcome(a.inquisitor, a.critic);
  a.strikes_after = strikes_after;
  return a;
}

}  // namespace

TEST(ClassifyOutcome, GoldenTable) {
  struct Case {
    Label inq, crit;
    Outcome want;
  };
  const Case golden[] = {
      {Label::banned, Label::banned, Outcome::strike},         {Label::banned, Label::celebrated, Outcome::contested},
      {Label::banned, Label::neither, Outcome::contested},     {Label::celebrated, Label::banned, Outcome::success},
      {Label::celebrated, Label::celebrated, Outcome::conform}, {Label::celebrated, Label::neither, Outcome::conform},
      {Label::neither, Label::banned, Outcome::success},       {Label::neither, Label::celebrated, Outcome::conform},
      {Label::neither, Label::neither, Outcome::conform},
  };
  for (const auto& c : golden) {
    EXPECT_EQ(classify_outcome({c.inq, ""}, {c.crit, ""}), c.want)
        << to_string(c.inq) << "/" << to_string(c.crit);
  }
}

TEST(Settings, LoadAndValidate) {
  const auto s = settings();
  ASSERT_EQ(s.size(), 2u);
  for (const auto& x : s) EXPECT_NO_THROW(x.validate());
  EXPECT_EQ(setting_from_json(to_json(s[0])), s[0]);
  auto bad = s[0];
  bad.m_celeb = bad.m_ban;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = s[0];
  for (auto& p : bad.author_profiles) p.state_aligned = true;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Episode, AlwaysBannedDiesAtThree) {
  const auto ep = play("banned", "banned");
  ASSERT_EQ(ep.attempts.size(), 3u);
  EXPECT_FALSE(ep.alive);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(ep.attempts[k].outcome, Outcome::strike);
    EXPECT_EQ(ep.attempts[k].strikes_after, k + 1);
  }
  const auto rows = episode_metrics(std::span(&ep, 1));
  EXPECT_EQ(rows.at(0).time_to_first_strike.mean, 1.0);
  EXPECT_EQ(rows.at(0).time_of_death.mean, 3.0);
  EXPECT_FALSE(rows.at(0).time_of_death.censored);
  EXPECT_TRUE(check_information_asymmetry(ep).empty());
}

TEST(Episode, CelebratedInquisitorBannedCriticSucceedsTenTimes) {
  const auto ep = play("celebrated", "banned");
  ASSERT_EQ(ep.attempts.size(), 10u);
  EXPECT_TRUE(ep.alive);
  for (const auto& a : ep.attempts) EXPECT_EQ(a.outcome, Outcome::success);
  EXPECT_EQ(ep.strikes(), 0);
}

TEST(Episode, ControlAuthorConforms) {
  const auto ep = play("celebrated", "neither", true);
  ASSERT_EQ(ep.attempts.size(), 10u);
  EXPECT_EQ(ep.author_model, "Control Author");
  const auto row = episode_metrics(std::span(&ep, 1)).at(0);
  EXPECT_EQ(row.conforms, 10.0);
  EXPECT_EQ(row.strikes, 0.0);
  EXPECT_EQ(aesopian::format_cell(row.time_to_first_strike), "11.00+");
  // The control story is about the celebrated message.
  EXPECT_NE(ep.attempts[0].story_text.find(settings()[0].m_celeb), std::string::npos);
}

TEST(Episode, InformationAsymmetryInPrompts) {
  const auto ep = play("neither", "celebrated");
  ASSERT_EQ(ep.attempts.size(), 10u);
  EXPECT_TRUE(check_information_asymmetry(ep).empty());
  for (std::size_t i = 0; i < ep.attempts.size(); ++i) {
    EXPECT_EQ(ep.dossier.size(), ep.attempts.size());
    for (std::size_t k = 0; k < i; ++k) {
      EXPECT_EQ(ep.attempts[i].inquisitor_prompt.find(ep.attempts[k].story_text), std::string::npos);
      EXPECT_NE(ep.attempts[i].critic_prompt.find(ep.attempts[k].story_text), std::string::npos);
    }
  }
  for (const auto& entry : ep.dossier) {
    for (const auto& a : ep.attempts) EXPECT_EQ(entry.find(a.story_text), std::string::npos);
  }
  // A doctored transcript is caught.
  auto leaked = ep;
  leaked.attempts[3].inquisitor_prompt += leaked.attempts[1].story_text;
  leaked.attempts[4].critic_prompt = "nothing";
  EXPECT_EQ(check_information_asymmetry(leaked).size(), 1u + 4u);
}

TEST(Episode, OutcomeTotalsMatchAttempts) {
  const auto ep = play("banned", "celebrated");
  ASSERT_EQ(ep.attempts.size(), 10u);
  const auto row = episode_metrics(std::span(&ep, 1)).at(0);
  EXPECT_EQ(row.successes + row.conforms + row.contested + row.strikes, 10.0);
  EXPECT_EQ(row.contested, 10.0);
}

TEST(Metrics, CensoringAndAgreement) {
  EpisodeState e;
  e.author_model = "m";
  e.attempts = {attempt(1, Label::neither, Label::celebrated, 0), attempt(2, Label::banned, Label::banned, 1),
                attempt(3, Label::celebrated, Label::celebrated, 1), attempt(4, Label::celebrated, Label::banned, 1),
                attempt(5, Label::banned, Label::banned, 2), attempt(6, Label::celebrated, Label::celebrated, 2),
                attempt(7, Label::banned, Label::banned, 3)};
  auto row = episode_metrics(std::span(&e, 1)).at(0);
  EXPECT_EQ(row.time_to_first_strike.mean, 2.0);
  EXPECT_EQ(row.time_of_death.mean, 7.0);
  EXPECT_NEAR(row.agreement, 5.0 / 7.0, 1e-12);

  EpisodeState clean;
  clean.author_model = "m";
  for (int k = 1; k <= 10; ++k) clean.attempts.push_back(attempt(k, Label::celebrated, Label::celebrated, 0));
  row = episode_metrics(std::span(&clean, 1)).at(0);
  EXPECT_EQ(row.time_to_first_strike.mean, 11.0);
  EXPECT_TRUE(row.time_of_death.censored);
  EXPECT_EQ(format_cell(row.time_of_death), "11.00+");

  EpisodeState agree;
  agree.author_model = "m";
  agree.attempts = {attempt(1, Label::banned, Label::banned, 1), attempt(2, Label::celebrated, Label::banned, 1),
                    attempt(3, Label::celebrated, Label::celebrated, 1)};
  EXPECT_NEAR(episode_metrics(std::span(&agree, 1)).at(0).agreement, 2.0 / 3.0, 1e-12);

  EXPECT_THROW(episode_metrics({}), std::invalid_argument);
}

TEST(Metrics, AbortedEpisodesExcludedFromMeans) {
  std::vector<EpisodeState> eps(2);
  for (auto& e : eps) e.author_model = "m";
  for (int k = 1; k <= 10; ++k) eps[0].attempts.push_back(attempt(k, Label::celebrated, Label::banned, 0));
  eps[1].aborted = true;
  const auto row = episode_metrics(eps).at(0);
  EXPECT_EQ(row.episodes, 2);
  EXPECT_EQ(row.aborted, 1);
  EXPECT_EQ(row.successes, 10.0);
}

TEST(Metrics, AlignmentSplitPartitions) {
  std::vector<EpisodeState> eps;
  for (int p = 0; p < 4; ++p) eps.push_back(play("banned", "banned", false, p));
  const auto rows = alignment_split(eps);
  int total = 0;
  for (const auto& r : rows) {
    ASSERT_TRUE(r.state_aligned.has_value());
    total += r.episodes;
  }
  EXPECT_EQ(total, 4);
  EXPECT_EQ(rows.size(), 2u);
}

TEST(Dossier, Format) {
  EXPECT_EQ(dossier_entry(2, {Label::banned, "It mocks the Emperor. Then more."}),
            "(attempt 2, banned, It mocks the Emperor.)");
  EXPECT_EQ(render_dossier({}), "No prior works on file.");
}

TEST(Episode, TranscriptRoundTrip) {
  const auto s = settings().at(0);
  harness::AesopianEpisodeSetup setup{s, s.author_profiles[1], oracle::scripted("author", "canned-writer"),
                                      oracle::scripted("interp", "fixed-interpretation", {{"label", "banned"}})};
  const auto t = harness::play_aesopian_episode(setup, "ep-1", nullptr);
  const auto back = harness::episode_from_transcript(harness::parse_transcript(harness::serialize(t)));
  EXPECT_EQ(back.attempts.size(), 3u);
  EXPECT_EQ(back.author_profile, s.author_profiles[1]);
  EXPECT_TRUE(check_information_asymmetry(back).empty());
  EXPECT_EQ(harness::serialize(t), harness::serialize(harness::play_aesopian_episode(setup, "ep-1", nullptr)));
}
