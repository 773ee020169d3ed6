// Acceptance run: one PASS/FAIL line per criterion on stdout, details after
// the name. Exit status is non-zero when a required criterion fails; the
// live smoke is optional and never affects it.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <algorithm>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arena/aesopian.h"
#include "arena/allegories.h"
#include "arena/attuned.h"
#include "arena/harness.h"
#include "arena/stats.h"
#include "arena/visual_allusions.h"
#include "oracles.h"

namespace fs = std::filesystem;
using namespace arena;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

fs::path g_root;
fs::path g_scratch;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Card> deck() { return load_deck_manifest(g_root / "data/deck/deck.tsv"); }

// All 4^3 vote configurations for the three non-storytellers: voter k picks
// the card of seat (choice k).
template <typename Fn>
void for_each_config(int storyteller, Fn fn) {
  std::vector<int> voters;
  for (int s = 0; s < 4; ++s)
    if (s != storyteller) voters.push_back(s);
  for (int code = 0; code < 64; ++code) {
    std::map<int, int> votes;
    int c = code;
    for (int v : voters) {
      votes[v] = 100 + c % 4;
      c /= 4;
    }
    fn(votes);
  }
}

std::map<int, int> played4() { return {{0, 100}, {1, 101}, {2, 102}, {3, 103}}; }

bool has_self_vote(const std::map<int, int>& votes) {
  for (const auto& [v, card] : votes)
    if (card == 100 + v) return true;
  return false;
}

Verdict va_scoring() {
  const auto t0 = std::chrono::steady_clock::now();
  int mismatches = 0, checked = 0, rejected = 0;
  for (int st = 0; st < 4; ++st) {
    for_each_config(st, [&](const std::map<int, int>& votes) {
      ++checked;
      if (has_self_vote(votes)) {
        // The rules forbid voting for one's own card; both sides reject it.
        try {
          va::score_round(st, 100 + st, played4(), votes);
          ++mismatches;
        } catch (const std::invalid_argument&) {
          ++rejected;
        }
        return;
      }
      if (va::score_round(st, 100 + st, played4(), votes) != oracle::va_points(st, 100 + st, played4(), votes)) {
        ++mismatches;
      }
    });
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && checked == 256 && secs < 1.0,
          std::to_string(checked) + " configurations (" + std::to_string(rejected) + " self-votes rejected), " +
              std::to_string(mismatches) + " mismatches, " + fmt("%.3f s", secs)};
}

Verdict clue_taxonomy() {
  int bad = 0, counts[3] = {0, 0, 0};
  for (int st = 0; st < 4; ++st) {
    for_each_config(st, [&](const std::map<int, int>& votes) {
      int m = 0;
      for (const auto& [v, card] : votes) m += card == 100 + st;
      const auto type = va::classify_clue(votes, 100 + st);
      const auto expect = m == 3 ? va::ClueType::obvious : m == 0 ? va::ClueType::obscure : va::ClueType::just_right;
      if (type != expect) ++bad;
      ++counts[static_cast<int>(type)];
      if (has_self_vote(votes)) return;
      const int delta = va::score_round(st, 100 + st, played4(), votes).at(st);
      if ((delta == 3) != (type == va::ClueType::just_right)) ++bad;
    });
  }
  return {bad == 0, "obvious " + std::to_string(counts[0]) + ", obscure " + std::to_string(counts[1]) +
                        ", just-right " + std::to_string(counts[2]) + ", violations " + std::to_string(bad)};
}

std::vector<va::RoundRecord> spark_construction(const std::string& kind) {
  std::vector<va::RoundRecord> rounds;
  for (int rep = 0; rep < 3; ++rep) {
    for (int st = 0; st < 4; ++st) {
      std::vector<bool> correct(4, false);
      for (int g = 0; g < 4; ++g) {
        if (g == st) continue;
        const bool partner = (st == 0 && g == 1) || (st == 1 && g == 0);
        if (kind == "exclusive") correct[g] = partner;
        else if (kind == "uniform") correct[g] = (rep + g) % 2 == 0;
        else correct[g] = !partner;  // anti-exclusive
      }
      rounds.push_back(oracle::va_round(st, 4, correct));
    }
  }
  return rounds;
}

Verdict spark() {
  std::ostringstream detail;
  bool ok = true;
  const std::pair<const char*, double> cases[] = {{"exclusive", 1.0}, {"uniform", 0.0}, {"anti-exclusive", -1.0}};
  for (const auto& [kind, want] : cases) {
    const auto rounds = spark_construction(kind);
    const auto got = va::spark_coefficient(rounds, 0, 1, 4);
    const auto ref = oracle::spark(rounds, 0, 1, 4);
    const bool hit = got && ref && std::abs(*got - want) <= 1e-12 && std::abs(*ref - want) <= 1e-12;
    ok = ok && hit;
    detail << kind << " " << (got ? fmt("%.3f", *got) : "absent") << "; ";
  }

  // Exclusive pair in play: partner-code seats 0 and 1, keyword matchers at 2, 3.
  const auto d = deck();
  harness::VaGameSetup exclusive{{oracle::scripted("code-a", "partner-code"), oracle::scripted("code-b", "partner-code"),
                             oracle::scripted("kw-a", "caption-keyword-matcher"),
                             oracle::scripted("kw-b", "caption-keyword-matcher")},
                            d};
  std::vector<va::RoundRecord> pooled;
  int fired_at = -1;
  for (int g = 0; g < 10 && fired_at < 0; ++g) {
    const auto t = harness::play_va_game(exclusive, derive_seed(2024, g), "spark-" + std::to_string(g), nullptr);
    for (const auto& r : oracle::va_rounds(t)) {
      pooled.push_back(r);
      int sc[2] = {0, 0};
      for (const auto& x : pooled)
        if (x.storyteller < 2) ++sc[x.storyteller];
      if (sc[0] == 0 || sc[1] == 0) continue;
      const auto p = va::spark_significance(pooled, 0, 1);
      if (!p.degenerate && p.p_value < 0.05) {
        fired_at = std::max(sc[0], sc[1]);
        break;
      }
    }
  }
  ok = ok && fired_at > 0 && fired_at <= 10;
  detail << "exclusive pair significant after " << (fired_at > 0 ? std::to_string(fired_at) : "never")
         << " storyteller rounds per player; ";

  harness::VaGameSetup uniform{{oracle::scripted("kw-1", "caption-keyword-matcher"), oracle::scripted("kw-2", "caption-keyword-matcher"),
                           oracle::scripted("kw-3", "caption-keyword-matcher"), oracle::scripted("kw-4", "caption-keyword-matcher")},
                          d};
  int false_alarms = 0;
  for (int g = 0; g < 100; ++g) {
    const auto t = harness::play_va_game(uniform, derive_seed(77, g), "uniform-" + std::to_string(g), nullptr);
    const auto rounds = oracle::va_rounds(t);
    if (va::spark_significance(rounds, 0, 1).p_value < 0.05) ++false_alarms;
  }
  ok = ok && false_alarms == 0;
  detail << "uniform pair significant in " << false_alarms << "/100 games";
  return {ok, detail.str()};
}

Verdict attuned_rings() {
  const auto t0 = std::chrono::steady_clock::now();
  int mismatches = 0, checked = 0;
  auto check = [&](int t, int s, int o) {
    ++checked;
    const auto got = attuned::score_attuned(t, s, o);
    const auto want = oracle::attuned_points(t, s, o);
    if (got.sender_team != want[0] || got.opponent_team != want[1]) ++mismatches;
  };
  for (int t = 0; t <= 100; t += 5)
    for (int s = 0; s <= 100; s += 5)
      for (int o = 0; o <= 100; o += 5) check(t, s, o);
  Rng rng(9001);
  for (int k = 0; k < 10000; ++k) {
    check(static_cast<int>(rng.uniform(0, 100)), static_cast<int>(rng.uniform(0, 100)), static_cast<int>(rng.uniform(0, 100)));
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 5.0,
          std::to_string(checked) + " triples, " + std::to_string(mismatches) + " mismatches, " + fmt("%.3f s", secs)};
}

std::vector<attuned::SpectrumRound> attuned_rounds(const harness::Transcript& t) {
  std::vector<attuned::SpectrumRound> out;
  for (const auto& e : t.events)
    if (e.value("type", "") == "round") out.push_back(attuned::spectrum_round_from_json(e.at("record")));
  return out;
}

Verdict mindread_check() {
  const auto spectra = load_spectrum_deck(g_root / "data/spectra.tsv");
  std::ostringstream detail;

  // Partner-code team A against midpoint guessers until A has sent 20 times.
  harness::AttunedMatchSetup coded{{oracle::scripted("code-1", "partner-code"), oracle::scripted("code-2", "partner-code")},
                                   {oracle::scripted("mid-1", "midpoint-guesser"), oracle::scripted("mid-2", "midpoint-guesser")},
                                   spectra};
  std::vector<attuned::SpectrumRound> sent;
  for (int m = 0; sent.size() < 20 && m < 50; ++m) {
    const auto t = harness::play_attuned_match(coded, derive_seed(31, m), "coded-" + std::to_string(m), nullptr);
    for (const auto& r : attuned_rounds(t))
      if (r.active_team == 0 && sent.size() < 20) sent.push_back(r);
  }
  int coded_hits = 0;
  for (const auto& r : sent) coded_hits += r.points[0] >= 2;
  const auto m1 = attuned::mindread(sent, "code-1"), m2 = attuned::mindread(sent, "code-2");
  const bool coded_ok = sent.size() == 20 && coded_hits == 20 && m1 == 1.0 && m2 == 1.0;
  detail << "partner-code " << coded_hits << "/" << sent.size() << " sender rounds; ";

  harness::AttunedMatchSetup mid{{oracle::scripted("mid-a1", "midpoint-guesser"), oracle::scripted("mid-a2", "midpoint-guesser")},
                                 {oracle::scripted("mid-b1", "midpoint-guesser"), oracle::scripted("mid-b2", "midpoint-guesser")},
                                 spectra};
  std::vector<attuned::SpectrumRound> all;
  for (int m = 0; all.size() < 2000 && m < 1000; ++m) {
    const auto t = harness::play_attuned_match(mid, derive_seed(53, m), "mid-" + std::to_string(m), nullptr);
    for (const auto& r : attuned_rounds(t))
      if (all.size() < 2000) all.push_back(r);
  }
  int hits = 0;
  for (const auto& r : all) hits += r.points[static_cast<std::size_t>(r.active_team)] >= 2;
  const double empirical = all.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(all.size());
  const double analytic = oracle::mindread_probability(50, 50);
  const bool mid_ok = all.size() == 2000 && std::abs(empirical - analytic) <= 0.03;
  detail << "midpoint " << fmt("%.4f", empirical) << " over " << all.size() << " rounds vs analytic "
         << fmt("%.4f", analytic);
  return {coded_ok && mid_ok, detail.str()};
}

Verdict greedy() {
  const auto schedule = harness::schedule_games(7, 100, 4);
  const auto audit = oracle::audit_schedule(7, schedule);
  const auto [lo, hi] = std::minmax_element(audit.game_counts.begin(), audit.game_counts.end());
  std::string counts;
  for (int c : audit.game_counts) counts += (counts.empty() ? "" : "/") + std::to_string(c);
  return {audit.all_argmin && *hi - *lo <= 2 && schedule.size() == 100,
          "games per model " + counts + ", spread " + std::to_string(*hi - *lo) +
              (audit.all_argmin ? ", every pick an argmin" : ", non-argmin pick at " + audit.first_violation)};
}

Verdict aesopian_logic() {
  using aesopian::Label;
  using aesopian::Outcome;
  std::ostringstream detail;
  bool ok = true;
  const Label labels[] = {Label::banned, Label::celebrated, Label::neither};
  // Rows: critic label; columns: inquisitor label.
  const Outcome golden[3][3] = {{Outcome::strike, Outcome::success, Outcome::success},
                                {Outcome::contested, Outcome::conform, Outcome::conform},
                                {Outcome::contested, Outcome::conform, Outcome::conform}};
  int table_bad = 0;
  for (int c = 0; c < 3; ++c)  // critic label
    for (int i = 0; i < 3; ++i)  // inquisitor label
      table_bad += aesopian::classify_outcome({labels[i], ""}, {labels[c], ""}) != golden[c][i];
  ok = ok && table_bad == 0;
  detail << "golden table " << 9 - table_bad << "/9; ";

  const auto settings = aesopian::load_settings(g_root / "data/aesopian_settings.json");
  const auto& setting = settings.at(0);
  const auto& profile = setting.author_profiles.at(0);
  std::vector<aesopian::EpisodeState> episodes;
  int violations = 0;
  auto play = [&](harness::AesopianEpisodeSetup setup, const std::string& id) {
    const auto t = harness::play_aesopian_episode(setup, id, nullptr);
    auto ep = harness::episode_from_transcript(harness::parse_transcript(harness::serialize(t)));
    violations += static_cast<int>(aesopian::check_information_asymmetry(ep).size());
    return ep;
  };

  const auto banned = play({setting, profile, oracle::scripted("author", "canned-writer"),
                            oracle::scripted("interp", "fixed-interpretation", {{"label", "banned"}})},
                           "banned");
  const auto banned_rows = aesopian::episode_metrics(std::span(&banned, 1));
  const bool death_ok = banned.attempts.size() == 3 && !banned.alive && banned_rows.at(0).time_of_death.mean == 3.0 &&
                        !banned_rows.at(0).time_of_death.censored;
  ok = ok && death_ok;
  detail << "always-banned: " << banned.attempts.size() << " attempts, death " << aesopian::format_cell(banned_rows.at(0).time_of_death)
         << "; ";

  auto control_setup = harness::AesopianEpisodeSetup{setting, profile, oracle::scripted("author", "canned-writer"),
                                                     oracle::scripted("interp", "fixed-interpretation", {{"label", "celebrated"}})};
  control_setup.control = true;
  const auto control = play(control_setup, "control");
  const auto control_rows = aesopian::episode_metrics(std::span(&control, 1));
  const bool control_ok = control.attempts.size() == 10 && control_rows.at(0).conforms == 10.0 &&
                          control_rows.at(0).strikes == 0.0 && control.author_model == "Control Author";
  ok = ok && control_ok;
  detail << "control: " << control_rows.at(0).conforms << " conforms, " << control_rows.at(0).strikes << " strikes; ";

  // A mixed episode where the critic sees through the guise.
  auto mixed = harness::AesopianEpisodeSetup{setting, setting.author_profiles.back(), oracle::scripted("author", "canned-writer"),
                                             oracle::scripted("interp", "fixed-interpretation", {{"label", "celebrated"}})};
  mixed.critic_override = oracle::scripted("critic", "fixed-interpretation", {{"label", "banned"}});
  const auto mixed_ep = play(mixed, "mixed");
  ok = ok && mixed_ep.attempts.size() == 10 && violations == 0;
  detail << "asymmetry violations " << violations << " over 3 transcripts";
  return {ok, detail.str()};
}

Verdict allegory_pipeline() {
  using namespace allegories;
  std::ostringstream detail;
  auto events = load_events_dir(g_root / "data/events");
  events.resize(4);
  const auto writer = oracle::scripted("writer", "canned-writer");
  const fs::path dir = g_scratch / "allegory-corpus";
  fs::remove_all(dir);
  int invalid = 0, total = 0;
  for (const auto genre : {Genre::fantasy, Genre::science_fiction}) {
    const auto written = harness::write_allegory_corpus(events, writer, genre, 3, dir, nullptr,
                                                        std::string(to_string(genre)));
    for (const auto& a : written) {
      ++total;
      invalid += !a.compliant || a.hidden_clues.size() != 3 || !a.compliance_warnings.empty();
    }
  }
  const auto corpus = load_corpus(dir);
  detail << corpus.size() << " stories (" << invalid << " invalid); ";

  harness::AllegoryReadingSetup reading{corpus, events,
                                        oracle::scripted("reader", "fixed-interpretation",
                                                         {{"text", "A story of ledgers burned in a quiet city."}}),
                                        std::nullopt, NameTable::load(g_root / "data/names.tsv")};
  const auto rt = harness::parse_transcript(harness::serialize(harness::play_allegory_readings(reading, 17, "grid", nullptr)));
  int readings = 0;
  std::set<std::pair<int, int>> cells;
  for (const auto& e : rt.events) {
    if (e.value("type", "") != "interpretation") continue;
    const auto r = interpretation_result_from_json(e.at("record"));
    ++readings;
    ++total;
    cells.insert({static_cast<int>(r.condition.persona), static_cast<int>(r.condition.information)});
    invalid += r.interpretation_text.empty() || !r.warnings.empty() ||
               (r.condition.information != Information::none && !r.condition.sampled_name);
  }
  detail << readings << " readings over " << cells.size() << " conditions; ";

  harness::AllegoryJudgingSetup judging{corpus, events, load_negatives(g_root / "data/negatives.tsv"),
                                        oracle::scripted("judge", "fixed-choice", {{"choice", "1"}})};
  const auto jt = harness::parse_transcript(harness::serialize(harness::play_allegory_judging(judging, 19, "judging", nullptr)));
  int judged = 0;
  for (const auto& e : jt.events) {
    if (e.value("type", "") != "judge") continue;
    const auto& r = e.at("record");
    ++judged;
    ++total;
    const int choice = r.at("choice").get<int>();
    invalid += choice < 1 || choice > 4;
  }
  detail << judged << " judgements; schema validity " << fmt("%.1f%%", total ? 100.0 * (total - invalid) / total : 0.0) << "; ";

  // Hand-adjudicated alias fixture: event <tab> interpretation <tab> expected.
  std::map<std::string, HistoricalEvent> by_name;
  for (const auto& ev : load_events_dir(g_root / "data/events")) by_name[ev.name] = ev;
  std::istringstream fixture(read_file(g_root / "tests/fixtures/decode_alias.tsv"));
  std::string line;
  int items = 0, wrong = 0;
  while (std::getline(fixture, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto a = line.find('\t'), b = line.rfind('\t');
    const auto verdict = decode_check(line.substr(a + 1, b - a - 1), by_name.at(line.substr(0, a)), nullptr);
    ++items;
    wrong += verdict.identified != (line.substr(b + 1) == "yes");
  }
  detail << "alias fixture " << items - wrong << "/" << items;
  const bool ok = corpus.size() == 8 && invalid == 0 && readings == 72 && cells.size() == 9 && judged == 8 &&
                  !rt.aborted() && !jt.aborted() && items == 30 && wrong == 0;
  return {ok, detail.str()};
}

Verdict statistics() {
  std::ostringstream detail;
  Rng rng(4242);
  double worst[3] = {0, 0, 0};
  double chi2_full_worst = 0;
  int t_within = 0;
  for (int k = 0; k < 50; ++k) {
    const int n1 = static_cast<int>(rng.uniform(5, 8)), n2 = static_cast<int>(rng.uniform(5, 8));
    std::vector<double> a, b;
    const int shift = static_cast<int>(rng.uniform(0, 6));
    for (int i = 0; i < n1; ++i) a.push_back(static_cast<double>(rng.uniform(0, 20)));
    for (int i = 0; i < n2; ++i) b.push_back(static_cast<double>(rng.uniform(0, 20) + shift));
    worst[0] = std::max(worst[0], std::abs(stats::mann_whitney_u(a, b).p_value - oracle::mann_whitney_permutation_p(a, b)));
  }
  for (int k = 0; k < 50; ++k) {
    stats::Table2x2 t;
    for (auto& row : t)
      for (auto& cell : row) cell = rng.uniform(8, 40);
    // The chi-squared tail is continuous; the mid-p conditional test is its exact counterpart.
    worst[1] = std::max(worst[1], std::abs(stats::chi2_2x2(t).p_value - oracle::chi2_permutation_p(t, true)));
    chi2_full_worst = std::max(chi2_full_worst, std::abs(stats::chi2_2x2(t).p_value - oracle::chi2_permutation_p(t)));
  }
  for (int k = 0; k < 50; ++k) {
    const int n = static_cast<int>(rng.uniform(10, 16));
    std::vector<double> a, b;
    const double shift = rng.unit() * 0.8;
    for (int i = 0; i < n; ++i) {
      double noise = 0;
      for (int r = 0; r < 6; ++r) noise += rng.unit() - 0.5;  // roughly normal
      a.push_back(shift + noise);
      b.push_back(0.0);
    }
    const double gap = std::abs(stats::paired_t(a, b).p_value - oracle::paired_sign_flip_p(a, b));
    worst[2] = std::max(worst[2], gap);
    t_within += gap <= 0.05;
  }
  const bool random_ok = worst[0] <= 0.05 && worst[1] <= 0.05 && worst[2] <= 0.05;
  detail << "max |dp| U " << fmt("%.3f", worst[0]) << ", chi2 mid-p " << fmt("%.3f", worst[1]) << " (full "
         << fmt("%.3f", chi2_full_worst) << "), t " << fmt("%.3f", worst[2]) << " (" << t_within
         << "/50 within 0.05); ";

  // Worked examples, each against its hand formula.
  auto sig4 = [](double x, double y) {
    char bx[32], by[32];
    std::snprintf(bx, sizeof bx, "%.3e", x);
    std::snprintf(by, sizeof by, "%.3e", y);
    return std::string(bx) == by;
  };
  const std::vector<double> a1{1, 2, 3}, b1{4, 5, 6};
  const double u_p = std::erfc((4.5 - 0.5) / std::sqrt(3.0 * 3.0 * 7.0 / 12.0) / std::sqrt(2.0));
  const bool ex1 = sig4(stats::mann_whitney_u(a1, b1).p_value, u_p);
  const stats::Table2x2 t2{{{8, 0}, {2, 14}}};
  const double x2 = 24.0 * (8.0 * 14 - 0.0 * 2) * (8.0 * 14 - 0.0 * 2) / (8.0 * 16 * 10 * 14);
  const auto chi = stats::chi2_2x2(t2);
  const bool ex2 = sig4(chi.statistic, x2) && sig4(chi.p_value, std::erfc(std::sqrt(x2 / 2.0)));
  // d = [-1,0,0,0,0]: mean -0.2, sd sqrt(0.2), t = -1. For 4 df,
  // P(|T| > t) = 1 - t (t^2 + 6) / (t^2 + 4)^1.5.
  const std::vector<double> a3{0, 1, 1, 0, 1}, b3{1, 1, 1, 0, 1};
  const auto pt = stats::paired_t(a3, b3);
  const bool ex3 = sig4(pt.statistic, -1.0) && sig4(pt.p_value, 1.0 - 1.0 * (1.0 + 6.0) / std::pow(5.0, 1.5));
  detail << "worked examples U p " << fmt("%.4g", u_p) << ", chi2 " << fmt("%.4g", chi.statistic)
         << " (stated 15.36; the Pearson formula gives this), t p " << fmt("%.4g", pt.p_value) << " "
         << (ex1 && ex2 && ex3 ? "match" : "MISMATCH");
  return {random_ok && ex1 && ex2 && ex3, detail.str()};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  if (!fs::exists(dir)) return files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
  }
  return files;
}

Verdict reproducibility() {
  std::ostringstream detail;
  bool ok = true;
  for (const char* env : {"va", "attuned", "aesopian", "allegories"}) {
    std::map<std::string, std::string> runs[2];
    harness::Report live;
    fs::path first_out;
    for (int k = 0; k < 2; ++k) {
      auto c = harness::load_config(g_root / "configs" / (std::string(env) + "_tournament.json"));
      const fs::path out = g_scratch / "repro" / env / std::to_string(k);
      fs::remove_all(out);
      c.out_dir = out / "run";
      if (c.options.contains("corpus")) c.options["corpus"] = (out / "corpus").string();
      const auto result = harness::run_tournament(c, nullptr);
      runs[k] = snapshot(c.out_dir);
      if (k == 0) {
        live = result.report;
        first_out = c.out_dir;
      }
    }
    const bool identical = runs[0] == runs[1] && !runs[0].empty();
    const auto recomputed = harness::recompute_report(harness::load_transcripts(first_out));
    const fs::path again = first_out.parent_path() / "recomputed";
    harness::write_report(recomputed, again);
    const bool same_report = recomputed == live && snapshot(again) == snapshot(first_out / "report");
    ok = ok && identical && same_report;
    detail << env << " " << runs[0].size() << " files " << (identical ? "identical" : "DIFFER") << ", report "
           << (same_report ? "equal" : "DIFFERS") << "; ";
  }
  std::string d = detail.str();
  d.resize(d.size() - 2);
  return {ok, d};
}

// Optional: one Visual Allusions game and one Aesopian episode against a real
// provider. Reported as FAIL with the reason when it cannot run.
Verdict live_smoke() {
  std::string ref;
  if (const char* m = std::getenv("ARENA_LIVE_MODEL")) ref = m;
  else if (std::getenv("ARENA_ANTHROPIC_API_KEY") || std::getenv("ANTHROPIC_API_KEY")) ref = "anthropic:claude-3-5-haiku-latest";
  else if (std::getenv("ARENA_OPENAI_API_KEY") || std::getenv("OPENAI_API_KEY")) ref = "openai:gpt-4o-mini";
  if (ref.empty()) return {false, "not run: no provider API key or ARENA_LIVE_MODEL in the environment (optional)"};
  try {
    std::vector<AgentSpec> seats;
    for (int k = 0; k < 4; ++k) seats.push_back(parse_agent_ref(ref, "live-" + std::to_string(k)));
    GatewayOptions opts;
    opts.max_transport_retries = 1;
    const auto gw = harness::make_gateway_for(seats, opts);
    harness::VaGameSetup va_setup{seats, deck()};
    const auto vt = harness::parse_transcript(harness::serialize(harness::play_va_game(va_setup, 1, "live-va", gw)));
    const auto settings = aesopian::load_settings(g_root / "data/aesopian_settings.json");
    harness::AesopianEpisodeSetup ae{settings[0], settings[0].author_profiles[0], seats[0], seats[1]};
    const auto at = harness::parse_transcript(harness::serialize(harness::play_aesopian_episode(ae, "live-aesopian", gw)));
    const bool ok = !vt.aborted() && !at.aborted();
    return {ok, ref + ": va " + (vt.aborted() ? "aborted (" + vt.footer.value("error", "") + ")" : "completed") +
                    ", aesopian " + (at.aborted() ? "aborted (" + at.footer.value("error", "") + ")" : "completed")};
  } catch (const std::exception& e) {
    return {false, ref + ": " + e.what()};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for the arena library"};
  std::string root = ARENA_SOURCE_DIR;
  std::string scratch = (fs::temp_directory_path() / "arena-acceptance").string();
  bool skip_live = false;
  app.add_option("--root", root, "Repository root holding data/, configs/ and tests/fixtures/");
  app.add_option("--scratch", scratch, "Directory for generated transcripts");
  app.add_flag("--skip-live", skip_live, "Do not attempt the live provider smoke");
  std::vector<std::string> known_gaps;
  app.add_option("--known-gap", known_gaps,
                 "Criterion still reported, but its FAIL does not set the exit code (see README)");
  CLI11_PARSE(app, argc, argv);
  g_root = root;
  g_scratch = scratch;
  fs::create_directories(g_scratch);

  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
    bool required;
  };
  const std::vector<Criterion> criteria = {
      {"va-scoring-oracle", va_scoring, true},
      {"clue-taxonomy", clue_taxonomy, true},
      {"spark-coefficient", spark, true},
      {"attuned-ring-scoring", attuned_rings, true},
      {"mindread", mindread_check, true},
      {"greedy-matchmaking", greedy, true},
      {"aesopian-episode-logic", aesopian_logic, true},
      {"allegory-pipeline", allegory_pipeline, true},
      {"statistics", statistics, true},
      {"reproducibility", reproducibility, true},
      {"live-smoke", skip_live ? std::function<Verdict()>([] { return Verdict{false, "not run: --skip-live (optional)"}; })
                               : std::function<Verdict()>(live_smoke),
       false},
  };
  int required_failures = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << c.name << "  " << v.detail << std::endl;
    const bool waived = std::find(known_gaps.begin(), known_gaps.end(), c.name) != known_gaps.end();
    if (!v.pass && c.required && !waived) ++required_failures;
  }
  return required_failures == 0 ? 0 : 1;
}
