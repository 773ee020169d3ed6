#include "arena/harness.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "arena/attuned.h"
#include "arena/rng.h"
#include "arena/stats.h"
#include "arena/visual_allusions.h"

namespace arena::harness {

using nlohmann::json;

// ---------------------------------------------------------------- transcripts

std::string Transcript::environment() const { return header.value("environment", ""); }
std::string Transcript::game_id() const { return header.value("game_id", ""); }
bool Transcript::aborted() const { return footer.value("status", "") != "completed"; }

std::string serialize(const Transcript& t) {
  std::string out;
  json h = t.header;
  h["kind"] = "header";
  h["schema_version"] = kTranscriptSchemaVersion;
  out += h.dump() + "\n";
  for (const auto& e : t.events) {
    json line = e;
    line["kind"] = "event";
    out += line.dump() + "\n";
  }
  json f = t.footer;
  f["kind"] = "footer";
  out += f.dump() + "\n";
  return out;
}

Transcript parse_transcript(std::string_view text, const std::string& source) {
  Transcript t;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  bool have_header = false;
  bool have_footer = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw TranscriptError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const std::string kind = j.value("kind", "");
    j.erase("kind");
    if (kind == "header") {
      if (have_header) throw TranscriptError(source + ": second header line");
      const int version = j.value("schema_version", -1);
      if (version != kTranscriptSchemaVersion) {
        throw TranscriptError(source + ": schema version " + std::to_string(version) + ", expected " +
                              std::to_string(kTranscriptSchemaVersion));
      }
      t.header = std::move(j);
      have_header = true;
    } else if (kind == "event") {
      if (!have_header || have_footer) throw TranscriptError(source + ":" + std::to_string(lineno) + ": stray event");
      t.events.push_back(std::move(j));
    } else if (kind == "footer") {
      if (!have_header || have_footer) throw TranscriptError(source + ": misplaced footer");
      t.footer = std::move(j);
      have_footer = true;
    } else {
      throw TranscriptError(source + ":" + std::to_string(lineno) + ": unknown line kind '" + kind + "'");
    }
  }
  if (!have_header) throw TranscriptError(source + ": no header");
  if (!have_footer) throw TranscriptError(source + ": no footer (incomplete transcript)");
  return t;
}

void write_transcript(const std::filesystem::path& path, const Transcript& t) { write_file(path, serialize(t)); }

Transcript read_transcript(const std::filesystem::path& path) { return parse_transcript(read_file(path), path.string()); }

std::vector<Transcript> load_transcripts(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("transcript directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Transcript> out;
  for (const auto& f : files) out.push_back(read_transcript(f));
  return out;
}

// ---------------------------------------------------------------- scheduling

CoPlayMatrix::CoPlayMatrix(int pool_size) : n_(pool_size) {
  if (pool_size < 1) throw std::invalid_argument("co-play matrix needs a non-empty pool");
  counts_.assign(static_cast<std::size_t>(n_ * n_), 0);
  games_.assign(static_cast<std::size_t>(n_), 0);
}

int CoPlayMatrix::row_sum(int i) const {
  int s = 0;
  for (int j = 0; j < n_; ++j) s += at(i, j);
  return s;
}

void CoPlayMatrix::record(std::span<const int> seats) {
  for (std::size_t a = 0; a < seats.size(); ++a) {
    games_[static_cast<std::size_t>(seats[a])] += 1;
    for (std::size_t b = a + 1; b < seats.size(); ++b) {
      counts_[static_cast<std::size_t>(seats[a] * n_ + seats[b])] += 1;
      counts_[static_cast<std::size_t>(seats[b] * n_ + seats[a])] += 1;
    }
  }
}

std::vector<int> greedy_select(const CoPlayMatrix& m, int seats) {
  if (seats < 1 || seats > m.size()) {
    throw std::invalid_argument("cannot seat " + std::to_string(seats) + " from a pool of " + std::to_string(m.size()));
  }
  std::vector<int> chosen;
  std::vector<bool> used(static_cast<std::size_t>(m.size()), false);
  auto pick = [&](auto cost) {
    int best = -1;
    long best_cost = std::numeric_limits<long>::max();
    for (int i = 0; i < m.size(); ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      const long c = cost(i);
      if (c < best_cost) {
        best = i;
        best_cost = c;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    chosen.push_back(best);
  };
  pick([&](int i) { return static_cast<long>(m.row_sum(i)); });
  while (static_cast<int>(chosen.size()) < seats) {
    pick([&](int i) {
      long s = 0;
      for (int c : chosen) s += m.at(i, c);
      return s;
    });
  }
  return chosen;
}

std::vector<std::vector<int>> schedule_games(int pool_size, int games, int seats) {
  CoPlayMatrix m(pool_size);
  std::vector<std::vector<int>> out;
  for (int g = 0; g < games; ++g) {
    auto s = greedy_select(m, seats);
    m.record(s);  // at scheduling time, so failed games still count
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- games

namespace {

json seat_json(int seat, const AgentSpec& spec) {
  return {{"seat", seat}, {"agent_id", spec.agent_id}, {"label", spec.label()}, {"spec", to_json(spec)}};
}

Transcript start(const std::string& environment, const std::string& id, std::uint64_t seed) {
  Transcript t;
  t.header = {{"schema_version", kTranscriptSchemaVersion}, {"environment", environment}, {"game_id", id},
              {"seed", seed}};
  return t;
}

void finish_aborted(Transcript& t, const std::exception& e) {
  t.footer = {{"status", "aborted"}, {"error", e.what()}, {"result", json::object()}};
}

std::function<void(const json&)> recorder(Transcript& t) {
  return [&t](const json& e) { t.events.push_back(e); };
}

const StoryCorpus& corpus_or_empty(const StoryCorpus* s) {
  static const StoryCorpus empty;
  return s ? *s : empty;
}

}  // namespace

Transcript play_va_game(const VaGameSetup& setup, std::uint64_t seed, const std::string& game_id,
                        std::shared_ptr<const Gateway> gateway) {
  Transcript t = start("va", game_id, seed);
  const int n = static_cast<int>(setup.seats.size());
  const StoryCorpus& stories = corpus_or_empty(setup.stories);

  va::RoundContext ctx;
  json seats = json::array();
  for (int s = 0; s < n; ++s) {
    const auto& spec = setup.seats[static_cast<std::size_t>(s)];
    json sj = seat_json(s, spec);
    std::vector<std::string> titles;
    for (const auto& id : spec.shared_story_ids) titles.push_back(stories.at(id).title);
    sj["shared_titles"] = titles;
    seats.push_back(sj);
    ctx.story_titles.push_back(titles);
    if (!spec.shared_story_ids.empty()) ctx.story_refs = true;

    prompts::Bindings b = {{"player_id", std::to_string(s + 1)}};
    if (spec.partner_belief) {
      auto it = std::find_if(setup.seats.begin(), setup.seats.end(),
                             [&](const AgentSpec& o) { return o.agent_id == *spec.partner_belief; });
      if (it == setup.seats.end()) throw ConfigError(spec.agent_id + ": partner '" + *spec.partner_belief + "' is not seated");
      b["partner_player_id"] = std::to_string(it - setup.seats.begin() + 1);
    }
    ctx.system_prompts.push_back(assemble_system_prompt(spec, Environment::visual_allusions, b, stories));
  }
  t.header["seats"] = seats;
  t.header["options"] = {{"story_refs", ctx.story_refs}, {"max_rounds", setup.max_rounds}};
  ctx.on_event = recorder(t);

  std::vector<std::unique_ptr<Agent>> owned;
  std::vector<Agent*> agents;
  for (const auto& spec : setup.seats) {
    owned.push_back(make_agent(spec, gateway));
    agents.push_back(owned.back().get());
  }

  va::GameState state = va::new_game(setup.seats, setup.deck, seed);
  std::vector<va::RoundRecord> rounds;
  try {
    while (!va::is_game_over(state).over && static_cast<int>(rounds.size()) < setup.max_rounds) {
      ctx.history = rounds;
      auto [next, rec] = va::run_round(std::move(state), agents, ctx);
      state = std::move(next);
      rounds.push_back(std::move(rec));
    }
    const auto over = va::is_game_over(state);
    json result = {{"scores", state.scores}, {"winners", over.winners}, {"rounds", rounds.size()},
                   {"deck_exhausted", state.deck_exhausted}, {"safety_stop", !over.over}};
    if (!over.over) {
      // Safety stop: the leaders share the win.
      const int best = *std::max_element(state.scores.begin(), state.scores.end());
      std::vector<int> winners;
      for (int s = 0; s < n; ++s) if (state.scores[static_cast<std::size_t>(s)] == best) winners.push_back(s);
      result["winners"] = winners;
    }
    if (setup.awareness_judge && ctx.story_refs) {
      auto judge = make_agent(*setup.awareness_judge, gateway);
      json awareness = json::object();
      for (int s = 0; s < n; ++s) {
        if (setup.seats[static_cast<std::size_t>(s)].shared_story_ids.empty()) continue;
        const auto a = va::awareness_score(rounds, s, *judge);
        awareness[std::to_string(s)] = a ? json(*a) : json(nullptr);
      }
      result["awareness"] = awareness;
    }
    t.footer = {{"status", "completed"}, {"result", result}};
  } catch (const AgentError& e) {
    finish_aborted(t, e);
  } catch (const GatewayError& e) {
    finish_aborted(t, e);
  }
  return t;
}

Transcript play_attuned_match(const AttunedMatchSetup& setup, std::uint64_t seed, const std::string& game_id,
                              std::shared_ptr<const Gateway> gateway) {
  Transcript t = start("attuned", game_id, seed);
  const StoryCorpus& stories = corpus_or_empty(setup.stories);
  const std::array<AgentSpec, 4> specs = {setup.team_a[0], setup.team_a[1], setup.team_b[0], setup.team_b[1]};

  attuned::RoundContext ctx;
  json seats = json::array();
  for (int s = 0; s < 4; ++s) {
    const auto& spec = specs[static_cast<std::size_t>(s)];
    json sj = seat_json(s, spec);
    sj["team"] = attuned::team_of(s);
    seats.push_back(sj);
    prompts::Bindings b = {{"player_id", std::to_string(s + 1)},
                           {"my_team_name", attuned::team_name(attuned::team_of(s))},
                           {"teammates", "Player " + std::to_string(attuned::teammate_of(s) + 1)}};
    ctx.system_prompts.push_back(assemble_system_prompt(spec, Environment::attuned, b, stories));
  }
  t.header["seats"] = seats;
  ctx.on_event = recorder(t);

  auto state = attuned::new_match(setup.team_a, setup.team_b, setup.deck, seed);
  std::vector<std::unique_ptr<Agent>> owned;
  std::vector<Agent*> agents;
  for (const auto& spec : specs) {
    owned.push_back(make_agent(spec, gateway));
    agents.push_back(owned.back().get());
  }
  try {
    int rounds = 0;
    while (!attuned::is_attuned_over(state).over) {
      auto [next, rec] = attuned::run_attuned_round(std::move(state), agents, ctx);
      state = std::move(next);
      ++rounds;
    }
    const auto over = attuned::is_attuned_over(state);
    t.footer = {{"status", "completed"},
                {"result",
                 {{"scores", {state.teams[0].score, state.teams[1].score}},
                  {"winner", over.winner ? json(*over.winner) : json(nullptr)},
                  {"rounds", rounds}}}};
  } catch (const AgentError& e) {
    finish_aborted(t, e);
  } catch (const GatewayError& e) {
    finish_aborted(t, e);
  }
  return t;
}

Transcript play_aesopian_episode(const AesopianEpisodeSetup& setup, const std::string& episode_id,
                                 std::shared_ptr<const Gateway> gateway) {
  Transcript t = start("aesopian", episode_id, 0);
  AgentSpec inq_spec = setup.interpreter;
  inq_spec.agent_id += "/inquisitor";
  AgentSpec critic_spec = setup.critic_override.value_or(setup.interpreter);
  critic_spec.agent_id += "/critic";
  auto author = make_agent(setup.author, gateway);
  auto inquisitor = make_agent(inq_spec, gateway);
  auto critic = make_agent(critic_spec, gateway);

  aesopian::EpisodeContext ctx;
  ctx.episode_id = episode_id;
  ctx.on_event = recorder(t);
  auto ep = aesopian::run_episode(setup.setting, setup.profile, *author, *inquisitor, *critic, setup.control,
                                  setup.max_attempts, ctx);
  json h = aesopian::episode_header_json(ep);
  for (auto& [k, v] : h.items()) t.header[k] = v;
  t.header["seats"] = json::array({seat_json(0, setup.author), seat_json(1, inq_spec), seat_json(2, critic_spec)});
  json result = {{"alive", ep.alive}, {"attempts", ep.attempts.size()}, {"strikes", ep.strikes()}};
  if (ep.aborted) {
    t.footer = {{"status", "aborted"}, {"error", ep.abort_reason}, {"result", result}};
  } else {
    t.footer = {{"status", "completed"}, {"result", result}};
  }
  return t;
}

aesopian::EpisodeState episode_from_transcript(const Transcript& t) {
  if (t.environment() != "aesopian") throw TranscriptError(t.game_id() + ": not an Aesopian transcript");
  aesopian::EpisodeState ep;
  const auto& h = t.header;
  ep.episode_id = h.at("episode_id").get<std::string>();
  ep.setting = aesopian::setting_from_json(h.at("setting"));
  const auto& p = h.at("author_profile");
  ep.author_profile = {p.at("name").get<std::string>(), p.at("profile").get<std::string>(),
                       p.at("state_aligned").get<bool>()};
  ep.author_model = h.at("author_model").get<std::string>();
  ep.interpreter_model = h.at("interpreter_model").get<std::string>();
  ep.control = h.at("control").get<bool>();
  ep.max_attempts = h.at("max_attempts").get<int>();
  for (const auto& e : t.events) {
    if (e.value("type", "") != "attempt") continue;
    auto a = aesopian::attempt_from_json(e.at("record"));
    ep.dossier.push_back(aesopian::dossier_entry(a.attempt_index, a.inquisitor));
    ep.literary_history.push_back(a.story_text);
    ep.attempts.push_back(std::move(a));
  }
  ep.alive = ep.strikes() < aesopian::kStrikesToDeath;
  ep.aborted = t.aborted();
  if (ep.aborted) ep.abort_reason = t.footer.value("error", "");
  return ep;
}

Transcript play_allegory_readings(const AllegoryReadingSetup& setup, std::uint64_t seed, const std::string& run_id,
                                  std::shared_ptr<const Gateway> gateway) {
  using namespace allegories;
  Transcript t = start("allegories", run_id, seed);
  t.header["stage"] = "reading";
  t.header["seats"] = json::array({seat_json(0, setup.reader)});
  std::map<std::string, const HistoricalEvent*> by_name;
  for (const auto& e : setup.events) by_name[e.name] = &e;

  auto reader = make_agent(setup.reader, gateway);
  std::unique_ptr<Agent> judge;
  if (setup.decode_judge) judge = make_agent(*setup.decode_judge, gateway);
  Rng rng(seed);
  int done = 0;
  try {
    for (const auto& story : setup.corpus) {
      auto it = by_name.find(story.event_name);
      if (it == by_name.end()) throw ConfigError("story " + story.story_id + " names unknown event '" + story.event_name + "'");
      const auto& event = *it->second;
      // One name per story, shared by the author and reader conditions.
      std::optional<std::string> name;
      for (auto info : setup.information) {
        if (info != Information::none && !name) name = condition_name(story, event, setup.names, rng);
      }
      for (auto persona : setup.personas) {
        for (auto info : setup.information) {
          InterpretationCondition cond{persona, info, info == Information::none ? std::nullopt : name};
          auto r = run_interpretation(story, event, cond, *reader, judge.get());
          t.events.push_back({{"type", "interpretation"}, {"record", to_json(r)}});
          ++done;
        }
      }
    }
    t.footer = {{"status", "completed"}, {"result", {{"interpretations", done}}}};
  } catch (const AgentError& e) {
    finish_aborted(t, e);
  } catch (const GatewayError& e) {
    finish_aborted(t, e);
  }
  return t;
}

Transcript play_allegory_judging(const AllegoryJudgingSetup& setup, std::uint64_t seed, const std::string& run_id,
                                 std::shared_ptr<const Gateway> gateway) {
  using namespace allegories;
  Transcript t = start("allegories", run_id, seed);
  t.header["stage"] = "judging";
  t.header["seats"] = json::array({seat_json(0, setup.judge)});
  std::map<std::string, const HistoricalEvent*> by_name;
  for (const auto& e : setup.events) by_name[e.name] = &e;
  auto judge = make_agent(setup.judge, gateway);
  Rng rng(seed);
  int done = 0;
  try {
    for (const auto& story : setup.corpus) {
      auto truth = by_name.find(story.event_name);
      auto neg_name = setup.negatives.find(story.event_name);
      if (truth == by_name.end() || neg_name == setup.negatives.end()) continue;
      auto neg = by_name.find(neg_name->second);
      if (neg == by_name.end()) throw ConfigError("unknown negative event '" + neg_name->second + "'");
      auto r = judge_allegory_pair(story, *truth->second, *neg->second, *judge, rng);
      t.events.push_back({{"type", "judge"}, {"model", setup.judge.label()}, {"record", to_json(r)}});
      ++done;
    }
    t.footer = {{"status", "completed"}, {"result", {{"judgements", done}}}};
  } catch (const AgentError& e) {
    finish_aborted(t, e);
  } catch (const GatewayError& e) {
    finish_aborted(t, e);
  }
  return t;
}

std::vector<allegories::Allegory> write_allegory_corpus(std::span<const allegories::HistoricalEvent> events,
                                                        const AgentSpec& writer, allegories::Genre genre,
                                                        int num_hidden_clues, const std::filesystem::path& out_dir,
                                                        std::shared_ptr<const Gateway> gateway,
                                                        const std::string& id_prefix) {
  auto agent = make_agent(writer, gateway);
  std::filesystem::create_directories(out_dir);
  std::vector<allegories::Allegory> out;
  int k = 0;
  for (const auto& event : events) {
    char num[16];
    std::snprintf(num, sizeof num, "-%03d", ++k);
    const std::string id = id_prefix + num;
    auto notes = allegories::run_research(event, *agent);
    auto story = allegories::run_writer(notes, event, genre, num_hidden_clues, *agent, id);
    allegories::write_allegory(out_dir, story);
    out.push_back(std::move(story));
  }
  return out;
}

// ---------------------------------------------------------------- reports

namespace {

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string fmt_opt(const std::optional<double>& v, int digits = 2) { return v ? fmt(*v, digits) : "n/a"; }

std::string fmt_p(double p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", p);
  return buf;
}

std::vector<std::string> seat_labels(const Transcript& t) {
  std::vector<std::string> out;
  for (const auto& s : t.header.at("seats")) out.push_back(s.at("label").get<std::string>());
  return out;
}

std::vector<va::RoundRecord> va_rounds(const Transcript& t) {
  std::vector<va::RoundRecord> out;
  for (const auto& e : t.events) {
    if (e.value("type", "") == "round") out.push_back(va::round_record_from_json(e.at("record")));
  }
  return out;
}

void va_tables(const std::vector<const Transcript*>& games, int aborted, Report& report) {
  struct Acc {
    int games = 0;
    std::vector<double> scores;
    double wins = 0;
    double storytelling = 0, guessing = 0, distraction = 0;
    int st_rounds = 0;
    std::map<va::ClueType, int> clues;
  };
  std::map<std::string, Acc> acc;
  struct PairAcc {
    stats::Table2x2 table;
    std::vector<double> spark, lift_ij, lift_ji;
  };
  std::map<std::string, PairAcc> pairs;
  struct SharedAcc {
    int st_rounds = 0;
    double clue_hits = 0;
    std::vector<double> awareness;
  };
  std::map<std::string, SharedAcc> shared;

  for (const auto* t : games) {
    const auto labels = seat_labels(*t);
    const int n = static_cast<int>(labels.size());
    const auto rounds = va_rounds(*t);
    const auto& result = t->footer.at("result");
    const auto scores = result.at("scores").get<std::vector<int>>();
    const auto winners = result.at("winners").get<std::vector<int>>();
    for (int s = 0; s < n; ++s) {
      auto& a = acc[labels[static_cast<std::size_t>(s)]];
      a.games += 1;
      a.scores.push_back(scores[static_cast<std::size_t>(s)]);
      if (std::count(winners.begin(), winners.end(), s)) a.wins += 1.0 / static_cast<double>(winners.size());
    }
    for (const auto& r : rounds) {
      for (const auto& [seat, c] : va::component_scores(r)) {
        auto& a = acc[labels[static_cast<std::size_t>(seat)]];
        a.storytelling += c.storytelling;
        a.guessing += c.guessing;
        a.distraction += c.distraction;
      }
      auto& st = acc[labels[static_cast<std::size_t>(r.storyteller)]];
      st.st_rounds += 1;
      st.clues[r.clue_type] += 1;
    }

    // Shared-context metrics: pairs of seats holding the same stories.
    const auto& seats = t->header.at("seats");
    auto story_ids = [&](int s) {
      return seats.at(static_cast<std::size_t>(s)).at("spec").value("shared_story_ids", std::vector<std::string>{});
    };
    for (int i = 0; i < n; ++i) {
      const auto ids_i = story_ids(i);
      if (ids_i.empty()) continue;
      for (int j = i + 1; j < n; ++j) {
        if (story_ids(j) != ids_i) continue;
        auto& p = pairs[labels[static_cast<std::size_t>(i)] + " & " + labels[static_cast<std::size_t>(j)]];
        const auto tab = va::spark_table(rounds, i, j);
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < 2; ++c) p.table[r][c] += tab[r][c];
        if (auto s = va::spark_coefficient(rounds, i, j, n)) p.spark.push_back(*s);
        if (auto l = va::lift(rounds, i, j, n)) p.lift_ij.push_back(*l);
        if (auto l = va::lift(rounds, j, i, n)) p.lift_ji.push_back(*l);
      }
      const auto titles = seats.at(static_cast<std::size_t>(i)).value("shared_titles", std::vector<std::string>{});
      auto& sh = shared[labels[static_cast<std::size_t>(i)]];
      int st_rounds = 0;
      for (const auto& r : rounds) st_rounds += r.storyteller == i;
      if (t->header.at("options").value("story_refs", false)) {
        if (auto rate = va::storytelling_clue_rate(rounds, i, titles)) {
          sh.st_rounds += st_rounds;
          sh.clue_hits += *rate * st_rounds;
        }
      }
      if (result.contains("awareness")) {
        const auto& aw = result.at("awareness");
        if (aw.contains(std::to_string(i)) && !aw.at(std::to_string(i)).is_null()) {
          sh.awareness.push_back(aw.at(std::to_string(i)).get<double>());
        }
      }
    }
  }

  ReportTable scores{"va_scores", "Visual Allusions: game scores, win rates, component scores and clue types", {}, {}};
  std::string top;
  double top_mean = -1;
  for (const auto& [model, a] : acc) {
    const double m = mean_of(a.scores);
    if (m > top_mean) {
      top_mean = m;
      top = model;
    }
  }
  for (const auto& [model, a] : acc) {
    ReportRow row{model, {}, {}};
    const double g = a.games;
    auto pct = [&](va::ClueType c) {
      if (!a.st_rounds) return std::string("n/a");
      auto it = a.clues.find(c);
      return fmt(100.0 * (it == a.clues.end() ? 0 : it->second) / a.st_rounds, 1);
    };
    row.metrics = {{"games", std::to_string(a.games)},
                   {"game_score", fmt(mean_of(a.scores))},
                   {"win_rate", fmt(a.wins / g)},
                   {"storytelling", fmt(a.storytelling / g)},
                   {"guessing", fmt(a.guessing / g)},
                   {"distraction", fmt(a.distraction / g)},
                   {"obvious_pct", pct(va::ClueType::obvious)},
                   {"obscure_pct", pct(va::ClueType::obscure)},
                   {"just_right_pct", pct(va::ClueType::just_right)}};
    if (model != top && acc.size() > 1) {
      const auto test = stats::mann_whitney_u(acc.at(top).scores, a.scores);
      row.metrics.push_back({"p_vs_top", fmt_p(test.p_value)});
      if (test.p_value < 0.05 && !test.degenerate) row.flags.push_back("top significantly higher");
    } else {
      row.metrics.push_back({"p_vs_top", "-"});
    }
    scores.rows.push_back(std::move(row));
  }
  scores.notes.push_back(std::to_string(games.size()) + " completed games; " + std::to_string(aborted) +
                         " aborted games excluded.");
  scores.notes.push_back("p_vs_top: two-sided Mann-Whitney U of game scores against the top-scoring model (" + top + ").");
  report.tables.push_back(std::move(scores));

  if (!pairs.empty()) {
    ReportTable spark{"va_shared_pairs", "Visual Allusions: shared-context pairs", {}, {}};
    for (const auto& [pair, p] : pairs) {
      ReportRow row{pair, {}, {}};
      const auto test = stats::chi2_2x2(p.table);
      auto mean_opt = [](const std::vector<double>& v) {
        return v.empty() ? std::optional<double>{} : std::optional<double>{mean_of(v)};
      };
      row.metrics = {{"spark", fmt_opt(mean_opt(p.spark))},
                     {"lift_first_to_second", fmt_opt(mean_opt(p.lift_ij))},
                     {"lift_second_to_first", fmt_opt(mean_opt(p.lift_ji))},
                     {"partner_correct", std::to_string(p.table[0][0])},
                     {"partner_incorrect", std::to_string(p.table[0][1])},
                     {"others_correct", std::to_string(p.table[1][0])},
                     {"others_incorrect", std::to_string(p.table[1][1])},
                     {"chi2", fmt(test.statistic)},
                     {"p_value", fmt_p(test.p_value)}};
      if (test.degenerate) row.flags.push_back("degenerate");
      else if (test.p_value < 0.05) row.flags.push_back("significant");
      spark.rows.push_back(std::move(row));
    }
    spark.notes.push_back("Spark and Lift are per-game means; the chi-squared test pools both storyteller directions over all games.");
    report.tables.push_back(std::move(spark));

    ReportTable players{"va_shared_players", "Visual Allusions: storytelling clues and awareness", {}, {}};
    for (const auto& [model, s] : shared) {
      ReportRow row{model, {}, {}};
      row.metrics = {{"storyteller_rounds", std::to_string(s.st_rounds)},
                     {"storytelling_clues", s.st_rounds ? fmt(s.clue_hits / s.st_rounds, 3) : "n/a"},
                     {"awareness", s.awareness.empty() ? "n/a" : fmt(mean_of(s.awareness), 3)}};
      players.rows.push_back(std::move(row));
    }
    report.tables.push_back(std::move(players));
  }
}

void attuned_table(const std::vector<const Transcript*>& games, int aborted, Report& report) {
  struct Acc {
    int matches = 0;
    double score = 0;
    double wins = 0;
  };
  std::map<std::string, Acc> acc;
  std::vector<attuned::SpectrumRound> all;
  for (const auto* t : games) {
    const auto labels = seat_labels(*t);
    const auto& result = t->footer.at("result");
    const auto scores = result.at("scores").get<std::array<int, 2>>();
    for (int s = 0; s < 4; ++s) {
      auto& a = acc[labels[static_cast<std::size_t>(s)]];
      const int team = attuned::team_of(s);
      a.matches += 1;
      a.score += scores[static_cast<std::size_t>(team)];
      if (result.at("winner").is_null()) a.wins += 0.5;
      else if (result.at("winner").get<int>() == team) a.wins += 1;
    }
    for (const auto& e : t->events) {
      if (e.value("type", "") == "round") all.push_back(attuned::spectrum_round_from_json(e.at("record")));
    }
  }
  ReportTable table{"attuned_scores", "Attuned: game scores, win rates and MindRead", {}, {}};
  for (const auto& [model, a] : acc) {
    ReportRow row{model, {}, {}};
    row.metrics = {{"matches", std::to_string(a.matches)},
                   {"game_score", fmt(a.score / a.matches)},
                   {"win_rate", fmt(a.wins / a.matches)},
                   {"mindread", fmt_opt(attuned::mindread(all, model), 3)}};
    table.rows.push_back(std::move(row));
  }
  table.notes.push_back(std::to_string(games.size()) + " completed matches; " + std::to_string(aborted) +
                        " aborted matches excluded.");
  report.tables.push_back(std::move(table));
}

ReportRow aesopian_row(const aesopian::EpisodeMetricsRow& r) {
  ReportRow row{r.model, {}, {}};
  if (r.state_aligned) row.metrics.push_back({"alignment", *r.state_aligned ? "aligned" : "misaligned"});
  row.metrics.insert(row.metrics.end(), {{"episodes", std::to_string(r.episodes)},
                                         {"aborted", std::to_string(r.aborted)},
                                         {"succeeded", fmt(r.successes)},
                                         {"conformed", fmt(r.conforms)},
                                         {"contested", fmt(r.contested)},
                                         {"strikes", fmt(r.strikes)},
                                         {"time_to_first_strike", aesopian::format_cell(r.time_to_first_strike)},
                                         {"time_of_death", aesopian::format_cell(r.time_of_death)},
                                         {"agreement", fmt(r.agreement)}});
  return row;
}

void aesopian_tables(const std::vector<const Transcript*>& transcripts, Report& report) {
  std::vector<aesopian::EpisodeState> eps;
  int violations = 0;
  for (const auto* t : transcripts) {
    eps.push_back(episode_from_transcript(*t));
    violations += static_cast<int>(aesopian::check_information_asymmetry(eps.back()).size());
  }
  ReportTable main{"aesopian_outcomes", "Aesopian Author: outcomes per author model", {}, {}};
  for (const auto& r : aesopian::episode_metrics(eps)) main.rows.push_back(aesopian_row(r));
  main.notes.push_back("Aborted episodes are counted but excluded from the means.");
  main.notes.push_back("A trailing + marks a mean that includes episodes without the event (counted as max attempts + 1).");
  main.notes.push_back("Information-asymmetry violations found: " + std::to_string(violations) + ".");
  report.tables.push_back(std::move(main));
  ReportTable split{"aesopian_alignment", "Aesopian Author: outcomes by author alignment", {}, {}};
  for (const auto& r : aesopian::alignment_split(eps)) split.rows.push_back(aesopian_row(r));
  report.tables.push_back(std::move(split));
}

void allegory_tables(const std::vector<const Transcript*>& transcripts, Report& report) {
  std::vector<allegories::InterpretationResult> readings;
  struct JudgeAcc {
    int n = 0, correct = 0, both = 0, none = 0;
  };
  std::map<std::string, JudgeAcc> judges;
  for (const auto* t : transcripts) {
    for (const auto& e : t->events) {
      const std::string type = e.value("type", "");
      if (type == "interpretation") {
        readings.push_back(allegories::interpretation_result_from_json(e.at("record")));
      } else if (type == "judge") {
        auto& a = judges[e.at("model").get<std::string>()];
        const auto& r = e.at("record");
        a.n += 1;
        a.correct += r.at("correct").get<bool>();
        a.both += r.at("choice").get<int>() == 3;
        a.none += r.at("choice").get<int>() == 4;
      }
    }
  }
  if (!readings.empty()) {
    ReportTable table{"allegory_decoding", "Historical Allegories: decoding accuracy by persona and information", {}, {}};
    for (const auto& r : allegories::accuracy_table(readings)) {
      ReportRow row{r.model, {}, {}};
      row.metrics = {{"persona", std::string(to_string(r.persona))},
                     {"information", std::string(to_string(r.information))},
                     {"n", std::to_string(r.n)},
                     {"accuracy", fmt(r.accuracy, 3)},
                     {"t", r.vs_default ? fmt(r.vs_default->statistic, 3) : "-"},
                     {"p_vs_default", r.vs_default ? fmt_p(r.vs_default->p_value) : "-"}};
      if (r.significant) row.flags.push_back("significant");
      for (const auto& w : r.warnings) table.notes.push_back(r.model + ": " + w);
      table.rows.push_back(std::move(row));
    }
    table.notes.push_back("p_vs_default: paired t-test over stories against the same persona without names.");
    report.tables.push_back(std::move(table));
  }
  if (!judges.empty()) {
    ReportTable table{"allegory_judge", "Historical Allegories: two-event identification by a judge", {}, {}};
    for (const auto& [model, a] : judges) {
      ReportRow row{model, {}, {}};
      row.metrics = {{"n", std::to_string(a.n)},
                     {"accuracy", fmt(a.n ? static_cast<double>(a.correct) / a.n : 0.0, 3)},
                     {"chose_both", std::to_string(a.both)},
                     {"chose_neither", std::to_string(a.none)}};
      table.rows.push_back(std::move(row));
    }
    report.tables.push_back(std::move(table));
  }
}

}  // namespace

Report recompute_report(std::span<const Transcript> transcripts) {
  Report report;
  std::map<std::string, std::vector<const Transcript*>> by_env;
  std::map<std::string, int> aborted;
  for (const auto& t : transcripts) {
    const std::string env = t.environment();
    // Aesopian episodes keep their partial record; metrics flag them.
    if (t.aborted()) {
      ++report.aborted;
      ++aborted[env];
      if (env != "aesopian" && env != "allegories") continue;
    } else {
      ++report.completed;
    }
    by_env[env].push_back(&t);
  }
  if (by_env.count("va")) va_tables(by_env["va"], aborted["va"], report);
  else if (aborted["va"]) report.tables.push_back({"va_scores", "Visual Allusions", {}, {"every game was aborted"}});
  if (by_env.count("attuned")) attuned_table(by_env["attuned"], aborted["attuned"], report);
  if (by_env.count("aesopian")) aesopian_tables(by_env["aesopian"], report);
  if (by_env.count("allegories")) allegory_tables(by_env["allegories"], report);
  return report;
}

namespace {

std::vector<std::string> columns_of(const ReportTable& t) {
  std::vector<std::string> cols;
  for (const auto& r : t.rows) {
    for (const auto& [k, v] : r.metrics) {
      if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
    }
  }
  return cols;
}

std::string cell(const ReportRow& r, const std::string& col) {
  for (const auto& [k, v] : r.metrics) if (k == col) return v;
  return "";
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) out += (out.empty() ? "" : "; ") + f;
  return out;
}

}  // namespace

std::string to_csv(const ReportTable& t) {
  const auto cols = columns_of(t);
  std::string out = "model";
  for (const auto& c : cols) out += "," + csv_escape(c);
  out += ",flags\n";
  for (const auto& r : t.rows) {
    out += csv_escape(r.model);
    for (const auto& c : cols) out += "," + csv_escape(cell(r, c));
    out += "," + csv_escape(join_flags(r.flags)) + "\n";
  }
  return out;
}

std::string to_markdown(const ReportTable& t) {
  const auto cols = columns_of(t);
  std::string out = "### " + t.title + "\n\n| model";
  for (const auto& c : cols) out += " | " + c;
  out += " | flags |\n|---";
  for (std::size_t i = 0; i < cols.size(); ++i) out += "|---:";
  out += "|---|\n";
  for (const auto& r : t.rows) {
    out += "| " + r.model;
    for (const auto& c : cols) out += " | " + cell(r, c);
    out += " | " + join_flags(r.flags) + " |\n";
  }
  for (const auto& n : t.notes) out += "\n" + n + "\n";
  return out;
}

void write_report(const Report& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string all = "# Report\n\nCompleted: " + std::to_string(report.completed) +
                    ", aborted: " + std::to_string(report.aborted) + "\n";
  for (const auto& t : report.tables) {
    write_file(dir / (t.name + ".csv"), to_csv(t));
    write_file(dir / (t.name + ".md"), to_markdown(t));
    all += "\n" + to_markdown(t);
  }
  write_file(dir / "report.md", all);
}

// ---------------------------------------------------------------- tournaments

void TournamentConfig::validate() const {
  static const std::set<std::string> envs = {"va", "attuned", "aesopian", "allegories"};
  if (!envs.count(environment)) throw ConfigError("unknown environment '" + environment + "'");
  if (pool.empty()) throw ConfigError("empty model pool");
  if (games < 1) throw ConfigError("games must be positive");
  if (parallelism < 1) throw ConfigError("parallelism must be positive");
  std::set<std::string> ids;
  for (const auto& s : pool) {
    s.validate();
    if (!ids.insert(s.agent_id).second) throw ConfigError("duplicate agent id in pool: " + s.agent_id);
  }
  if (environment == "va") {
    if (seats_per_game < va::kMinPlayers || seats_per_game > va::kMaxPlayers) {
      throw ConfigError("Visual Allusions seats 3 to 6 players");
    }
    if (static_cast<int>(pool.size()) < seats_per_game) throw ConfigError("pool smaller than seats_per_game");
  }
  if (environment == "attuned" && pool.size() != 4) throw ConfigError("Attuned needs a pool of exactly 4 agents");
}

namespace {

std::filesystem::path option_path(const TournamentConfig& c, const char* key, bool required = true) {
  if (!c.options.contains(key)) {
    if (required) throw ConfigError(c.environment + " runs need option '" + key + "'");
    return {};
  }
  std::filesystem::path p = c.options.at(key).get<std::string>();
  return p.is_absolute() ? p : c.base_dir / p;
}

// "stories" may name one directory or a list of them.
std::optional<StoryCorpus> option_stories(const TournamentConfig& c) {
  if (!c.options.contains("stories")) return std::nullopt;
  std::vector<std::string> dirs;
  const auto& v = c.options.at("stories");
  if (v.is_array()) dirs = v.get<std::vector<std::string>>();
  else dirs.push_back(v.get<std::string>());
  StoryCorpus corpus;
  for (const auto& d : dirs) {
    std::filesystem::path p = d;
    const auto part = StoryCorpus::load_dir(p.is_absolute() ? p : c.base_dir / p);
    for (const auto& id : part.ids()) corpus.add(part.at(id));
  }
  return corpus;
}

std::optional<AgentSpec> option_agent(const TournamentConfig& c, const char* key, const std::string& id) {
  if (!c.options.contains(key)) return std::nullopt;
  const auto& v = c.options.at(key);
  if (v.is_string()) return parse_agent_ref(v.get<std::string>(), id);
  auto spec = agent_spec_from_json(v);
  if (spec.agent_id.empty()) spec.agent_id = id;
  return spec;
}

// Runs jobs on up to `parallelism` threads; results keep job order.
std::vector<Transcript> run_jobs(std::vector<std::function<Transcript()>>& jobs, int parallelism) {
  std::vector<Transcript> out(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out[i] = jobs[i]();
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(parallelism, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::string game_name(const char* prefix, int g) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s-%04d", prefix, g + 1);
  return buf;
}

}  // namespace

TournamentConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  TournamentConfig c;
  try {
    c.environment = j.at("environment").get<std::string>();
    int k = 0;
    for (const auto& p : j.at("pool")) {
      const std::string id = "agent-" + std::to_string(++k);
      if (p.is_string()) {
        c.pool.push_back(parse_agent_ref(p.get<std::string>(), id));
      } else {
        auto spec = agent_spec_from_json(p);
        if (spec.agent_id.empty()) spec.agent_id = id;
        c.pool.push_back(std::move(spec));
      }
    }
    c.games = j.value("games", 1);
    c.seats_per_game = j.value("seats_per_game", 4);
    c.seed = j.value("seed", std::uint64_t{0});
    c.parallelism = j.value("parallelism", 4);
    c.base_dir = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
    if (j.contains("out_dir")) {
      std::filesystem::path out = j["out_dir"].get<std::string>();
      c.out_dir = out.is_absolute() ? out : c.base_dir / out;
    }
    c.options = j.value("options", json::object());
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

TournamentResult run_tournament(const TournamentConfig& c, std::shared_ptr<const Gateway> gateway) {
  c.validate();
  std::vector<std::function<Transcript()>> jobs;
  // Objects the jobs borrow; they outlive run_jobs.
  std::optional<StoryCorpus> stories;
  std::vector<Card> deck;
  std::vector<Spectrum> spectra;

  if (c.environment == "va") {
    deck = load_deck_manifest(option_path(c, "deck"));
    stories = option_stories(c);
    const bool fixed = c.options.value("fixed_seats", false) ||
                       std::any_of(c.pool.begin(), c.pool.end(), [](const AgentSpec& s) { return !s.shared_story_ids.empty(); });
    if (fixed && static_cast<int>(c.pool.size()) != c.seats_per_game) {
      throw ConfigError("fixed seating needs a pool of exactly seats_per_game agents");
    }
    const auto schedule = fixed ? std::vector<std::vector<int>>() : schedule_games(static_cast<int>(c.pool.size()), c.games, c.seats_per_game);
    const auto judge = option_agent(c, "awareness_judge", "awareness-judge");
    const int max_rounds = c.options.value("max_rounds", 200);
    for (int g = 0; g < c.games; ++g) {
      VaGameSetup setup;
      if (fixed) {
        setup.seats = c.pool;
      } else {
        for (int idx : schedule[static_cast<std::size_t>(g)]) setup.seats.push_back(c.pool[static_cast<std::size_t>(idx)]);
      }
      setup.deck = deck;
      setup.stories = stories ? &*stories : nullptr;
      setup.awareness_judge = judge;
      setup.max_rounds = max_rounds;
      const auto seed = derive_seed(c.seed, static_cast<std::uint64_t>(g));
      jobs.push_back([setup, seed, g, gateway] { return play_va_game(setup, seed, game_name("va", g), gateway); });
    }
  } else if (c.environment == "attuned") {
    spectra = load_spectrum_deck(option_path(c, "spectra"));
    stories = option_stories(c);
    for (int g = 0; g < c.games; ++g) {
      AttunedMatchSetup setup;
      // Alternate which pair opens the match.
      const int a = g % 2 == 0 ? 0 : 2;
      const int b = 2 - a;
      setup.team_a = {c.pool[static_cast<std::size_t>(a)], c.pool[static_cast<std::size_t>(a + 1)]};
      setup.team_b = {c.pool[static_cast<std::size_t>(b)], c.pool[static_cast<std::size_t>(b + 1)]};
      setup.deck = spectra;
      setup.stories = stories ? &*stories : nullptr;
      const auto seed = derive_seed(c.seed, static_cast<std::uint64_t>(g));
      jobs.push_back([setup, seed, g, gateway] { return play_attuned_match(setup, seed, game_name("attuned", g), gateway); });
    }
  } else if (c.environment == "aesopian") {
    const auto settings = aesopian::load_settings(option_path(c, "settings"));
    const auto interp = option_agent(c, "interpreters", "interpreter");
    if (!interp) throw ConfigError("aesopian runs need option 'interpreters'");
    const auto critic = option_agent(c, "critic", "critic");
    const bool control = c.options.value("control", false);
    const int max_attempts = c.options.value("max_attempts", aesopian::kMaxAttempts);
    std::vector<std::pair<const aesopian::AesopianSetting*, const aesopian::AuthorProfile*>> slots;
    for (const auto& s : settings)
      for (const auto& p : s.author_profiles) slots.push_back({&s, &p});
    for (std::size_t m = 0; m < c.pool.size(); ++m) {
      for (int e = 0; e < c.games; ++e) {
        const auto& [setting, profile] = slots[static_cast<std::size_t>(e) % slots.size()];
        AesopianEpisodeSetup setup{*setting, *profile, c.pool[m], *interp, critic, control, max_attempts};
        const std::string id = game_name(("aesopian-" + c.pool[m].agent_id).c_str(), e);
        jobs.push_back([setup, id, gateway] { return play_aesopian_episode(setup, id, gateway); });
      }
    }
  } else {  // allegories
    const auto events = allegories::load_events_dir(option_path(c, "events"));
    const auto corpus_dir = option_path(c, "corpus");
    std::vector<allegories::Allegory> corpus;
    if (auto writer = option_agent(c, "writer", "writer")) {
      const auto genre = allegories::genre_from_string(c.options.value("genre", "fantasy"));
      corpus = write_allegory_corpus(events, *writer, genre, c.options.value("hidden_clues", 3), corpus_dir, gateway);
    } else {
      corpus = allegories::load_corpus(corpus_dir);
    }
    allegories::NameTable names;
    if (auto p = option_path(c, "names", false); !p.empty()) names = allegories::NameTable::load(p);
    const auto decode_judge = option_agent(c, "decode_judge", "decode-judge");
    for (std::size_t m = 0; m < c.pool.size(); ++m) {
      AllegoryReadingSetup setup{corpus, events, c.pool[m], decode_judge, names};
      const auto seed = derive_seed(c.seed, m);
      const std::string id = "allegories-reading-" + c.pool[m].agent_id;
      jobs.push_back([setup, seed, id, gateway] { return play_allegory_readings(setup, seed, id, gateway); });
    }
  }

  auto transcripts = run_jobs(jobs, c.parallelism);

  // Judging needs the readings when hard negatives are mined from them.
  if (c.environment == "allegories") {
    if (auto judge = option_agent(c, "judge", "judge")) {
      const auto events = allegories::load_events_dir(option_path(c, "events"));
      std::map<std::string, std::string> negatives;
      if (auto p = option_path(c, "negatives", false); !p.empty()) {
        negatives = allegories::load_negatives(p);
      } else {
        std::vector<allegories::InterpretationResult> readings;
        for (const auto& t : transcripts)
          for (const auto& e : t.events)
            if (e.value("type", "") == "interpretation") readings.push_back(allegories::interpretation_result_from_json(e.at("record")));
        negatives = allegories::harvest_negatives(readings, events);
      }
      AllegoryJudgingSetup setup{allegories::load_corpus(option_path(c, "corpus")), events, negatives, *judge};
      transcripts.push_back(play_allegory_judging(setup, derive_seed(c.seed, 1u << 20), "allegories-judging", gateway));
    }
  }

  TournamentResult result;
  std::filesystem::create_directories(c.out_dir);
  std::vector<Transcript> persisted;
  for (const auto& t : transcripts) {
    const std::string text = serialize(t);
    write_file(c.out_dir / (t.game_id() + ".jsonl"), text);
    persisted.push_back(parse_transcript(text, t.game_id()));
    result.aborted += t.aborted();
  }
  result.report = recompute_report(persisted);
  write_report(result.report, c.out_dir / "report");
  result.transcripts = std::move(persisted);
  return result;
}

std::shared_ptr<const Gateway> make_gateway_for(std::span<const AgentSpec> specs, GatewayOptions options) {
  std::set<std::string> providers;
  for (const auto& s : specs) {
    if (s.backend == Backend::remote_model && s.provider) providers.insert(*s.provider);
  }
  if (providers.empty()) return nullptr;
  auto gw = std::make_shared<Gateway>(std::move(options), make_http_transport());
  for (const auto& p : providers) gw->add_provider(provider_from_env(p));
  return gw;
}

}  // namespace arena::harness
