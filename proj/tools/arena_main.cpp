// arena: command-line front end for the four environments and reports.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 finished but some games or episodes were aborted.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "arena/harness.h"

namespace {

using arena::AgentSpec;
using nlohmann::json;
namespace fs = std::filesystem;
namespace h = arena::harness;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAborted = 3;

std::vector<AgentSpec> load_players(const fs::path& path) {
  json j;
  try {
    j = json::parse(arena::read_file(path));
  } catch (const json::exception& e) {
    throw arena::ConfigError(path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw arena::ConfigError(path.string() + ": expected a JSON array of players");
  std::vector<AgentSpec> out;
  int k = 0;
  for (const auto& p : j) {
    const std::string id = "player-" + std::to_string(++k);
    if (p.is_string()) {
      out.push_back(arena::parse_agent_ref(p.get<std::string>(), id));
    } else {
      auto spec = arena::agent_spec_from_json(p);
      if (spec.agent_id.empty()) spec.agent_id = id;
      out.push_back(std::move(spec));
    }
  }
  return out;
}

arena::GatewayOptions gateway_options(const std::string& cache_dir, const std::string& mode) {
  arena::GatewayOptions o;
  if (!cache_dir.empty()) {
    o.cache_dir = cache_dir;
    if (mode == "off") o.cache_mode = arena::CacheMode::off;
    else if (mode == "record") o.cache_mode = arena::CacheMode::record;
    else if (mode == "replay") o.cache_mode = arena::CacheMode::replay;
    else if (mode == "read_write") o.cache_mode = arena::CacheMode::read_write;
    else throw arena::ConfigError("unknown cache mode: " + mode);
  }
  return o;
}

void print_report(const h::Report& report) {
  for (const auto& t : report.tables) std::cout << h::to_markdown(t) << "\n";
}

int finish(const h::Report& report, const fs::path& out_dir, int aborted) {
  print_report(report);
  std::cout << "transcripts and report written to " << out_dir.string() << "\n";
  if (aborted > 0) {
    std::cerr << aborted << " game(s) aborted; see transcript footers\n";
    return kExitAborted;
  }
  return kExitOk;
}

std::vector<h::Transcript> persist(const std::vector<h::Transcript>& transcripts, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<h::Transcript> back;
  for (const auto& t : transcripts) {
    const std::string text = h::serialize(t);
    arena::write_file(out_dir / (t.game_id() + ".jsonl"), text);
    back.push_back(h::parse_transcript(text, t.game_id()));
  }
  return back;
}

int count_aborted(const std::vector<h::Transcript>& ts) {
  int n = 0;
  for (const auto& t : ts) n += t.aborted();
  return n;
}

// Shared flags for gateway caching.
struct CacheFlags {
  std::string dir;
  std::string mode = "read_write";
  void add(CLI::App* app) {
    app->add_option("--cache", dir, "Response cache directory");
    app->add_option("--cache-mode", mode, "off, record, replay or read_write")->capture_default_str();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent subtext communication environments"};
  app.require_subcommand(1);
  CacheFlags cache;
  cache.add(&app);
  int parallel = 4;
  app.add_option("--parallel", parallel, "Concurrent games")->capture_default_str();

  // arena run --config file.json
  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  std::string config_path;
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  std::string run_out;
  run->add_option("--out", run_out, "Override the config's out_dir");

  // arena va run ...
  auto* va = app.add_subcommand("va", "Visual Allusions");
  auto* va_run = va->add_subcommand("run", "Play a tournament");
  va->require_subcommand(1);
  std::string players_path, deck_path, shared_dir, va_out = "runs/va", awareness_judge;
  int va_games = 1, va_memory = 0, va_seats = 4, stories_per_pair = 2;
  std::uint64_t va_seed = 0;
  std::vector<std::string> pairs;
  bool infer_partners = false;
  va_run->add_option("--players", players_path, "JSON list of agent refs or specs")->required();
  va_run->add_option("--deck", deck_path, "Deck manifest (TSV: id, image, caption)")->required();
  va_run->add_option("--games", va_games)->capture_default_str();
  va_run->add_option("--seed", va_seed)->capture_default_str();
  va_run->add_option("--seats", va_seats, "Players per game")->capture_default_str();
  va_run->add_option("--memory", va_memory, "Rounds each agent remembers")->capture_default_str();
  va_run->add_option("--shared-context", shared_dir, "Stories handed to paired players");
  va_run->add_option("--pairs", pairs, "Partner pairs as agent_id,agent_id");
  va_run->add_option("--stories-per-pair", stories_per_pair)->capture_default_str();
  va_run->add_flag("--infer-partners", infer_partners, "Do not tell players who shares their stories");
  va_run->add_option("--awareness-judge", awareness_judge, "Agent ref that scores awareness");
  va_run->add_option("--out", va_out)->capture_default_str();

  // arena attuned run ...
  auto* at = app.add_subcommand("attuned", "Attuned");
  at->require_subcommand(1);
  auto* at_run = at->add_subcommand("run", "Play matches between two teams");
  std::string team_a, team_b, stories_a, stories_b, spectra_path, at_out = "runs/attuned";
  int matches = 1;
  std::uint64_t at_seed = 0;
  at_run->add_option("--team-a", team_a, "Agent ref for both members of team A")->required();
  at_run->add_option("--team-b", team_b, "Agent ref for both members of team B")->required();
  at_run->add_option("--stories-a", stories_a, "Stories shared inside team A");
  at_run->add_option("--stories-b", stories_b, "Stories shared inside team B");
  at_run->add_option("--spectra", spectra_path, "Spectrum deck (TSV: left, right)")->required();
  at_run->add_option("--matches", matches)->capture_default_str();
  at_run->add_option("--seed", at_seed)->capture_default_str();
  at_run->add_option("--out", at_out)->capture_default_str();

  // arena allegories generate|interpret|judge ...
  auto* al = app.add_subcommand("allegories", "Historical Allegories");
  al->require_subcommand(1);
  std::string events_dir, corpus_dir, writer_ref, genres = "sf,fantasy", negatives_path, judge_ref, decode_ref,
                                                  names_path, conditions = "all", al_out = "runs/allegories";
  int per_genre = 1, hidden_clues = 3;
  std::uint64_t al_seed = 0;
  std::vector<std::string> reader_refs;
  auto* gen = al->add_subcommand("generate", "Research and write allegories");
  gen->add_option("--events", events_dir)->required();
  gen->add_option("--writer", writer_ref)->required();
  gen->add_option("--genres", genres)->capture_default_str();
  gen->add_option("--per-genre", per_genre)->capture_default_str();
  gen->add_option("--hidden-clues", hidden_clues)->capture_default_str();
  gen->add_option("--seed", al_seed)->capture_default_str();
  gen->add_option("--corpus", corpus_dir, "Output corpus directory")->required();
  auto* interp = al->add_subcommand("interpret", "Interpret every story under each condition");
  interp->add_option("--corpus", corpus_dir)->required();
  interp->add_option("--events", events_dir)->required();
  interp->add_option("--models", reader_refs)->required();
  interp->add_option("--conditions", conditions, "all, or persona:information pairs")->capture_default_str();
  interp->add_option("--decode-judge", decode_ref);
  interp->add_option("--names", names_path, "Culture name table (TSV)");
  interp->add_option("--seed", al_seed)->capture_default_str();
  interp->add_option("--out", al_out)->capture_default_str();
  auto* judge = al->add_subcommand("judge", "Two-event identification by a judge");
  judge->add_option("--corpus", corpus_dir)->required();
  judge->add_option("--events", events_dir)->required();
  judge->add_option("--negatives", negatives_path)->required();
  judge->add_option("--judge", judge_ref)->required();
  judge->add_option("--seed", al_seed)->capture_default_str();
  judge->add_option("--out", al_out)->capture_default_str();

  // arena aesopian run ...
  auto* ae = app.add_subcommand("aesopian", "The Aesopian Author");
  ae->require_subcommand(1);
  auto* ae_run = ae->add_subcommand("run", "Run author episodes");
  std::string settings_path, author_ref, interpreters_ref, critic_ref, ae_out = "runs/aesopian";
  int episodes = 1, max_attempts = arena::aesopian::kMaxAttempts;
  bool control = false;
  ae_run->add_option("--settings", settings_path)->required();
  ae_run->add_option("--author", author_ref)->required();
  ae_run->add_option("--interpreters", interpreters_ref)->required();
  ae_run->add_option("--critic", critic_ref, "Override the critic model");
  ae_run->add_option("--episodes", episodes)->capture_default_str();
  ae_run->add_option("--max-attempts", max_attempts)->capture_default_str();
  ae_run->add_flag("--control", control, "Use the control author prompt");
  ae_run->add_option("--out", ae_out)->capture_default_str();

  // arena report --transcripts dir
  auto* rep = app.add_subcommand("report", "Regenerate tables from transcripts");
  std::string transcripts_dir, report_out;
  rep->add_option("--transcripts", transcripts_dir)->required();
  rep->add_option("--out", report_out, "Report directory (default <transcripts>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const auto gw_options = gateway_options(cache.dir, cache.mode);

    if (*run) {
      auto cfg = h::load_config(config_path);
      if (app.count("--parallel")) cfg.parallelism = parallel;
      if (!run_out.empty()) cfg.out_dir = run_out;
      auto gw = h::make_gateway_for(cfg.pool, gw_options);
      auto result = h::run_tournament(cfg, gw);
      return finish(result.report, cfg.out_dir, result.aborted);
    }

    if (*va_run) {
      h::TournamentConfig cfg;
      cfg.environment = "va";
      cfg.pool = load_players(players_path);
      cfg.games = va_games;
      cfg.seed = va_seed;
      cfg.seats_per_game = va_seats;
      cfg.parallelism = parallel;
      cfg.out_dir = va_out;
      cfg.base_dir = fs::current_path();
      cfg.options["deck"] = deck_path;
      for (auto& s : cfg.pool) s.memory_window_k = va_memory;
      if (!awareness_judge.empty()) cfg.options["awareness_judge"] = awareness_judge;
      if (!shared_dir.empty()) {
        const auto corpus = arena::StoryCorpus::load_dir(shared_dir);
        const auto ids = corpus.ids();
        cfg.options["stories"] = shared_dir;
        std::size_t next = 0;
        for (const auto& pair : pairs) {
          const auto members = arena::split_commas(pair);
          if (members.size() != 2) throw arena::ConfigError("--pairs takes agent_id,agent_id");
          if (next + static_cast<std::size_t>(stories_per_pair) > ids.size()) {
            throw arena::ConfigError("not enough stories for every pair");
          }
          std::vector<std::string> given(ids.begin() + static_cast<long>(next),
                                         ids.begin() + static_cast<long>(next + static_cast<std::size_t>(stories_per_pair)));
          next += static_cast<std::size_t>(stories_per_pair);
          for (int k = 0; k < 2; ++k) {
            auto it = std::find_if(cfg.pool.begin(), cfg.pool.end(),
                                   [&](const AgentSpec& s) { return s.agent_id == members[static_cast<std::size_t>(k)]; });
            if (it == cfg.pool.end()) throw arena::ConfigError("unknown agent in --pairs: " + members[static_cast<std::size_t>(k)]);
            it->shared_story_ids = given;
            if (!infer_partners) it->partner_belief = members[static_cast<std::size_t>(1 - k)];
          }
        }
      }
      auto gw = h::make_gateway_for(cfg.pool, gw_options);
      auto result = h::run_tournament(cfg, gw);
      return finish(result.report, cfg.out_dir, result.aborted);
    }

    if (*at_run) {
      h::TournamentConfig cfg;
      cfg.environment = "attuned";
      cfg.games = matches;
      cfg.seed = at_seed;
      cfg.parallelism = parallel;
      cfg.out_dir = at_out;
      cfg.base_dir = fs::current_path();
      cfg.options["spectra"] = spectra_path;
      json story_dirs = json::array();
      auto team = [&](const std::string& ref, const std::string& dir, const std::string& tag) {
        std::vector<std::string> ids;
        if (!dir.empty()) {
          ids = arena::StoryCorpus::load_dir(dir).ids();
          story_dirs.push_back(dir);
        }
        for (int k = 1; k <= 2; ++k) {
          auto spec = arena::parse_agent_ref(ref, tag + "-" + std::to_string(k));
          spec.shared_story_ids = ids;
          cfg.pool.push_back(std::move(spec));
        }
      };
      team(team_a, stories_a, "team-a");
      team(team_b, stories_b, "team-b");
      if (!story_dirs.empty()) cfg.options["stories"] = story_dirs;
      auto gw = h::make_gateway_for(cfg.pool, gw_options);
      auto result = h::run_tournament(cfg, gw);
      return finish(result.report, cfg.out_dir, result.aborted);
    }

    if (*gen) {
      auto events = arena::allegories::load_events_dir(events_dir);
      const auto writer = arena::parse_agent_ref(writer_ref, "writer");
      std::vector<AgentSpec> specs = {writer};
      auto gw = h::make_gateway_for(specs, gw_options);
      arena::Rng rng(al_seed);
      rng.shuffle(std::span<arena::allegories::HistoricalEvent>(events));
      int written = 0;
      for (const auto& g : arena::split_commas(genres)) {
        const auto genre = arena::allegories::genre_from_string(g);
        std::vector<arena::allegories::HistoricalEvent> chosen;
        for (int i = 0; i < per_genre; ++i) chosen.push_back(events[static_cast<std::size_t>(i) % events.size()]);
        const std::string prefix = genre == arena::allegories::Genre::fantasy ? "fantasy" : "sf";
        auto stories = h::write_allegory_corpus(chosen, writer, genre, hidden_clues, corpus_dir, gw, prefix);
        for (const auto& s : stories) {
          if (!s.compliant) std::cerr << s.story_id << ": " << s.compliance_warnings.back() << "\n";
        }
        written += static_cast<int>(stories.size());
      }
      std::cout << written << " allegories written to " << corpus_dir << "\n";
      return kExitOk;
    }

    if (*interp) {
      namespace al_ = arena::allegories;
      h::AllegoryReadingSetup base;
      base.corpus = al_::load_corpus(corpus_dir);
      base.events = al_::load_events_dir(events_dir);
      if (!names_path.empty()) base.names = al_::NameTable::load(names_path);
      if (!decode_ref.empty()) base.decode_judge = arena::parse_agent_ref(decode_ref, "decode-judge");
      if (conditions != "all") {
        base.personas.clear();
        base.information.clear();
        for (const auto& c : arena::split_commas(conditions)) {
          const auto colon = c.find(':');
          if (colon == std::string::npos) throw arena::ConfigError("condition must be persona:information: " + c);
          const auto p = al_::persona_from_string(c.substr(0, colon));
          const auto i = al_::information_from_string(c.substr(colon + 1));
          if (std::find(base.personas.begin(), base.personas.end(), p) == base.personas.end()) base.personas.push_back(p);
          if (std::find(base.information.begin(), base.information.end(), i) == base.information.end()) base.information.push_back(i);
        }
      }
      std::vector<AgentSpec> specs;
      for (std::size_t m = 0; m < reader_refs.size(); ++m) {
        specs.push_back(arena::parse_agent_ref(reader_refs[m], "reader-" + std::to_string(m + 1)));
      }
      if (base.decode_judge) specs.push_back(*base.decode_judge);
      auto gw = h::make_gateway_for(specs, gw_options);
      std::vector<h::Transcript> ts;
      for (std::size_t m = 0; m < reader_refs.size(); ++m) {
        auto setup = base;
        setup.reader = specs[m];
        ts.push_back(h::play_allegory_readings(setup, arena::derive_seed(al_seed, m),
                                               "allegories-reading-" + setup.reader.agent_id, gw));
      }
      auto back = persist(ts, al_out);
      auto report = h::recompute_report(back);
      h::write_report(report, fs::path(al_out) / "report");
      return finish(report, al_out, count_aborted(back));
    }

    if (*judge) {
      namespace al_ = arena::allegories;
      h::AllegoryJudgingSetup setup{al_::load_corpus(corpus_dir), al_::load_events_dir(events_dir),
                                    al_::load_negatives(negatives_path), arena::parse_agent_ref(judge_ref, "judge")};
      std::vector<AgentSpec> specs = {setup.judge};
      auto gw = h::make_gateway_for(specs, gw_options);
      auto back = persist({h::play_allegory_judging(setup, al_seed, "allegories-judging", gw)}, al_out);
      auto report = h::recompute_report(back);
      h::write_report(report, fs::path(al_out) / "report");
      return finish(report, al_out, count_aborted(back));
    }

    if (*ae_run) {
      h::TournamentConfig cfg;
      cfg.environment = "aesopian";
      cfg.pool = {arena::parse_agent_ref(author_ref, "author")};
      cfg.games = episodes;
      cfg.parallelism = parallel;
      cfg.out_dir = ae_out;
      cfg.base_dir = fs::current_path();
      cfg.options = {{"settings", settings_path},
                     {"interpreters", interpreters_ref},
                     {"control", control},
                     {"max_attempts", max_attempts}};
      if (!critic_ref.empty()) cfg.options["critic"] = critic_ref;
      std::vector<AgentSpec> specs = cfg.pool;
      specs.push_back(arena::parse_agent_ref(interpreters_ref, "interpreter"));
      if (!critic_ref.empty()) specs.push_back(arena::parse_agent_ref(critic_ref, "critic"));
      auto gw = h::make_gateway_for(specs, gw_options);
      auto result = h::run_tournament(cfg, gw);
      return finish(result.report, cfg.out_dir, result.aborted);
    }

    if (*rep) {
      const auto ts = h::load_transcripts(transcripts_dir);
      if (ts.empty()) throw arena::ConfigError("no transcripts in " + transcripts_dir);
      const auto report = h::recompute_report(ts);
      const fs::path out = report_out.empty() ? fs::path(transcripts_dir) / "report" : fs::path(report_out);
      h::write_report(report, out);
      return finish(report, out, report.aborted);
    }
  } catch (const arena::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const arena::prompts::PromptError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
