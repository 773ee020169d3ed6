#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "arena/aesopian.h"
#include "arena/agents.h"
#include "arena/allegories.h"
#include "arena/gateway.h"
#include "arena/types.h"

namespace arena::harness {

inline constexpr int kTranscriptSchemaVersion = 1;

class TranscriptError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// One JSON-lines file per game or episode: a header line, one line per
// event and a footer line. Every line carries a "kind" field.
struct Transcript {
  nlohmann::json header;  // schema_version, environment, game_id, seed, seats, options
  std::vector<nlohmann::json> events;
  nlohmann::json footer;  // status "completed" | "aborted", error, result

  std::string environment() const;
  std::string game_id() const;
  bool aborted() const;
};

std::string serialize(const Transcript& t);
// Throws TranscriptError on malformed lines or a schema version mismatch.
Transcript parse_transcript(std::string_view text, const std::string& source = "<memory>");
void write_transcript(const std::filesystem::path& path, const Transcript& t);
Transcript read_transcript(const std::filesystem::path& path);
// Every *.jsonl file in `dir`, in file name order.
std::vector<Transcript> load_transcripts(const std::filesystem::path& dir);

// Symmetric co-play counts over a fixed, ordered pool.
class CoPlayMatrix {
 public:
  explicit CoPlayMatrix(int pool_size);
  int size() const { return n_; }
  int at(int i, int j) const { return counts_[static_cast<std::size_t>(i * n_ + j)]; }
  int row_sum(int i) const;
  int games(int i) const { return games_[static_cast<std::size_t>(i)]; }
  // +1 for every unordered pair among `seats`.
  void record(std::span<const int> seats);

 private:
  int n_;
  std::vector<int> counts_;
  std::vector<int> games_;
};

// First seat: fewest co-plays so far (row sum); then each seat minimises the
// co-play sum with the seats already chosen. Ties go to the earlier pool
// index. Throws std::invalid_argument when seats exceeds the pool.
std::vector<int> greedy_select(const CoPlayMatrix& matrix, int seats);

// Runs greedy_select `games` times, recording each schedule as it goes.
std::vector<std::vector<int>> schedule_games(int pool_size, int games, int seats);

// ---- Single games. None of these throw on agent failure: the transcript
// footer is marked aborted instead. ----

struct VaGameSetup {
  std::vector<AgentSpec> seats;
  std::vector<Card> deck;
  const StoryCorpus* stories = nullptr;          // needed when any seat has shared stories
  std::optional<AgentSpec> awareness_judge;      // scored into the footer when set
  int max_rounds = 200;                          // safety stop
};

Transcript play_va_game(const VaGameSetup& setup, std::uint64_t seed, const std::string& game_id,
                        std::shared_ptr<const Gateway> gateway);

struct AttunedMatchSetup {
  std::array<AgentSpec, 2> team_a;
  std::array<AgentSpec, 2> team_b;
  std::vector<Spectrum> deck;
  const StoryCorpus* stories = nullptr;
};

Transcript play_attuned_match(const AttunedMatchSetup& setup, std::uint64_t seed, const std::string& game_id,
                              std::shared_ptr<const Gateway> gateway);

struct AesopianEpisodeSetup {
  aesopian::AesopianSetting setting;
  aesopian::AuthorProfile profile;
  AgentSpec author;
  AgentSpec interpreter;  // one model for both inquisitor and critic
  std::optional<AgentSpec> critic_override;
  bool control = false;
  int max_attempts = aesopian::kMaxAttempts;
};

Transcript play_aesopian_episode(const AesopianEpisodeSetup& setup, const std::string& episode_id,
                                 std::shared_ptr<const Gateway> gateway);

// Rebuilds an episode from its transcript.
aesopian::EpisodeState episode_from_transcript(const Transcript& t);

struct AllegoryReadingSetup {
  std::vector<allegories::Allegory> corpus;
  std::vector<allegories::HistoricalEvent> events;
  AgentSpec reader;
  std::optional<AgentSpec> decode_judge;
  allegories::NameTable names;
  std::vector<allegories::Persona> personas{allegories::kPersonas.begin(), allegories::kPersonas.end()};
  std::vector<allegories::Information> information{allegories::kInformation.begin(),
                                                   allegories::kInformation.end()};
};

Transcript play_allegory_readings(const AllegoryReadingSetup& setup, std::uint64_t seed, const std::string& run_id,
                                  std::shared_ptr<const Gateway> gateway);

struct AllegoryJudgingSetup {
  std::vector<allegories::Allegory> corpus;
  std::vector<allegories::HistoricalEvent> events;
  std::map<std::string, std::string> negatives;  // event -> hard negative
  AgentSpec judge;
};

Transcript play_allegory_judging(const AllegoryJudgingSetup& setup, std::uint64_t seed, const std::string& run_id,
                                 std::shared_ptr<const Gateway> gateway);

// Research + writing for every event; writes the corpus files into `out_dir`.
std::vector<allegories::Allegory> write_allegory_corpus(std::span<const allegories::HistoricalEvent> events,
                                                        const AgentSpec& writer, allegories::Genre genre,
                                                        int num_hidden_clues, const std::filesystem::path& out_dir,
                                                        std::shared_ptr<const Gateway> gateway,
                                                        const std::string& id_prefix = "story");

// ---- Reports ----

struct ReportRow {
  std::string model;
  std::vector<std::pair<std::string, std::string>> metrics;  // column -> formatted value, in order
  std::vector<std::string> flags;                            // e.g. "significant"

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ReportTable {
  std::string name;  // file stem, e.g. "va_scores"
  std::string title;
  std::vector<ReportRow> rows;
  std::vector<std::string> notes;

  friend bool operator==(const ReportTable&, const ReportTable&) = default;
};

struct Report {
  std::vector<ReportTable> tables;
  int aborted = 0;
  int completed = 0;

  friend bool operator==(const Report&, const Report&) = default;
};

// Pure function of the transcripts.
Report recompute_report(std::span<const Transcript> transcripts);

std::string to_csv(const ReportTable& table);
std::string to_markdown(const ReportTable& table);
// Writes <name>.csv and <name>.md for each table plus report.md with all of them.
void write_report(const Report& report, const std::filesystem::path& dir);

// ---- Tournaments ----

struct TournamentConfig {
  std::string environment;  // "va", "attuned", "aesopian", "allegories"
  std::vector<AgentSpec> pool;
  int games = 1;
  int seats_per_game = 4;
  std::uint64_t seed = 0;
  int parallelism = 4;
  std::filesystem::path out_dir = "runs";
  nlohmann::json options = nlohmann::json::object();
  std::filesystem::path base_dir = ".";  // relative option paths resolve against this

  void validate() const;
};

// JSON config file; "pool" entries are agent refs or full AgentSpec objects.
TournamentConfig load_config(const std::filesystem::path& path);

struct TournamentResult {
  std::vector<Transcript> transcripts;
  Report report;
  int aborted = 0;
};

// Schedules, runs and persists every game, then reports on the persisted
// transcripts so the live tables equal what `report` regenerates later.
TournamentResult run_tournament(const TournamentConfig& config, std::shared_ptr<const Gateway> gateway);

// A gateway with every provider named in `specs`, configured from the
// environment. Null when all specs are scripted.
std::shared_ptr<const Gateway> make_gateway_for(std::span<const AgentSpec> specs, GatewayOptions options = {});

}  // namespace arena::harness
