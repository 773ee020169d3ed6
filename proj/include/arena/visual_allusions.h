#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arena/agents.h"
#include "arena/rng.h"
#include "arena/stats.h"
#include "arena/types.h"

namespace arena::va {

inline constexpr int kHandSize = 6;
inline constexpr int kWinningScore = 30;
inline constexpr int kMinPlayers = 3;
inline constexpr int kMaxPlayers = 6;

enum class Phase { storytelling, card_play, voting, scoring };
enum class ClueType { obvious, obscure, just_right };

std::string_view to_string(ClueType type);
ClueType clue_type_from_string(std::string_view s);

struct VotingEntry {
  int label = 0;
  int card_id = 0;
  int owner = 0;

  friend bool operator==(const VotingEntry&, const VotingEntry&) = default;
};

struct GameState {
  std::vector<std::string> player_ids;
  std::vector<Card> deck;
  std::vector<std::vector<Card>> hands;
  std::vector<int> scores;
  int round = 1;
  int storyteller_idx = 0;
  Phase phase = Phase::storytelling;
  std::optional<std::string> clue;
  std::optional<int> storyteller_card;
  std::vector<VotingEntry> voting_deck;
  std::map<int, int> votes;  // voter -> display label
  std::uint64_t rng_seed = 0;
  Rng rng{0};
  bool deck_exhausted = false;

  int players() const { return static_cast<int>(player_ids.size()); }
};

// Player indices are seat numbers from 0; prompts show them as "Player n+1".
struct RoundRecord {
  int round = 0;
  int storyteller = 0;
  std::string clue;
  int storyteller_card = 0;
  std::map<int, int> played_cards;  // every seat, storyteller included
  std::vector<VotingEntry> voting_deck;
  std::map<int, int> votes;  // voter -> card_id
  std::map<int, int> per_player_delta;
  ClueType clue_type = ClueType::obvious;
  bool story_refs_requested = false;
  std::vector<std::string> referenced_story_names;
  std::map<std::string, std::string> thinking_traces;  // "<seat>/<phase>" -> trace
  std::vector<std::string> warnings;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

nlohmann::json to_json(const RoundRecord& r);
RoundRecord round_record_from_json(const nlohmann::json& j);

// Shuffles the deck with `seed` and deals kHandSize cards to each seat.
// Throws ConfigError for a deck smaller than players * kHandSize, duplicate
// agent ids, duplicate card ids or an unsupported player count.
GameState new_game(const std::vector<AgentSpec>& players, std::vector<Card> deck,
                   std::uint64_t seed);

using EventSink = std::function<void(const nlohmann::json&)>;

// Per-game prompt inputs that do not live in the game state.
struct RoundContext {
  std::vector<std::string> system_prompts;            // per seat; empty = default prompt
  bool story_refs = false;                            // storyteller reports referenced stories
  std::vector<std::vector<std::string>> story_titles; // per seat, handed to scripted policies
  std::span<const RoundRecord> history;               // earlier rounds, for memory windows
  EventSink on_event;                                 // receives one record per phase event
};

// Plays one full round. Throws AgentError if an agent fails; the caller
// aborts the game.
std::pair<GameState, RoundRecord> run_round(GameState state, std::span<Agent* const> agents,
                                            const RoundContext& context = {});

// Points per seat for one round. `played` maps seats to their card (the
// storyteller's entry is optional); `votes` maps voters to card ids.
// Throws std::invalid_argument for malformed maps or self-votes.
std::map<int, int> score_round(int storyteller, int storyteller_card,
                               const std::map<int, int>& played, const std::map<int, int>& votes);

ClueType classify_clue(const std::map<int, int>& votes, int storyteller_card);

struct GameOver {
  bool over = false;
  std::vector<int> winners;
};
GameOver is_game_over(const GameState& state);

// Role breakdown of one seat's points in a round. Guessing counts only the
// +3 for a correct vote on a just-right clue.
struct ComponentScores {
  int storytelling = 0;
  int guessing = 0;
  int distraction = 0;
};
std::map<int, ComponentScores> component_scores(const RoundRecord& record);

// Rate at which `guesser` decoded `storyteller`'s clues; absent without
// storyteller rounds.
std::optional<double> decode_rate(std::span<const RoundRecord> rounds, int storyteller, int guesser);
std::optional<double> lift(std::span<const RoundRecord> rounds, int from, int to, int n);
std::optional<double> spark_coefficient(std::span<const RoundRecord> rounds, int i, int j, int n);

// Pooled 2x2 chi-squared over both storyteller directions of the pair:
// rows partner / other guessers, columns correct / incorrect.
stats::Table2x2 spark_table(std::span<const RoundRecord> rounds, int i, int j);
stats::TestResult spark_significance(std::span<const RoundRecord> rounds, int i, int j);

// Throws std::logic_error when the rounds were played without the story
// reference prompt.
std::optional<double> storytelling_clue_rate(std::span<const RoundRecord> rounds, int player,
                                             const std::vector<std::string>& shared_titles);

std::optional<double> awareness_score(std::span<const RoundRecord> rounds, int player,
                                      Agent& classifier);

std::string generate_card_caption(const std::vector<std::string>& entities,
                                  const std::string& style);

// Compact text of the last k rounds for agents with a memory window.
std::string render_recap(std::span<const RoundRecord> rounds, int k);

std::string seat_name(int seat);

}  // namespace arena::va
