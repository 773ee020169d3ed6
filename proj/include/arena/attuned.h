#pragma once

#include <array>
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
#include "arena/types.h"

namespace arena::attuned {

inline constexpr int kWinningScore = 20;
// Safety stop; a match that never scores (e.g. two teams that always tie
// outside the rings) would otherwise run forever.
inline constexpr int kMaxRounds = 200;

// Seats 0,1 are team 0 and seats 2,3 team 1.
inline int team_of(int seat) { return seat / 2; }
inline int teammate_of(int seat) { return seat ^ 1; }

struct SpectrumRound {
  int round = 0;
  int active_team = 0;
  int sender = 0;
  std::string sender_model;
  Spectrum spectrum;
  int target = 0;
  std::string clue;
  std::map<int, int> guesses;     // seat -> guess
  std::array<int, 2> team_guess{};
  std::array<int, 2> deltas{};
  std::array<int, 2> points{};
  std::map<std::string, std::string> thinking_traces;  // "<seat>/<phase>"
  std::vector<std::string> warnings;

  friend bool operator==(const SpectrumRound&, const SpectrumRound&) = default;
};

nlohmann::json to_json(const SpectrumRound& r);
SpectrumRound spectrum_round_from_json(const nlohmann::json& j);

struct TeamState {
  std::string team_id;
  std::array<std::string, 2> members;
  int score = 0;
  std::vector<std::string> shared_story_ids;
};

struct MatchState {
  std::array<TeamState, 2> teams;
  std::vector<std::string> seat_models;  // display label per seat
  std::vector<Spectrum> deck;            // full deck, in draw order
  std::size_t next_card = 0;
  int round = 1;
  std::uint64_t seed = 0;
  Rng rng{0};
};

// Throws ConfigError unless each team has two members, the teams' story sets
// are disjoint and the deck is non-empty with distinct, non-empty labels.
MatchState new_match(const std::array<AgentSpec, 2>& team_a, const std::array<AgentSpec, 2>& team_b,
                     std::vector<Spectrum> deck, std::uint64_t seed);

void check_story_disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Points for a ring distance: 4 within 2.5, 3 within 7.5, 2 within 12.5, else 0.
int ring_points(double delta);

struct RoundPoints {
  int sender_team = 0;
  int opponent_team = 0;
};
RoundPoints score_attuned(int target, int sender_team_guess, int opponent_team_guess);

// Arithmetic mean of two guesses, rounded half up.
int aggregate_guess(int a, int b);

struct RoundContext {
  std::vector<std::string> system_prompts;  // per seat; empty = default prompt
  std::function<void(const nlohmann::json&)> on_event;
};

std::pair<MatchState, SpectrumRound> run_attuned_round(MatchState state, std::span<Agent* const> agents,
                                                       const RoundContext& context = {});

std::optional<double> mindread(std::span<const SpectrumRound> rounds, const std::string& model);

struct MatchOver {
  bool over = false;
  std::optional<int> winner;
};
MatchOver is_attuned_over(const MatchState& state);

std::string team_name(int team);

}  // namespace arena::attuned
