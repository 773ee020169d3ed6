#include "arena/attuned.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <set>

namespace arena::attuned {

using nlohmann::json;

std::string team_name(int team) { return "Team " + std::to_string(team + 1); }

json to_json(const SpectrumRound& r) {
  json guesses = json::object();
  for (const auto& [seat, g] : r.guesses) guesses[std::to_string(seat)] = g;
  return {{"round", r.round},
          {"active_team", r.active_team},
          {"sender", r.sender},
          {"sender_model", r.sender_model},
          {"spectrum", {r.spectrum.left_label, r.spectrum.right_label}},
          {"target", r.target},
          {"clue", r.clue},
          {"guesses", guesses},
          {"team_guess", r.team_guess},
          {"deltas", r.deltas},
          {"points", r.points},
          {"thinking_traces", r.thinking_traces},
          {"warnings", r.warnings}};
}

SpectrumRound spectrum_round_from_json(const json& j) {
  SpectrumRound r;
  r.round = j.at("round").get<int>();
  r.active_team = j.at("active_team").get<int>();
  r.sender = j.at("sender").get<int>();
  r.sender_model = j.at("sender_model").get<std::string>();
  r.spectrum = {j.at("spectrum").at(0).get<std::string>(), j.at("spectrum").at(1).get<std::string>()};
  r.target = j.at("target").get<int>();
  r.clue = j.at("clue").get<std::string>();
  for (const auto& [k, v] : j.at("guesses").items()) r.guesses[std::stoi(k)] = v.get<int>();
  r.team_guess = j.at("team_guess").get<std::array<int, 2>>();
  r.deltas = j.at("deltas").get<std::array<int, 2>>();
  r.points = j.at("points").get<std::array<int, 2>>();
  r.thinking_traces = j.value("thinking_traces", std::map<std::string, std::string>{});
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

void check_story_disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::set<std::string> left(a.begin(), a.end());
  for (const auto& id : b) {
    if (left.count(id)) throw ConfigError("story '" + id + "' is shared by both teams");
  }
}

MatchState new_match(const std::array<AgentSpec, 2>& team_a, const std::array<AgentSpec, 2>& team_b,
                     std::vector<Spectrum> deck, std::uint64_t seed) {
  if (deck.empty()) throw ConfigError("empty spectrum deck");
  for (const auto& s : deck) {
    if (trim(s.left_label).empty() || trim(s.right_label).empty() || s.left_label == s.right_label) {
      throw ConfigError("spectrum labels must be distinct and non-empty: '" + s.left_label + "' / '" +
                        s.right_label + "'");
    }
  }
  MatchState m;
  const std::array<const std::array<AgentSpec, 2>*, 2> teams = {&team_a, &team_b};
  std::set<std::string> ids;
  for (int t = 0; t < 2; ++t) {
    auto& team = m.teams[t];
    team.team_id = team_name(t);
    const auto& members = *teams[t];
    if (members[0].shared_story_ids != members[1].shared_story_ids) {
      throw ConfigError(team.team_id + " members must share the same stories");
    }
    team.shared_story_ids = members[0].shared_story_ids;
    for (int k = 0; k < 2; ++k) {
      if (!ids.insert(members[k].agent_id).second) throw ConfigError("duplicate agent id: " + members[k].agent_id);
      team.members[k] = members[k].agent_id;
      m.seat_models.push_back(members[k].label());
    }
  }
  check_story_disjoint(m.teams[0].shared_story_ids, m.teams[1].shared_story_ids);
  m.seed = seed;
  m.rng = Rng(seed);
  m.deck = std::move(deck);
  m.rng.shuffle(std::span<Spectrum>(m.deck));
  return m;
}

int ring_points(double delta) {
  if (delta <= 2.5) return 4;
  if (delta <= 7.5) return 3;
  if (delta <= 12.5) return 2;
  return 0;
}

RoundPoints score_attuned(int target, int sender_team_guess, int opponent_team_guess) {
  const int ds = std::abs(target - sender_team_guess);
  const int dop = std::abs(target - opponent_team_guess);
  RoundPoints p;
  if (ds <= dop) {
    p.sender_team = ring_points(ds);
  } else {
    p.opponent_team = std::max(ring_points(dop), 1);
  }
  return p;
}

int aggregate_guess(int a, int b) {
  // Both are in [0, 100], so the sum is non-negative and floor((a+b+1)/2) is half-up.
  return (a + b + 1) / 2;
}

namespace {

std::string scores_text(const MatchState& s) {
  return team_name(0) + ": " + std::to_string(s.teams[0].score) + ", " + team_name(1) + ": " +
         std::to_string(s.teams[1].score);
}

std::string system_prompt_for(const RoundContext& ctx, int seat) {
  if (seat < static_cast<int>(ctx.system_prompts.size()) && !ctx.system_prompts[seat].empty()) {
    return ctx.system_prompts[seat];
  }
  return prompts::render("attuned_system_default",
                         {{"player_id", std::to_string(seat + 1)},
                          {"my_team_name", team_name(team_of(seat))},
                          {"teammates", "Player " + std::to_string(teammate_of(seat) + 1)}});
}

void emit(const RoundContext& ctx, const std::string& phase, int round, int seat, const Observation& obs,
          const AgentReply& reply) {
  if (!ctx.on_event) return;
  ctx.on_event({{"type", "phase"},
                {"phase", phase},
                {"round", round},
                {"seat", seat},
                {"user_prompt", obs.user_prompt},
                {"raw", reply.raw_text},
                {"parsed", to_json(reply.output)}});
}

}  // namespace

std::pair<MatchState, SpectrumRound> run_attuned_round(MatchState state, std::span<Agent* const> agents,
                                                       const RoundContext& ctx) {
  if (agents.size() != 4) throw std::invalid_argument("Attuned needs exactly 4 agents");
  SpectrumRound rec;
  rec.round = state.round;
  rec.active_team = (state.round - 1) % 2;
  // Members of a team take turns sending.
  rec.sender = rec.active_team * 2 + ((state.round - 1) / 2) % 2;
  rec.sender_model = state.seat_models[rec.sender];

  if (state.next_card >= state.deck.size()) {
    state.rng.shuffle(std::span<Spectrum>(state.deck));
    state.next_card = 0;
  }
  rec.spectrum = state.deck[state.next_card++];
  rec.target = static_cast<int>(state.rng.uniform(0, 100));

  // Sender.
  {
    Observation obs;
    obs.schema = make_schema(SchemaKind::attuned_sender);
    obs.system_prompt = system_prompt_for(ctx, rec.sender);
    obs.user_prompt = prompts::render("attuned_user_sender",
                                      {{"round_number", std::to_string(state.round)},
                                       {"game_scores", scores_text(state)},
                                       {"target", std::to_string(rec.target)},
                                       {"spectrum[0]", rec.spectrum.left_label},
                                       {"spectrum[1]", rec.spectrum.right_label},
                                       {"my_team_name", team_name(rec.active_team)}});
    obs.facts = SenderFacts{rec.sender + 1, rec.spectrum, rec.target};
    AgentReply reply;
    try {
      reply = agents[rec.sender]->act(obs);
    } catch (const AgentError& e) {
      throw AgentError("Player " + std::to_string(rec.sender + 1) + " failed as sender: " + e.what());
    }
    rec.clue = trim(reply.output.text("clue"));
    if (reply.output.thinking_trace) rec.thinking_traces[std::to_string(rec.sender) + "/sender"] = *reply.output.thinking_trace;
    emit(ctx, "sender", state.round, rec.sender, obs, reply);
  }

  // Guessers; none of them sees the target.
  for (int seat = 0; seat < 4; ++seat) {
    if (seat == rec.sender) continue;
    const bool teammate = team_of(seat) == rec.active_team;
    Observation obs;
    obs.schema = make_schema(SchemaKind::attuned_guesser);
    obs.system_prompt = system_prompt_for(ctx, seat);
    const std::string sender = "Player " + std::to_string(rec.sender + 1);
    obs.user_prompt = prompts::render(
        "attuned_user_guesser",
        {{"round_number", std::to_string(state.round)},
         {"game_scores", scores_text(state)},
         {"spectrum[0]", rec.spectrum.left_label},
         {"spectrum[1]", rec.spectrum.right_label},
         {"sender_identity", teammate ? "Your teammate " + sender : sender + " from the opposing team"},
         {"clue", rec.clue}});
    obs.facts = GuesserFacts{seat + 1, rec.sender + 1, teammate, rec.spectrum, rec.clue};
    AgentReply reply;
    try {
      reply = agents[seat]->act(obs);
    } catch (const AgentError& e) {
      throw AgentError("Player " + std::to_string(seat + 1) + " failed as guesser: " + e.what());
    }
    auto guess = reply.output.integer("guess");
    if (guess < 0 || guess > 100) {
      rec.warnings.push_back("Player " + std::to_string(seat + 1) + " guessed " + std::to_string(guess) +
                             "; clamped to [0, 100]");
      guess = std::clamp<std::int64_t>(guess, 0, 100);
    }
    for (const auto& w : reply.output.warnings) rec.warnings.push_back("Player " + std::to_string(seat + 1) + ": " + w);
    rec.guesses[seat] = static_cast<int>(guess);
    if (reply.output.thinking_trace) rec.thinking_traces[std::to_string(seat) + "/guesser"] = *reply.output.thinking_trace;
    emit(ctx, "guesser", state.round, seat, obs, reply);
  }

  const int opp = 1 - rec.active_team;
  rec.team_guess[rec.active_team] = rec.guesses.at(teammate_of(rec.sender));
  rec.team_guess[opp] = aggregate_guess(rec.guesses.at(opp * 2), rec.guesses.at(opp * 2 + 1));
  for (int t = 0; t < 2; ++t) rec.deltas[t] = std::abs(rec.target - rec.team_guess[t]);
  const auto pts = score_attuned(rec.target, rec.team_guess[rec.active_team], rec.team_guess[opp]);
  rec.points[rec.active_team] = pts.sender_team;
  rec.points[opp] = pts.opponent_team;
  state.teams[0].score += rec.points[0];
  state.teams[1].score += rec.points[1];

  if (ctx.on_event) ctx.on_event({{"type", "round"}, {"record", to_json(rec)}});
  state.round += 1;
  return {std::move(state), std::move(rec)};
}

std::optional<double> mindread(std::span<const SpectrumRound> rounds, const std::string& model) {
  int total = 0;
  int hits = 0;
  for (const auto& r : rounds) {
    if (r.sender_model != model) continue;
    ++total;
    hits += r.points[r.active_team] >= 2;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(hits) / total;
}

MatchOver is_attuned_over(const MatchState& state) {
  const int a = state.teams[0].score;
  const int b = state.teams[1].score;
  MatchOver m;
  if (a >= kWinningScore || b >= kWinningScore) {
    // Only one team scores per round, so both cannot cross in the same round.
    assert(a != b);
    m.over = true;
    m.winner = a > b ? 0 : 1;
  } else if (state.round > kMaxRounds) {
    m.over = true;
    if (a != b) m.winner = a > b ? 0 : 1;
  }
  return m;
}

}  // namespace arena::attuned
