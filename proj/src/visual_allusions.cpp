#include "arena/visual_allusions.h"

#include <algorithm>
#include <set>
#include <sstream>

namespace arena::va {

using nlohmann::json;

std::string_view to_string(ClueType type) {
  switch (type) {
    case ClueType::obvious: return "obvious";
    case ClueType::obscure: return "obscure";
    case ClueType::just_right: return "just_right";
  }
  return "obvious";
}

ClueType clue_type_from_string(std::string_view s) {
  if (s == "obvious") return ClueType::obvious;
  if (s == "obscure") return ClueType::obscure;
  if (s == "just_right") return ClueType::just_right;
  throw std::invalid_argument("unknown clue type: " + std::string(s));
}

std::string seat_name(int seat) { return "Player " + std::to_string(seat + 1); }

namespace {

json int_map(const std::map<int, int>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = v;
  return j;
}

std::map<int, int> int_map_from(const json& j) {
  std::map<int, int> m;
  for (const auto& [k, v] : j.items()) m[std::stoi(k)] = v.get<int>();
  return m;
}

}  // namespace

json to_json(const RoundRecord& r) {
  json deck = json::array();
  for (const auto& e : r.voting_deck) deck.push_back({{"label", e.label}, {"card_id", e.card_id}, {"owner", e.owner}});
  return {{"round", r.round},
          {"storyteller", r.storyteller},
          {"clue", r.clue},
          {"storyteller_card", r.storyteller_card},
          {"played_cards", int_map(r.played_cards)},
          {"voting_deck", deck},
          {"votes", int_map(r.votes)},
          {"per_player_delta", int_map(r.per_player_delta)},
          {"clue_type", to_string(r.clue_type)},
          {"story_refs_requested", r.story_refs_requested},
          {"referenced_story_names", r.referenced_story_names},
          {"thinking_traces", r.thinking_traces},
          {"warnings", r.warnings}};
}

RoundRecord round_record_from_json(const json& j) {
  RoundRecord r;
  r.round = j.at("round").get<int>();
  r.storyteller = j.at("storyteller").get<int>();
  r.clue = j.at("clue").get<std::string>();
  r.storyteller_card = j.at("storyteller_card").get<int>();
  r.played_cards = int_map_from(j.at("played_cards"));
  for (const auto& e : j.at("voting_deck")) {
    r.voting_deck.push_back({e.at("label").get<int>(), e.at("card_id").get<int>(), e.at("owner").get<int>()});
  }
  r.votes = int_map_from(j.at("votes"));
  r.per_player_delta = int_map_from(j.at("per_player_delta"));
  r.clue_type = clue_type_from_string(j.at("clue_type").get<std::string>());
  r.story_refs_requested = j.value("story_refs_requested", false);
  r.referenced_story_names = j.value("referenced_story_names", std::vector<std::string>{});
  r.thinking_traces = j.value("thinking_traces", std::map<std::string, std::string>{});
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

GameState new_game(const std::vector<AgentSpec>& players, std::vector<Card> deck, std::uint64_t seed) {
  const int n = static_cast<int>(players.size());
  if (n < kMinPlayers || n > kMaxPlayers) {
    throw ConfigError("Visual Allusions needs 3 to 6 players, got " + std::to_string(n));
  }
  std::set<std::string> ids;
  for (const auto& p : players) {
    if (!ids.insert(p.agent_id).second) throw ConfigError("duplicate agent id: " + p.agent_id);
  }
  if (static_cast<int>(deck.size()) < n * kHandSize) {
    throw ConfigError("deck too small: " + std::to_string(deck.size()) + " cards for " +
                      std::to_string(n) + " hands of " + std::to_string(kHandSize));
  }
  std::set<int> card_ids;
  for (const auto& c : deck) {
    if (!card_ids.insert(c.card_id).second) throw ConfigError("duplicate card id " + std::to_string(c.card_id));
    if (c.caption.empty()) throw ConfigError("card " + std::to_string(c.card_id) + " has no caption");
  }

  GameState s;
  s.rng_seed = seed;
  s.rng = Rng(seed);
  s.rng.shuffle(std::span<Card>(deck));
  for (const auto& p : players) s.player_ids.push_back(p.agent_id);
  s.hands.assign(n, {});
  s.scores.assign(n, 0);
  // Dealt one card at a time, as at a table.
  std::size_t next = 0;
  for (int c = 0; c < kHandSize; ++c) {
    for (int p = 0; p < n; ++p) s.hands[p].push_back(deck[next++]);
  }
  s.deck.assign(deck.begin() + static_cast<std::ptrdiff_t>(next), deck.end());
  return s;
}

std::map<int, int> score_round(int storyteller, int storyteller_card, const std::map<int, int>& played,
                               const std::map<int, int>& votes) {
  std::map<int, int> owner;  // card -> seat
  owner[storyteller_card] = storyteller;
  for (const auto& [seat, card] : played) {
    if (seat == storyteller) {
      if (card != storyteller_card) throw std::invalid_argument("storyteller card mismatch");
      continue;
    }
    if (!owner.emplace(card, seat).second) throw std::invalid_argument("card played twice");
  }
  const int voters = static_cast<int>(owner.size()) - 1;
  if (voters < 1) throw std::invalid_argument("no voters");
  if (static_cast<int>(votes.size()) != voters) throw std::invalid_argument("vote map does not cover every voter");

  std::map<int, int> delta;
  for (const auto& [card, seat] : owner) delta[seat] = 0;
  int m = 0;
  for (const auto& [voter, card] : votes) {
    if (voter == storyteller || !delta.count(voter)) throw std::invalid_argument("vote from a non-voter");
    auto it = owner.find(card);
    if (it == owner.end()) throw std::invalid_argument("vote for a card not in the voting deck");
    if (it->second == voter) throw std::invalid_argument("self-vote");
    if (card == storyteller_card) ++m;
  }
  if (m > 0 && m < voters) {
    delta[storyteller] += 3;
    for (const auto& [voter, card] : votes) {
      if (card == storyteller_card) delta[voter] += 3;
    }
  } else {
    for (auto& [seat, pts] : delta) {
      if (seat != storyteller) pts += 2;
    }
  }
  for (const auto& [voter, card] : votes) {
    if (card != storyteller_card) delta[owner[card]] += 1;
  }
  return delta;
}

ClueType classify_clue(const std::map<int, int>& votes, int storyteller_card) {
  std::size_t correct = 0;
  for (const auto& [voter, card] : votes) correct += card == storyteller_card;
  if (correct == votes.size()) return ClueType::obvious;
  if (correct == 0) return ClueType::obscure;
  return ClueType::just_right;
}

GameOver is_game_over(const GameState& state) {
  GameOver g;
  const int top = state.scores.empty() ? 0 : *std::max_element(state.scores.begin(), state.scores.end());
  g.over = top >= kWinningScore || state.deck_exhausted;
  if (g.over) {
    for (int i = 0; i < state.players(); ++i) {
      if (state.scores[i] == top) g.winners.push_back(i);
    }
  }
  return g;
}

std::map<int, ComponentScores> component_scores(const RoundRecord& record) {
  std::map<int, ComponentScores> out;
  for (const auto& [seat, card] : record.played_cards) out[seat];
  out[record.storyteller].storytelling = record.per_player_delta.count(record.storyteller)
                                             ? record.per_player_delta.at(record.storyteller)
                                             : 0;
  std::map<int, int> owner;
  for (const auto& [seat, card] : record.played_cards) owner[card] = seat;
  for (const auto& [voter, card] : record.votes) {
    if (card == record.storyteller_card) {
      if (record.clue_type == ClueType::just_right) out[voter].guessing += 3;
    } else if (owner.count(card)) {
      out[owner[card]].distraction += 1;
    }
  }
  return out;
}

std::optional<double> decode_rate(std::span<const RoundRecord> rounds, int storyteller, int guesser) {
  int sc = 0;
  int cg = 0;
  for (const auto& r : rounds) {
    if (r.storyteller != storyteller) continue;
    ++sc;
    auto it = r.votes.find(guesser);
    if (it != r.votes.end() && it->second == r.storyteller_card) ++cg;
  }
  if (sc == 0) return std::nullopt;
  return static_cast<double>(cg) / sc;
}

std::optional<double> lift(std::span<const RoundRecord> rounds, int from, int to, int n) {
  if (n < 3) throw std::invalid_argument("lift needs at least 3 players");
  auto direct = decode_rate(rounds, from, to);
  if (!direct) return std::nullopt;
  double others = 0.0;
  for (int k = 0; k < n; ++k) {
    if (k == from || k == to) continue;
    others += *decode_rate(rounds, from, k);
  }
  return *direct - others / (n - 2);
}

std::optional<double> spark_coefficient(std::span<const RoundRecord> rounds, int i, int j, int n) {
  auto a = lift(rounds, i, j, n);
  auto b = lift(rounds, j, i, n);
  if (!a || !b) return std::nullopt;
  return (*a + *b) / 2.0;
}

stats::Table2x2 spark_table(std::span<const RoundRecord> rounds, int i, int j) {
  stats::Table2x2 t{};
  for (const auto& r : rounds) {
    int partner = -1;
    if (r.storyteller == i) partner = j;
    else if (r.storyteller == j) partner = i;
    else continue;
    for (const auto& [voter, card] : r.votes) {
      const int row = voter == partner ? 0 : 1;
      const int col = card == r.storyteller_card ? 0 : 1;
      ++t[row][col];
    }
  }
  return t;
}

stats::TestResult spark_significance(std::span<const RoundRecord> rounds, int i, int j) {
  const bool any = std::any_of(rounds.begin(), rounds.end(),
                               [&](const RoundRecord& r) { return r.storyteller == i; });
  if (!any) throw std::invalid_argument("spark significance needs a storyteller round for the first player");
  const auto t = spark_table(rounds, i, j);
  if (t[0][0] + t[0][1] + t[1][0] + t[1][1] == 0) {
    return {0.0, 1.0, "chi2_2x2", true, "empty table"};
  }
  return stats::chi2_2x2(t);
}

std::optional<double> storytelling_clue_rate(std::span<const RoundRecord> rounds, int player,
                                             const std::vector<std::string>& shared_titles) {
  std::set<std::string> titles;
  for (const auto& t : shared_titles) titles.insert(normalize_whitespace(t));
  int total = 0;
  int hits = 0;
  for (const auto& r : rounds) {
    if (r.storyteller != player) continue;
    if (!r.story_refs_requested) {
      throw std::logic_error("storytelling clue rate needs rounds played with story references requested");
    }
    ++total;
    const bool hit = std::any_of(r.referenced_story_names.begin(), r.referenced_story_names.end(),
                                 [&](const std::string& s) { return titles.count(normalize_whitespace(s)) > 0; });
    hits += hit;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(hits) / total;
}

std::optional<double> awareness_score(std::span<const RoundRecord> rounds, int player, Agent& classifier) {
  const std::string prefix = std::to_string(player) + "/";
  const PhaseSchema schema = make_schema(SchemaKind::awareness);
  int total = 0;
  int aware = 0;
  for (const auto& r : rounds) {
    std::string trace;
    bool seen = false;
    for (const auto& [key, text] : r.thinking_traces) {
      if (key.rfind(prefix, 0) != 0) continue;
      seen = true;
      if (!text.empty()) trace += (trace.empty() ? "" : "\n") + text;
    }
    if (!seen) continue;
    ++total;
    if (trace.empty()) continue;
    Observation obs;
    obs.schema = schema;
    obs.user_prompt = prompts::render("va_awareness_judge",
                                      {{"player_id", std::to_string(player + 1)}, {"trace", trace}});
    obs.facts = AwarenessFacts{player + 1, trace};
    const auto reply = classifier.act(obs);
    const bool yes = reply.output.text("aware") == "yes";
    const bool named = reply.output.has("partner") &&
                       to_lower(reply.output.text("partner")).find("player") != std::string::npos &&
                       to_lower(reply.output.text("partner")) != to_lower(seat_name(player));
    aware += yes && named;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(aware) / total;
}

std::string generate_card_caption(const std::vector<std::string>& entities, const std::string& style) {
  if (entities.size() != 4) {
    throw std::invalid_argument("wrong arity: a caption takes 4 entities, got " + std::to_string(entities.size()));
  }
  if (trim(style).empty()) throw std::invalid_argument("caption style is empty");
  std::string list;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (trim(entities[i]).empty()) throw std::invalid_argument("empty caption entity");
    if (i > 0) list += i + 1 == entities.size() ? ", and " : ", ";
    list += entities[i];
  }
  return "Please create a dreamy, surreal painting that incorporates " + list + " with a background of " + style;
}

std::string render_recap(std::span<const RoundRecord> rounds, int k) {
  if (k <= 0 || rounds.empty()) return "";
  const std::size_t from = rounds.size() > static_cast<std::size_t>(k) ? rounds.size() - k : 0;
  std::ostringstream out;
  for (std::size_t idx = from; idx < rounds.size(); ++idx) {
    const auto& r = rounds[idx];
    std::map<int, int> owner;
    for (const auto& [seat, card] : r.played_cards) owner[card] = seat;
    out << "Round " << r.round << ": " << seat_name(r.storyteller) << " was the storyteller and gave the clue '"
        << r.clue << "'. The clue was " << (r.clue_type == ClueType::just_right ? "just right" : to_string(r.clue_type))
        << ".\n";
    for (const auto& [voter, card] : r.votes) {
      out << "  " << seat_name(voter) << " voted for " << seat_name(owner[card]) << "'s card"
          << (card == r.storyteller_card ? " (the storyteller's card)" : "") << ".\n";
    }
    out << "  Points:";
    for (const auto& [seat, pts] : r.per_player_delta) out << " " << seat_name(seat) << " +" << pts << ";";
    out << "\n";
  }
  return out.str();
}

namespace {

std::string scores_display(const GameState& s) {
  std::string out;
  for (int i = 0; i < s.players(); ++i) {
    if (i) out += ", ";
    out += seat_name(i) + ": " + std::to_string(s.scores[i]);
  }
  return out;
}

std::string cards_display(const std::vector<Card>& cards, const std::string& kind,
                          std::vector<std::string>& images) {
  std::string out;
  for (std::size_t i = 0; i < cards.size(); ++i) {
    if (i) out += "\n\n";
    out += prompts::render("va_card_block", {{"kind", kind}, {"label", std::to_string(i)}, {"image_ref", cards[i].image_ref}});
    images.push_back(cards[i].image_ref);
  }
  return out;
}

struct Seat {
  Agent* agent;
  int index;
  const RoundContext& ctx;
  const GameState& state;

  std::string system_prompt() const {
    if (index < static_cast<int>(ctx.system_prompts.size()) && !ctx.system_prompts[index].empty()) {
      return ctx.system_prompts[index];
    }
    return prompts::render("va_system_default", {{"player_id", std::to_string(index + 1)}});
  }

  std::string with_memory(std::string user) const {
    const std::string recap = render_recap(ctx.history, agent->spec().memory_window_k);
    if (recap.empty()) return user;
    return prompts::render("va_memory_recap", {{"recap", recap}}) + user;
  }
};

void emit(const RoundContext& ctx, const std::string& phase, int round, int seat, const Observation& obs,
          const AgentReply& reply) {
  if (!ctx.on_event) return;
  ctx.on_event({{"type", "phase"},
                {"phase", phase},
                {"round", round},
                {"seat", seat},
                {"user_prompt", obs.user_prompt},
                {"images", obs.images},
                {"raw", reply.raw_text},
                {"parsed", to_json(reply.output)}});
}

void keep_trace(RoundRecord& rec, int seat, const std::string& phase, const AgentReply& reply) {
  if (reply.output.thinking_trace) rec.thinking_traces[std::to_string(seat) + "/" + phase] = *reply.output.thinking_trace;
}

int checked_label(const AgentReply& reply, const char* field, std::size_t count, const Agent& agent) {
  const auto v = reply.output.integer(field);
  if (v < 0 || v >= static_cast<std::int64_t>(count)) {
    throw AgentError("agent " + agent.spec().agent_id + " chose label " + std::to_string(v) + " out of range");
  }
  return static_cast<int>(v);
}

}  // namespace

std::pair<GameState, RoundRecord> run_round(GameState state, std::span<Agent* const> agents,
                                            const RoundContext& ctx) {
  const int n = state.players();
  if (static_cast<int>(agents.size()) != n) throw std::invalid_argument("agent count does not match seats");
  if (state.phase != Phase::storytelling) throw std::logic_error("round must start in the storytelling phase");

  RoundRecord rec;
  rec.round = state.round;
  rec.storyteller = state.storyteller_idx;
  rec.story_refs_requested = ctx.story_refs;
  const int st = state.storyteller_idx;
  auto seat = [&](int i) { return Seat{agents[i], i, ctx, state}; };
  auto wrap = [&](const AgentError& e, int i, const char* phase) {
    return AgentError(seat_name(i) + " failed in " + phase + ": " + e.what());
  };

  std::vector<Card> played(n);

  // Storytelling.
  {
    auto& hand = state.hands[st];
    Observation obs;
    SchemaOptions opts;
    opts.option_count = static_cast<int>(hand.size());
    opts.story_refs = ctx.story_refs;
    obs.schema = make_schema(SchemaKind::storyteller, opts);
    obs.system_prompt = seat(st).system_prompt();
    std::string user = prompts::render("va_user_storytelling",
                                       {{"round_number", std::to_string(state.round)},
                                        {"scores_display", scores_display(state)},
                                        {"hand_display", cards_display(hand, "Card", obs.images)}});
    if (ctx.story_refs) user += prompts::render("va_user_storytelling_story_refs", {});
    obs.user_prompt = seat(st).with_memory(std::move(user));
    StorytellerFacts facts{st + 1, hand, {}};
    if (st < static_cast<int>(ctx.story_titles.size())) facts.story_titles = ctx.story_titles[st];
    obs.facts = facts;
    AgentReply reply;
    try {
      reply = agents[st]->act(obs);
    } catch (const AgentError& e) {
      throw wrap(e, st, "storytelling");
    }
    const int label = checked_label(reply, "card", hand.size(), *agents[st]);
    rec.clue = trim(reply.output.text("clue"));
    if (rec.clue.empty()) throw AgentError(seat_name(st) + " gave an empty clue");
    rec.storyteller_card = hand[label].card_id;
    rec.played_cards[st] = hand[label].card_id;
    played[st] = hand[label];
    if (ctx.story_refs && reply.output.has("referenced_stories")) {
      for (const auto& t : reply.output.list("referenced_stories")) {
        if (to_lower(trim(t)) != "none" && !trim(t).empty()) rec.referenced_story_names.push_back(trim(t));
      }
    }
    rec.warnings.insert(rec.warnings.end(), reply.output.warnings.begin(), reply.output.warnings.end());
    keep_trace(rec, st, "storytelling", reply);
    emit(ctx, "storytelling", state.round, st, obs, reply);
    hand.erase(hand.begin() + label);
    state.clue = rec.clue;
    state.storyteller_card = rec.storyteller_card;
    state.phase = Phase::card_play;
  }

  // Card play; every non-storyteller acts on its own hand and the public clue.
  for (int off = 1; off < n; ++off) {
    const int p = (st + off) % n;
    auto& hand = state.hands[p];
    if (hand.empty()) throw std::logic_error("empty hand in card play");
    Observation obs;
    obs.schema = make_schema(SchemaKind::card_play, {static_cast<int>(hand.size()), false});
    obs.system_prompt = seat(p).system_prompt();
    obs.user_prompt = seat(p).with_memory(prompts::render(
        "va_user_card_play", {{"round_number", std::to_string(state.round)},
                              {"scores_display", scores_display(state)},
                              {"storyteller_player_id", std::to_string(st + 1)},
                              {"clue", rec.clue},
                              {"hand_display", cards_display(hand, "Card", obs.images)}}));
    obs.facts = CardPlayFacts{p + 1, st + 1, rec.clue, hand};
    AgentReply reply;
    try {
      reply = agents[p]->act(obs);
    } catch (const AgentError& e) {
      throw wrap(e, p, "card play");
    }
    const int label = checked_label(reply, "card", hand.size(), *agents[p]);
    played[p] = hand[label];
    rec.played_cards[p] = hand[label].card_id;
    keep_trace(rec, p, "card_play", reply);
    emit(ctx, "card_play", state.round, p, obs, reply);
    hand.erase(hand.begin() + label);
  }
  state.phase = Phase::voting;

  // Voting deck, shuffled with the game's generator.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  state.rng.shuffle(std::span<int>(order));
  state.voting_deck.clear();
  for (int label = 0; label < n; ++label) {
    state.voting_deck.push_back({label, rec.played_cards[order[label]], order[label]});
  }
  rec.voting_deck = state.voting_deck;

  std::vector<Card> options;
  for (const auto& e : state.voting_deck) options.push_back(played[e.owner]);

  for (int off = 1; off < n; ++off) {
    const int p = (st + off) % n;
    int own = 0;
    for (const auto& e : state.voting_deck) {
      if (e.owner == p) own = e.label;
    }
    Observation obs;
    obs.schema = make_schema(SchemaKind::vote, {n, false});
    obs.system_prompt = seat(p).system_prompt();
    obs.user_prompt = seat(p).with_memory(prompts::render(
        "va_user_voting", {{"round_number", std::to_string(state.round)},
                           {"scores_display", scores_display(state)},
                           {"storyteller_player_id", std::to_string(st + 1)},
                           {"clue", rec.clue},
                           {"options_display", cards_display(options, "Option", obs.images)},
                           {"self_played_card_label", std::to_string(own)}}));
    obs.facts = VoteFacts{p + 1, st + 1, rec.clue, options, own};
    int label = -1;
    for (int attempt = 0; attempt < 2 && label < 0; ++attempt) {
      AgentReply reply;
      try {
        reply = agents[p]->act(obs);
      } catch (const AgentError& e) {
        throw wrap(e, p, "voting");
      }
      const int v = checked_label(reply, "vote", options.size(), *agents[p]);
      keep_trace(rec, p, "vote", reply);
      emit(ctx, "vote", state.round, p, obs, reply);
      if (v != own) {
        label = v;
      } else {
        obs.user_prompt += "\n\nOption " + std::to_string(own) +
                           " is your own card. Vote for a different card.";
      }
    }
    if (label < 0) {
      label = own == 0 ? 1 : 0;
      rec.warnings.push_back(seat_name(p) + " voted for its own card twice; defaulted to option " +
                             std::to_string(label));
    }
    state.votes[p] = label;
    rec.votes[p] = state.voting_deck[label].card_id;
  }

  // Scoring.
  state.phase = Phase::scoring;
  rec.per_player_delta = score_round(st, rec.storyteller_card, rec.played_cards, rec.votes);
  rec.clue_type = classify_clue(rec.votes, rec.storyteller_card);
  for (const auto& [p, d] : rec.per_player_delta) state.scores[p] += d;

  // Replenish, one card per seat in turn order.
  bool progress = true;
  while (progress) {
    progress = false;
    for (int off = 0; off < n; ++off) {
      const int p = (st + off) % n;
      if (static_cast<int>(state.hands[p].size()) < kHandSize && !state.deck.empty()) {
        state.hands[p].push_back(state.deck.front());
        state.deck.erase(state.deck.begin());
        progress = true;
      }
    }
  }
  for (const auto& h : state.hands) {
    if (static_cast<int>(h.size()) < kHandSize) state.deck_exhausted = true;
  }

  if (ctx.on_event) ctx.on_event({{"type", "round"}, {"record", to_json(rec)}});

  state.round += 1;
  state.storyteller_idx = (st + 1) % n;
  state.phase = Phase::storytelling;
  state.clue.reset();
  state.storyteller_card.reset();
  state.voting_deck.clear();
  state.votes.clear();
  return {std::move(state), std::move(rec)};
}

}  // namespace arena::va
