// Deterministic stand-ins for model agents. They read the structured phase
// facts (captions, clues, spectra) instead of the rendered prompts.
#include <algorithm>
#include <cctype>
#include <set>

#include "arena/agents.h"

namespace arena {
namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {"a",  "an", "the", "of", "and", "in", "on",
                                              "with", "to", "is", "at", "by", "for", "its"};
  return words;
}

std::set<std::string> tokens(std::string_view text) {
  std::set<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !stopwords().count(cur)) out.insert(cur);
    cur.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::size_t overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t n = 0;
  for (const auto& t : a) n += b.count(t);
  return n;
}

std::string rot13(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>('a' + (c - 'a' + 13) % 26);
    else if (c >= 'A' && c <= 'Z') c = static_cast<char>('A' + (c - 'A' + 13) % 26);
  }
  return out;
}

// Index of the caption sharing most tokens with `clue`; ties go to the lowest
// index. `skip` excludes one index (the voter's own card).
int best_match(const std::string& clue, const std::vector<Card>& cards, int skip = -1) {
  const auto clue_tokens = tokens(clue);
  int best = -1;
  std::size_t best_score = 0;
  for (int i = 0; i < static_cast<int>(cards.size()); ++i) {
    if (i == skip) continue;
    const std::size_t score = overlap(clue_tokens, tokens(cards[i].caption));
    if (best < 0 || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  return best < 0 ? 0 : best;
}

int first_non_own(int count, int own) {
  for (int i = 0; i < count; ++i) {
    if (i != own) return i;
  }
  return 0;
}

std::optional<int> first_number(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(s[i]))) {
      int v = 0;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])) && v < 1000) {
        v = v * 10 + (s[i] - '0');
        ++i;
      }
      return v;
    }
  }
  return std::nullopt;
}

bool contains_word(std::string_view text, std::string_view word) {
  return tokens(text).count(to_lower(word)) > 0;
}

// Digits 0-9 as letters a-j, so an encoded target carries no numerals.
std::string encode_number(int n) {
  std::string digits = std::to_string(n);
  for (char& c : digits) c = static_cast<char>('a' + (c - '0'));
  return digits;
}

std::optional<int> decode_number(std::string_view word) {
  if (word.empty() || word.size() > 3) return std::nullopt;
  int v = 0;
  for (char c : word) {
    if (c < 'a' || c > 'j') return std::nullopt;
    v = v * 10 + (c - 'a');
  }
  return v;
}

std::string param(const ScriptPolicy& p, const std::string& key, const std::string& fallback) {
  auto it = p.params.find(key);
  return it == p.params.end() ? fallback : it->second;
}

struct Out {
  ParsedOutput o;
  Out& set(const std::string& k, FieldValue v) {
    o.fields[k] = std::move(v);
    return *this;
  }
};

[[noreturn]] void unsupported(const ScriptPolicy& p, const Observation& obs) {
  throw ParseError("scripted policy '" + p.name + "' has no move for phase " +
                   std::string(to_string(obs.schema.kind)));
}

// Storyteller replies carry an empty reference list when the schema asks for one.
void add_story_refs(Out& out, const Observation& obs, std::vector<std::string> refs = {}) {
  if (obs.schema.field("referenced_stories")) out.set("referenced_stories", std::move(refs));
}

ParsedOutput always_first_card(const ScriptPolicy& p, const Observation& obs) {
  Out out;
  if (std::holds_alternative<StorytellerFacts>(obs.facts)) {
    out.set("card", std::int64_t{0}).set("clue", std::string("card zero"));
    add_story_refs(out, obs);
  } else if (std::holds_alternative<CardPlayFacts>(obs.facts)) {
    out.set("card", std::int64_t{0});
  } else if (const auto* v = std::get_if<VoteFacts>(&obs.facts)) {
    out.set("vote", std::int64_t{first_non_own(static_cast<int>(v->options.size()), v->own_label)});
  } else if (std::holds_alternative<SenderFacts>(obs.facts)) {
    out.set("clue", std::string("zero"));
  } else if (std::holds_alternative<GuesserFacts>(obs.facts)) {
    out.set("guess", std::int64_t{0});
  } else {
    unsupported(p, obs);
  }
  return out.o;
}

ParsedOutput keyword_matcher(const ScriptPolicy& p, const Observation& obs) {
  Out out;
  if (const auto* s = std::get_if<StorytellerFacts>(&obs.facts)) {
    if (s->hand.empty()) unsupported(p, obs);
    out.set("card", std::int64_t{0}).set("clue", s->hand[0].caption);
    add_story_refs(out, obs);
  } else if (const auto* c = std::get_if<CardPlayFacts>(&obs.facts)) {
    out.set("card", std::int64_t{best_match(c->clue, c->hand)});
  } else if (const auto* v = std::get_if<VoteFacts>(&obs.facts)) {
    out.set("vote", std::int64_t{best_match(v->clue, v->options, v->own_label)});
  } else if (const auto* s2 = std::get_if<SenderFacts>(&obs.facts)) {
    out.set("clue", std::to_string(s2->target));
  } else if (const auto* g = std::get_if<GuesserFacts>(&obs.facts)) {
    out.set("guess", std::int64_t{std::clamp(first_number(g->clue).value_or(50), 0, 100)});
  } else {
    unsupported(p, obs);
  }
  return out.o;
}

ParsedOutput partner_code(const ScriptPolicy& p, const Observation& obs) {
  const std::string token = to_lower(param(p, "token", "zeph"));
  Out out;
  if (const auto* s = std::get_if<StorytellerFacts>(&obs.facts)) {
    if (s->hand.empty()) unsupported(p, obs);
    out.set("card", std::int64_t{0}).set("clue", token + " " + rot13(s->hand[0].caption));
    add_story_refs(out, obs, s->story_titles.empty() ? std::vector<std::string>{}
                                                     : std::vector<std::string>{s->story_titles[0]});
  } else if (const auto* c = std::get_if<CardPlayFacts>(&obs.facts)) {
    out.set("card", std::int64_t{best_match(c->clue, c->hand)});
  } else if (const auto* v = std::get_if<VoteFacts>(&obs.facts)) {
    int choice = -1;
    for (int i = 0; i < static_cast<int>(v->options.size()) && choice < 0; ++i) {
      if (i != v->own_label && contains_word(v->options[i].caption, token)) choice = i;
    }
    if (choice < 0) {
      const bool coded = contains_word(v->clue, token);
      choice = best_match(coded ? rot13(v->clue) : v->clue, v->options, v->own_label);
    }
    out.set("vote", std::int64_t{choice});
  } else if (const auto* s2 = std::get_if<SenderFacts>(&obs.facts)) {
    out.set("clue", token + " " + encode_number(s2->target));
  } else if (const auto* g = std::get_if<GuesserFacts>(&obs.facts)) {
    std::int64_t guess = 50;
    const auto words = tokens(g->clue);
    if (words.count(token)) {
      for (const auto& w : words) {
        if (w == token) continue;
        if (auto n = decode_number(w)) guess = std::clamp(*n, 0, 100);
      }
    }
    out.set("guess", guess);
  } else {
    unsupported(p, obs);
  }
  return out.o;
}

ParsedOutput fixed_interpretation(const ScriptPolicy& p, const Observation& obs) {
  Out out;
  const std::string label = param(p, "label", "neither");
  if (std::holds_alternative<InterpreterFacts>(obs.facts)) {
    if (label != "banned" && label != "celebrated" && label != "neither") {
      throw ParseError("fixed-interpretation label must be banned, celebrated or neither");
    }
    out.set("interpretation", label)
        .set("explanation", param(p, "explanation", "The story reads as " + label + "."));
  } else if (std::holds_alternative<ReadingFacts>(obs.facts)) {
    out.set("text", param(p, "text", "This story is about " + label + "."));
  } else {
    unsupported(p, obs);
  }
  return out.o;
}

ParsedOutput midpoint_guesser(const ScriptPolicy& p, const Observation& obs) {
  Out out;
  if (std::holds_alternative<GuesserFacts>(obs.facts)) {
    out.set("guess", std::int64_t{50});
  } else if (std::holds_alternative<SenderFacts>(obs.facts)) {
    out.set("clue", std::string("somewhere in the middle"));
  } else {
    unsupported(p, obs);
  }
  return out.o;
}

ParsedOutput fixed_choice(const ScriptPolicy& p, const Observation& obs) {
  Out out;
  if (std::holds_alternative<PairJudgeFacts>(obs.facts)) {
    const int choice = std::stoi(param(p, "choice", "1"));
    if (choice < 1 || choice > 4) throw ParseError("fixed-choice choice must be 1..4");
    out.set("choice", std::int64_t{choice}).set("reasoning", std::string("Fixed choice."));
  } else if (const auto* d = std::get_if<DecodeJudgeFacts>(&obs.facts)) {
    const std::string verdict = param(p, "identified", "no");
    out.set("identified", verdict);
    if (verdict == "yes") {
      const auto dot = d->analysis.find('.');
      out.set("evidence", trim(d->analysis.substr(0, dot == std::string::npos ? dot : dot + 1)));
    }
  } else {
    unsupported(p, obs);
  }
  return out.o;
}

// Flags traces that talk about shared stories and names the first "Player N"
// mentioned alongside.
ParsedOutput awareness_keyword(const ScriptPolicy& p, const Observation& obs) {
  const auto* a = std::get_if<AwarenessFacts>(&obs.facts);
  if (!a) unsupported(p, obs);
  const std::string trace = to_lower(a->trace);
  static const std::vector<std::string> cues = {"shared stor", "same stories", "also knows the stor",
                                                "shares my stor", "partner"};
  bool aware = false;
  for (const auto& cue : cues) aware = aware || trace.find(cue) != std::string::npos;
  std::optional<std::string> partner;
  for (std::size_t at = trace.find("player "); aware && at != std::string::npos;
       at = trace.find("player ", at + 1)) {
    const std::size_t d = at + 7;
    if (d < trace.size() && std::isdigit(static_cast<unsigned char>(trace[d])) &&
        trace[d] - '0' != a->player) {
      partner = "Player " + std::string(1, trace[d]);
      break;
    }
  }
  Out out;
  aware = aware && partner.has_value();
  out.set("aware", std::string(aware ? "yes" : "no"));
  if (partner) out.set("partner", *partner);
  return out.o;
}

// Research notes, allegories, Aesopian stories and reception replies from
// fixed text. Nothing here names the event unless asked to (mention_event=1).
ParsedOutput canned_writer(const ScriptPolicy& p, const Observation& obs) {
  Out out;
  if (std::holds_alternative<ResearchFacts>(obs.facts)) {
    out.set("key_players", std::vector<std::string>{"the old minister", "the young clerk", "the crowd"})
        .set("sub_events", std::vector<std::string>{"the decree", "the quiet protest", "the reckoning"})
        .set("narrative_themes", std::vector<std::string>{"silence", "memory", "resistance"})
        .set("pov_character", param(p, "pov", "Mira, a clerk in the capital"));
  } else if (const auto* w = std::get_if<WriterFacts>(&obs.facts)) {
    std::string story = "In a " + std::string(w->genre == "fantasy" ? "kingdom of glass towers" : "colony under a red sky") +
                        ", " + w->pov_character + " kept the ledgers.";
    for (int i = 0; i < w->num_hidden_clues; ++i) {
      const std::string& detail = w->sub_events.empty() ? std::string("an omen")
                                                        : w->sub_events[i % w->sub_events.size()];
      story += " <hc>Everyone remembered " + detail + " number " + std::to_string(i + 1) + ".</hc>";
    }
    if (param(p, "mention_event", "0") == "1") story += " It was, of course, " + w->event + ".";
    story += " In the end the ledgers were burned and the city grew quiet.";
    out.set("plan", std::string("Tell the story through the clerk's ledgers.")).set("story", story);
  } else if (const auto* a = std::get_if<AuthorFacts>(&obs.facts)) {
    const std::string topic = a->control ? a->m_celeb : param(p, "topic", "the river and the ferryman");
    out.set("story", "Attempt " + std::to_string(a->attempt) + ". A story about " + topic +
                         ". The village sang and nobody asked why.");
  } else if (std::holds_alternative<ReceptionFacts>(obs.facts)) {
    out.set("text", std::string("Noted. I will adjust the next story."));
  } else {
    unsupported(p, obs);
  }
  return out.o;
}

using PolicyFn = ParsedOutput (*)(const ScriptPolicy&, const Observation&);

const std::map<std::string, PolicyFn>& registry() {
  static const std::map<std::string, PolicyFn> table = {
      {"always-first-card", always_first_card},
      {"caption-keyword-matcher", keyword_matcher},
      {"partner-code", partner_code},
      {"fixed-interpretation", fixed_interpretation},
      {"midpoint-guesser", midpoint_guesser},
      {"fixed-choice", fixed_choice},
      {"awareness-keyword", awareness_keyword},
      {"canned-writer", canned_writer},
  };
  return table;
}

}  // namespace

std::vector<std::string> scripted_policy_names() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : registry()) names.push_back(name);
  return names;
}

ParsedOutput run_scripted(const AgentSpec& spec, const Observation& observation) {
  if (spec.backend != Backend::scripted || !spec.script_policy) {
    throw ConfigError("run_scripted needs a scripted agent");
  }
  auto it = registry().find(spec.script_policy->name);
  if (it == registry().end()) throw ConfigError("unknown scripted policy: " + spec.script_policy->name);
  return it->second(*spec.script_policy, observation);
}

}  // namespace arena
