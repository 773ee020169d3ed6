#include "arena/allegories.h"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace arena::allegories {

using nlohmann::json;

std::string_view to_string(Genre g) { return g == Genre::fantasy ? "fantasy" : "science fiction"; }

std::string_view to_string(Persona p) {
  switch (p) {
    case Persona::critic: return "critic";
    case Persona::deep_reader: return "deep_reader";
    case Persona::historian: return "historian";
  }
  return "critic";
}

std::string_view to_string(Information i) {
  switch (i) {
    case Information::none: return "default";
    case Information::author_name: return "author_name";
    case Information::reader_name: return "reader_name";
  }
  return "default";
}

Genre genre_from_string(std::string_view s) {
  const std::string v = to_lower(trim(s));
  if (v == "sf" || v == "science_fiction" || v == "science fiction" || v == "scifi") return Genre::science_fiction;
  if (v == "fantasy") return Genre::fantasy;
  throw ConfigError("unknown genre: " + std::string(s));
}

Persona persona_from_string(std::string_view s) {
  if (s == "critic") return Persona::critic;
  if (s == "deep_reader") return Persona::deep_reader;
  if (s == "historian") return Persona::historian;
  throw ConfigError("unknown persona: " + std::string(s));
}

Information information_from_string(std::string_view s) {
  if (s == "default") return Information::none;
  if (s == "author_name") return Information::author_name;
  if (s == "reader_name") return Information::reader_name;
  throw ConfigError("unknown information condition: " + std::string(s));
}

HistoricalEvent parse_event(std::string_view text) {
  HistoricalEvent e;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) break;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ConfigError("event header line without a colon: " + line);
    const std::string key = to_lower(trim(line.substr(0, colon)));
    const std::string value = trim(line.substr(colon + 1));
    if (key == "name") e.name = value;
    else if (key == "aliases") e.aliases = split_commas(value);
    else if (key == "culture") e.culture_tag = value;
    else throw ConfigError("unknown event header: " + key);
  }
  std::ostringstream rest;
  rest << in.rdbuf();
  e.wiki_text = trim(rest.str());
  if (e.name.empty()) throw ConfigError("event without a name");
  if (e.wiki_text.empty()) throw ConfigError("event '" + e.name + "' has no text");
  return e;
}

std::vector<HistoricalEvent> load_events_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<HistoricalEvent> events;
  std::set<std::string> names;
  for (const auto& f : files) {
    events.push_back(parse_event(read_file(f)));
    if (!names.insert(events.back().name).second) throw ConfigError("duplicate event: " + events.back().name);
  }
  if (events.empty()) throw ConfigError("no events in " + dir.string());
  return events;
}

namespace {

json notes_json(const ResearchNotes& n) {
  return {{"key_players", n.key_players},
          {"sub_events", n.sub_events},
          {"narrative_themes", n.narrative_themes},
          {"pov_character", n.pov_character}};
}

ResearchNotes notes_from(const json& j) {
  return {j.at("key_players").get<std::vector<std::string>>(), j.at("sub_events").get<std::vector<std::string>>(),
          j.at("narrative_themes").get<std::vector<std::string>>(), j.at("pov_character").get<std::string>()};
}

bool is_word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

// First sentence of `text` containing byte offset `at`.
std::string sentence_around(std::string_view text, std::size_t at) {
  std::size_t begin = at;
  while (begin > 0 && text[begin - 1] != '.' && text[begin - 1] != '\n' && text[begin - 1] != '!' &&
         text[begin - 1] != '?') {
    --begin;
  }
  std::size_t end = at;
  while (end < text.size() && text[end] != '.' && text[end] != '\n' && text[end] != '!' && text[end] != '?') ++end;
  if (end < text.size() && text[end] != '\n') ++end;
  return trim(text.substr(begin, end - begin));
}

}  // namespace

json to_json(const Allegory& a) {
  json clues = json::array();
  for (const auto& c : a.hidden_clues) clues.push_back({c.begin, c.end});
  json j = {{"story_id", a.story_id},
            {"event", a.event_name},
            {"genre", a.genre == Genre::fantasy ? "fantasy" : "science_fiction"},
            {"hidden_clues", clues},
            {"requested_clues", a.requested_clues},
            {"writer_model", a.writer_model},
            {"notes", notes_json(a.notes)},
            {"compliant", a.compliant},
            {"compliance_warnings", a.compliance_warnings},
            {"story_text", a.story_text}};
  if (a.plan_text) j["plan"] = *a.plan_text;
  return j;
}

Allegory allegory_from_json(const json& j) {
  Allegory a;
  a.story_id = j.at("story_id").get<std::string>();
  a.event_name = j.at("event").get<std::string>();
  a.genre = genre_from_string(j.at("genre").get<std::string>());
  for (const auto& c : j.at("hidden_clues")) a.hidden_clues.push_back({c.at(0).get<std::size_t>(), c.at(1).get<std::size_t>()});
  a.requested_clues = j.value("requested_clues", 0);
  a.writer_model = j.value("writer_model", "");
  a.notes = notes_from(j.at("notes"));
  a.compliant = j.value("compliant", true);
  a.compliance_warnings = j.value("compliance_warnings", std::vector<std::string>{});
  a.story_text = j.value("story_text", "");
  if (j.contains("plan")) a.plan_text = j["plan"].get<std::string>();
  return a;
}

void write_allegory(const std::filesystem::path& dir, const Allegory& a) {
  if (a.story_id.empty()) throw ConfigError("allegory without a story id");
  json meta = to_json(a);
  meta.erase("story_text");
  write_file(dir / (a.story_id + ".txt"), "---\n" + meta.dump(2) + "\n---\n" + a.story_text + "\n");
}

Allegory read_allegory(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (text.rfind("---\n", 0) != 0) throw ConfigError(path.string() + ": missing metadata block");
  const auto close = text.find("\n---\n", 4);
  if (close == std::string::npos) throw ConfigError(path.string() + ": unterminated metadata block");
  json meta;
  try {
    meta = json::parse(text.substr(4, close - 4));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  std::string story = text.substr(close + 5);
  if (!story.empty() && story.back() == '\n') story.pop_back();
  meta["story_text"] = story;
  return allegory_from_json(meta);
}

std::vector<Allegory> load_corpus(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Allegory> out;
  for (const auto& f : files) out.push_back(read_allegory(f));
  return out;
}

ResearchNotes run_research(const HistoricalEvent& event, Agent& agent) {
  Observation obs;
  obs.schema = make_schema(SchemaKind::research);
  obs.user_prompt = prompts::render("allegory_researcher", {{"event", event.name}, {"event_details", event.wiki_text}});
  obs.facts = ResearchFacts{event.name, event.wiki_text};
  const auto reply = act_validated(agent, obs);
  ResearchNotes notes{reply.output.list("key_players"), reply.output.list("sub_events"),
                      reply.output.list("narrative_themes"), trim(reply.output.text("pov_character"))};
  if (notes.pov_character.empty()) throw AgentError("research for '" + event.name + "' has an empty PoV character");
  return notes;
}

std::pair<std::string, std::vector<HiddenClue>> strip_hidden_clues(std::string_view story) {
  std::string out;
  std::vector<HiddenClue> clues;
  const std::string lower = to_lower(story);
  std::size_t pos = 0;
  while (pos < story.size()) {
    const auto open = lower.find("<hc>", pos);
    if (open == std::string::npos) break;
    out.append(story.substr(pos, open - pos));
    const auto close = lower.find("</hc>", open + 4);
    const std::size_t body_end = close == std::string::npos ? story.size() : close;
    HiddenClue c;
    c.begin = out.size();
    out.append(story.substr(open + 4, body_end - open - 4));
    c.end = out.size();
    clues.push_back(c);
    pos = close == std::string::npos ? story.size() : close + 5;
  }
  if (pos < story.size()) out.append(story.substr(pos));
  // Stray closing tags without an opener are dropped as well.
  for (auto at = to_lower(out).find("</hc>"); at != std::string::npos; at = to_lower(out).find("</hc>")) {
    out.erase(at, 5);
    for (auto& c : clues) {
      if (c.begin > at) c.begin -= 5;
      if (c.end > at) c.end -= 5;
    }
  }
  return {out, clues};
}

std::optional<std::string> alias_match(std::string_view text, const HistoricalEvent& event) {
  const std::string hay = to_lower(normalize_whitespace(text));
  std::vector<std::string> needles = {event.name};
  needles.insert(needles.end(), event.aliases.begin(), event.aliases.end());
  for (const auto& raw : needles) {
    const std::string needle = to_lower(normalize_whitespace(raw));
    if (needle.empty()) continue;
    for (auto at = hay.find(needle); at != std::string::npos; at = hay.find(needle, at + 1)) {
      const bool left = at == 0 || !is_word_char(static_cast<unsigned char>(hay[at - 1])) ||
                        !is_word_char(static_cast<unsigned char>(needle.front()));
      const std::size_t end = at + needle.size();
      const bool right = end == hay.size() || !is_word_char(static_cast<unsigned char>(hay[end])) ||
                         !is_word_char(static_cast<unsigned char>(needle.back()));
      if (left && right) return raw;
    }
  }
  return std::nullopt;
}

Allegory run_writer(const ResearchNotes& notes, const HistoricalEvent& event, Genre genre, int num_hidden_clues,
                    Agent& agent, const std::string& story_id) {
  if (num_hidden_clues < 0) throw ConfigError("negative hidden clue count");
  ParsedOutput research;
  research.fields["key_players"] = notes.key_players;
  research.fields["sub_events"] = notes.sub_events;
  research.fields["narrative_themes"] = notes.narrative_themes;
  research.fields["pov_character"] = notes.pov_character;

  Observation obs;
  obs.schema = make_schema(SchemaKind::story);
  obs.user_prompt = prompts::render("allegory_writer",
                                    {{"event", event.name},
                                     {"genre", std::string(to_string(genre))},
                                     {"num_hidden_clues", std::to_string(num_hidden_clues)},
                                     {"research", render_canonical(research, make_schema(SchemaKind::research))}});
  obs.facts = WriterFacts{event.name,         std::string(to_string(genre)), num_hidden_clues,
                          notes.key_players,  notes.sub_events,              notes.narrative_themes,
                          notes.pov_character};
  const auto reply = act_validated(agent, obs);

  Allegory a;
  a.story_id = story_id;
  a.event_name = event.name;
  a.genre = genre;
  a.requested_clues = num_hidden_clues;
  a.writer_model = agent.spec().label();
  a.notes = notes;
  if (reply.output.has("plan")) a.plan_text = trim(reply.output.text("plan"));
  auto [text, clues] = strip_hidden_clues(trim(reply.output.text("story")));
  a.story_text = std::move(text);
  a.hidden_clues = std::move(clues);
  if (a.story_text.empty()) throw AgentError("writer returned an empty story for '" + event.name + "'");
  if (static_cast<int>(a.hidden_clues.size()) != num_hidden_clues) {
    a.compliance_warnings.push_back("requested " + std::to_string(num_hidden_clues) + " hidden clues, got " +
                                    std::to_string(a.hidden_clues.size()));
  }
  if (auto hit = alias_match(a.story_text, event)) {
    a.compliant = false;
    a.compliance_warnings.push_back("story names the event explicitly: '" + *hit + "'");
  }
  return a;
}

DecodeResult decode_check(std::string_view interpretation, const HistoricalEvent& event, Agent* judge) {
  DecodeResult r;
  if (auto hit = alias_match(interpretation, event)) {
    r.identified = true;
    r.stage = "alias";
    const auto at = to_lower(interpretation).find(to_lower(*hit));
    r.evidence = at == std::string::npos ? *hit : sentence_around(interpretation, at);
    return r;
  }
  if (!judge) {
    r.stage = "alias-only";
    return r;
  }
  Observation obs;
  obs.schema = make_schema(SchemaKind::decode_judge);
  obs.user_prompt = prompts::render("allegory_decode_judge",
                                    {{"analysis", std::string(interpretation)}, {"event", event.name}});
  obs.facts = DecodeJudgeFacts{std::string(interpretation), event.name};
  try {
    const auto reply = act_validated(*judge, obs);
    r.stage = "judge";
    r.identified = reply.output.text("identified") == "yes";
    if (reply.output.has("evidence")) r.evidence = trim(reply.output.text("evidence"));
  } catch (const AgentError& e) {
    r.stage = "alias-only";
    r.warnings.push_back(std::string("decode judge failed, alias result kept: ") + e.what());
  }
  return r;
}

void InterpretationCondition::validate() const {
  const bool needs_name = information != Information::none;
  if (needs_name != sampled_name.has_value()) {
    throw ConfigError(needs_name ? "name conditions need a sampled name" : "default condition takes no name");
  }
  if (sampled_name && trim(*sampled_name).empty()) throw ConfigError("empty sampled name");
}

json to_json(const InterpretationResult& r) {
  json j = {{"story_id", r.story_id},
            {"event", r.event_name},
            {"model", r.model},
            {"persona", to_string(r.condition.persona)},
            {"information", to_string(r.condition.information)},
            {"interpretation", r.interpretation_text},
            {"decoded_correct", r.decoded_correct},
            {"decoding_evidence", r.decoding_evidence},
            {"decode_stage", r.decode_stage},
            {"warnings", r.warnings}};
  if (r.condition.sampled_name) j["sampled_name"] = *r.condition.sampled_name;
  return j;
}

InterpretationResult interpretation_result_from_json(const json& j) {
  InterpretationResult r;
  r.story_id = j.at("story_id").get<std::string>();
  r.event_name = j.at("event").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.condition.persona = persona_from_string(j.at("persona").get<std::string>());
  r.condition.information = information_from_string(j.at("information").get<std::string>());
  if (j.contains("sampled_name")) r.condition.sampled_name = j["sampled_name"].get<std::string>();
  r.interpretation_text = j.at("interpretation").get<std::string>();
  r.decoded_correct = j.at("decoded_correct").get<bool>();
  r.decoding_evidence = j.value("decoding_evidence", "");
  r.decode_stage = j.value("decode_stage", "");
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

NameTable NameTable::load(const std::filesystem::path& path) {
  NameTable t;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ConfigError("name table line without a tab: " + line);
    t.add(trim(line.substr(0, tab)), split_commas(line.substr(tab + 1)));
  }
  return t;
}

void NameTable::add(const std::string& culture, std::vector<std::string> names) {
  if (names.empty()) throw ConfigError("culture '" + culture + "' has no names");
  names_[to_lower(culture)] = std::move(names);
}

std::string NameTable::sample(const std::string& culture, Rng& rng) const {
  auto it = names_.find(to_lower(culture));
  if (it == names_.end()) throw ConfigError("no names for culture '" + culture + "'");
  return it->second[static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(it->second.size()) - 1))];
}

std::string condition_name(const Allegory& allegory, const HistoricalEvent& event, const NameTable& names, Rng& rng) {
  // "Mira, a clerk in the capital" -> "Mira"; "Arjun Rao (a poet)" -> "Arjun Rao".
  std::string pov = allegory.notes.pov_character;
  const auto cut = pov.find_first_of(",(;:");
  if (cut != std::string::npos) pov = pov.substr(0, cut);
  pov = trim(pov);
  const bool looks_like_name = !pov.empty() && std::isupper(static_cast<unsigned char>(pov[0])) &&
                               std::count(pov.begin(), pov.end(), ' ') < 4;
  if (looks_like_name) return pov;
  return names.sample(event.culture_tag, rng);
}

std::string interpretation_prompt(const Allegory& allegory, const InterpretationCondition& condition) {
  condition.validate();
  const std::string persona(to_string(condition.persona));
  prompts::Bindings b = {{"story", allegory.story_text}};
  switch (condition.information) {
    case Information::none:
      return prompts::render("allegory_" + persona, b);
    case Information::author_name:
      return prompts::render("allegory_author_preface", {{"author_name", *condition.sampled_name}}) +
             prompts::render("allegory_" + persona, b);
    case Information::reader_name:
      b["reader_name"] = *condition.sampled_name;
      return prompts::render("allegory_" + persona + "_reader_name", b);
  }
  return {};
}

InterpretationResult run_interpretation(const Allegory& allegory, const HistoricalEvent& event,
                                        const InterpretationCondition& condition, Agent& agent, Agent* decode_judge) {
  Observation obs;
  obs.schema = make_schema(SchemaKind::free_text);
  obs.user_prompt = interpretation_prompt(allegory, condition);
  obs.facts = ReadingFacts{allegory.story_text, std::string(to_string(condition.persona)),
                           std::string(to_string(condition.information)), condition.sampled_name};
  const auto reply = act_validated(agent, obs);

  InterpretationResult r;
  r.story_id = allegory.story_id;
  r.event_name = event.name;
  r.model = agent.spec().label();
  r.condition = condition;
  r.interpretation_text = reply.output.text("text");
  const auto decoded = decode_check(r.interpretation_text, event, decode_judge);
  r.decoded_correct = decoded.identified;
  r.decoding_evidence = decoded.evidence;
  r.decode_stage = decoded.stage;
  r.warnings = decoded.warnings;
  return r;
}

json to_json(const JudgeResult& r) {
  return {{"story_id", r.story_id},         {"true_event", r.true_event}, {"negative_event", r.negative_event},
          {"true_slot", r.true_slot},       {"choice", r.choice},         {"correct", r.correct},
          {"reasoning", r.reasoning}};
}

std::string event_summary(const HistoricalEvent& event) {
  std::string first = event.wiki_text.substr(0, event.wiki_text.find("\n\n"));
  return event.name + "\n" + trim(first);
}

JudgeResult judge_allegory_pair(const Allegory& allegory, const HistoricalEvent& true_event,
                                const HistoricalEvent& negative, Agent& judge, Rng& rng) {
  if (true_event.name == negative.name) throw ConfigError("judge pair needs two distinct events");
  JudgeResult r;
  r.story_id = allegory.story_id;
  r.true_event = true_event.name;
  r.negative_event = negative.name;
  r.true_slot = static_cast<int>(rng.uniform(1, 2));
  const auto& e1 = r.true_slot == 1 ? true_event : negative;
  const auto& e2 = r.true_slot == 1 ? negative : true_event;
  Observation obs;
  obs.schema = make_schema(SchemaKind::judge);
  obs.user_prompt = prompts::render("allegory_judge", {{"story", allegory.story_text},
                                                       {"event1", event_summary(e1)},
                                                       {"event2", event_summary(e2)}});
  obs.facts = PairJudgeFacts{allegory.story_text, e1.name, e2.name};
  const auto reply = act_validated(judge, obs);
  r.choice = static_cast<int>(reply.output.integer("choice"));
  if (r.choice < 1 || r.choice > 4) throw AgentError("judge choice out of range: " + std::to_string(r.choice));
  r.correct = r.choice == r.true_slot;
  r.reasoning = reply.output.text("reasoning");
  return r;
}

std::map<std::string, std::string> load_negatives(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ConfigError("negatives line without a tab: " + line);
    out[trim(line.substr(0, tab))] = trim(line.substr(tab + 1));
  }
  return out;
}

std::map<std::string, std::string> harvest_negatives(std::span<const InterpretationResult> results,
                                                     std::span<const HistoricalEvent> events) {
  std::map<std::string, std::map<std::string, int>> counts;
  for (const auto& r : results) {
    if (r.decoded_correct) continue;
    for (const auto& e : events) {
      if (e.name != r.event_name && alias_match(r.interpretation_text, e)) ++counts[r.event_name][e.name];
    }
  }
  std::map<std::string, std::string> out;
  for (const auto& [event, tally] : counts) {
    auto best = std::max_element(tally.begin(), tally.end(),
                                 [](const auto& a, const auto& b) { return a.second < b.second; });
    out[event] = best->first;
  }
  return out;
}

std::vector<AccuracyRow> accuracy_table(std::span<const InterpretationResult> results) {
  // (model, persona, information) -> story -> decoded
  using Key = std::tuple<std::string, Persona, Information>;
  std::map<Key, std::map<std::string, bool>> cells;
  for (const auto& r : results) {
    cells[{r.model, r.condition.persona, r.condition.information}][r.story_id] = r.decoded_correct;
  }
  std::vector<AccuracyRow> rows;
  for (const auto& [key, stories] : cells) {
    const auto& [model, persona, info] = key;
    AccuracyRow row;
    row.model = model;
    row.persona = persona;
    row.information = info;
    row.n = static_cast<int>(stories.size());
    int hits = 0;
    for (const auto& [id, ok] : stories) hits += ok;
    row.accuracy = row.n ? static_cast<double>(hits) / row.n : 0.0;
    if (info != Information::none) {
      auto base = cells.find({model, persona, Information::none});
      std::vector<double> a;
      std::vector<double> b;
      int unpaired = 0;
      if (base != cells.end()) {
        for (const auto& [id, ok] : stories) {
          auto it = base->second.find(id);
          if (it == base->second.end()) {
            ++unpaired;
            continue;
          }
          a.push_back(ok ? 1.0 : 0.0);
          b.push_back(it->second ? 1.0 : 0.0);
        }
      }
      if (unpaired) row.warnings.push_back(std::to_string(unpaired) + " stories lack a default result");
      if (a.size() >= 2) {
        row.vs_default = stats::paired_t(a, b);
        row.significant = row.vs_default->p_value < 0.05;
      } else {
        row.warnings.push_back("too few paired stories for a t-test; skipped");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace arena::allegories
