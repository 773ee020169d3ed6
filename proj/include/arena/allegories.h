#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arena/agents.h"
#include "arena/rng.h"
#include "arena/stats.h"

namespace arena::allegories {

enum class Genre { science_fiction, fantasy };
enum class Persona { critic, deep_reader, historian };
enum class Information { none, author_name, reader_name };  // "none" is the default condition

std::string_view to_string(Genre g);
std::string_view to_string(Persona p);
std::string_view to_string(Information i);
Genre genre_from_string(std::string_view s);  // accepts "sf" and "science_fiction"
Persona persona_from_string(std::string_view s);
Information information_from_string(std::string_view s);

inline constexpr std::array<Persona, 3> kPersonas = {Persona::critic, Persona::deep_reader, Persona::historian};
inline constexpr std::array<Information, 3> kInformation = {Information::none, Information::author_name,
                                                             Information::reader_name};

struct HistoricalEvent {
  std::string name;
  std::string wiki_text;
  std::string culture_tag;
  std::vector<std::string> aliases;
};

// One file per event:
//   Name: Cuban Missile Crisis
//   Aliases: October Crisis, Caribbean Crisis
//   Culture: cuban
//   <blank line>
//   wiki text...
HistoricalEvent parse_event(std::string_view text);
std::vector<HistoricalEvent> load_events_dir(const std::filesystem::path& dir);

struct ResearchNotes {
  std::vector<std::string> key_players;
  std::vector<std::string> sub_events;
  std::vector<std::string> narrative_themes;
  std::string pov_character;

  friend bool operator==(const ResearchNotes&, const ResearchNotes&) = default;
};

struct HiddenClue {
  std::size_t begin = 0;  // byte offsets into the stripped story text
  std::size_t end = 0;

  friend bool operator==(const HiddenClue&, const HiddenClue&) = default;
};

struct Allegory {
  std::string story_id;
  std::string event_name;
  Genre genre = Genre::fantasy;
  std::string story_text;  // hc tags removed
  std::vector<HiddenClue> hidden_clues;
  int requested_clues = 0;
  std::optional<std::string> plan_text;
  std::string writer_model;
  ResearchNotes notes;
  bool compliant = true;
  std::vector<std::string> compliance_warnings;

  friend bool operator==(const Allegory&, const Allegory&) = default;
};

nlohmann::json to_json(const Allegory& a);
Allegory allegory_from_json(const nlohmann::json& j);

// Corpus files: "---", a JSON metadata block, "---", then the story text.
void write_allegory(const std::filesystem::path& dir, const Allegory& a);
Allegory read_allegory(const std::filesystem::path& path);
std::vector<Allegory> load_corpus(const std::filesystem::path& dir);

ResearchNotes run_research(const HistoricalEvent& event, Agent& agent);

// Removes <hc> tags and returns the clue spans in the stripped text.
std::pair<std::string, std::vector<HiddenClue>> strip_hidden_clues(std::string_view story);

Allegory run_writer(const ResearchNotes& notes, const HistoricalEvent& event, Genre genre,
                    int num_hidden_clues, Agent& agent, const std::string& story_id = {});

// Case-insensitive, word-bounded match of the event name or any alias.
// Returns the matched alias.
std::optional<std::string> alias_match(std::string_view text, const HistoricalEvent& event);

struct DecodeResult {
  bool identified = false;
  std::string evidence;
  std::string stage;  // "alias", "judge" or "alias-only"
  std::vector<std::string> warnings;
};

// Alias match first; otherwise the judge (if any) decides. A failing judge
// falls back to the alias result with a warning.
DecodeResult decode_check(std::string_view interpretation, const HistoricalEvent& event, Agent* judge);

struct InterpretationCondition {
  Persona persona = Persona::critic;
  Information information = Information::none;
  std::optional<std::string> sampled_name;

  void validate() const;
};

struct InterpretationResult {
  std::string story_id;
  std::string event_name;
  std::string model;
  InterpretationCondition condition;
  std::string interpretation_text;
  bool decoded_correct = false;
  std::string decoding_evidence;
  std::string decode_stage;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const InterpretationResult& r);
InterpretationResult interpretation_result_from_json(const nlohmann::json& j);

// Per-culture first names, one culture per line: "<tag>\t<name>, <name>, ...".
class NameTable {
 public:
  static NameTable load(const std::filesystem::path& path);
  void add(const std::string& culture, std::vector<std::string> names);
  std::string sample(const std::string& culture, Rng& rng) const;

 private:
  std::map<std::string, std::vector<std::string>> names_;
};

// The name used for author and reader conditions: the research PoV
// character's name when it has one, else a culture-matched sample.
std::string condition_name(const Allegory& allegory, const HistoricalEvent& event, const NameTable& names,
                           Rng& rng);

std::string interpretation_prompt(const Allegory& allegory, const InterpretationCondition& condition);

InterpretationResult run_interpretation(const Allegory& allegory, const HistoricalEvent& event,
                                        const InterpretationCondition& condition, Agent& agent,
                                        Agent* decode_judge);

struct JudgeResult {
  std::string story_id;
  std::string true_event;
  std::string negative_event;
  int true_slot = 1;  // 1 or 2
  int choice = 0;     // 1, 2, 3 (both) or 4 (none)
  bool correct = false;
  std::string reasoning;
};

nlohmann::json to_json(const JudgeResult& r);

std::string event_summary(const HistoricalEvent& event);

// The true event's slot is drawn from `rng`.
JudgeResult judge_allegory_pair(const Allegory& allegory, const HistoricalEvent& true_event,
                                const HistoricalEvent& negative, Agent& judge, Rng& rng);

// event name -> hard negative event name, "<event>\t<negative>" per line.
std::map<std::string, std::string> load_negatives(const std::filesystem::path& path);
// Hard negatives mined from earlier interpretations: for each event, the other
// event most often named in analyses that missed it (ties by name).
std::map<std::string, std::string> harvest_negatives(std::span<const InterpretationResult> results,
                                                     std::span<const HistoricalEvent> events);

struct AccuracyRow {
  std::string model;
  Persona persona = Persona::critic;
  Information information = Information::none;
  int n = 0;
  double accuracy = 0.0;
  std::optional<stats::TestResult> vs_default;  // paired over stories; absent for the default row
  bool significant = false;
  std::vector<std::string> warnings;
};

std::vector<AccuracyRow> accuracy_table(std::span<const InterpretationResult> results);

}  // namespace arena::allegories
