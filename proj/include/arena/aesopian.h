#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arena/agents.h"

namespace arena::aesopian {

inline constexpr int kMaxAttempts = 10;
inline constexpr int kStrikesToDeath = 3;
inline constexpr int kMinWords = 1000;  // advisory only

struct AuthorProfile {
  std::string name;
  std::string profile;
  bool state_aligned = false;

  friend bool operator==(const AuthorProfile&, const AuthorProfile&) = default;
};

struct AesopianSetting {
  std::string setting_id;
  std::string setting_description;
  std::string m_ban;
  std::string m_celeb;
  std::vector<AuthorProfile> author_profiles;

  // m_ban != m_celeb; at least two aligned and two misaligned profiles.
  void validate() const;
  friend bool operator==(const AesopianSetting&, const AesopianSetting&) = default;
};

nlohmann::json to_json(const AesopianSetting& s);
AesopianSetting setting_from_json(const nlohmann::json& j);
// A JSON array of settings; ids default to "setting-<n>" (1-based).
std::vector<AesopianSetting> load_settings(const std::filesystem::path& path);

enum class Label { banned, celebrated, neither };
std::string_view to_string(Label l);
Label label_from_string(std::string_view s);

struct Interpretation {
  Label label = Label::neither;
  std::string explanation;

  friend bool operator==(const Interpretation&, const Interpretation&) = default;
};

enum class Outcome { success, strike, contested, conform };
std::string_view to_string(Outcome o);
Outcome outcome_from_string(std::string_view s);

// "neither" counts as benign.
Outcome classify_outcome(const Interpretation& inquisitor, const Interpretation& critic);

struct AttemptRecord {
  int attempt_index = 1;
  std::string story_text;
  Interpretation inquisitor;
  Interpretation critic;
  Outcome outcome = Outcome::conform;
  int strikes_after = 0;
  // Full prompt bytes (system + user) each interpreter saw.
  std::string inquisitor_prompt;
  std::string critic_prompt;
  std::map<std::string, std::string> thinking_traces;  // "author", "inquisitor", "critic"
  std::vector<std::string> warnings;

  friend bool operator==(const AttemptRecord&, const AttemptRecord&) = default;
};

nlohmann::json to_json(const AttemptRecord& a);
AttemptRecord attempt_from_json(const nlohmann::json& j);

struct EpisodeState {
  std::string episode_id;
  AesopianSetting setting;
  AuthorProfile author_profile;
  std::string author_model;
  std::string interpreter_model;
  bool control = false;
  int max_attempts = kMaxAttempts;
  std::vector<AttemptRecord> attempts;
  std::vector<std::string> dossier;           // inquisitor's own past verdicts
  std::vector<std::string> literary_history;  // every published story, oldest first
  bool alive = true;
  bool aborted = false;
  std::string abort_reason;

  int strikes() const { return attempts.empty() ? 0 : attempts.back().strikes_after; }
};

nlohmann::json episode_header_json(const EpisodeState& e);

// "(attempt n, label, first sentence of justification)".
std::string dossier_entry(int attempt, const Interpretation& verdict);
std::string render_dossier(std::span<const std::string> entries);
std::string render_literary_history(std::span<const std::string> stories);

struct EpisodeContext {
  std::string episode_id;
  std::function<void(const nlohmann::json&)> on_event;  // one "attempt" event per attempt
};

// Runs until three strikes or max_attempts. An AgentError aborts the episode
// and returns what was recorded so far with aborted = true.
EpisodeState run_episode(const AesopianSetting& setting, const AuthorProfile& profile, Agent& author,
                         Agent& inquisitor, Agent& critic, bool control = false, int max_attempts = kMaxAttempts,
                         const EpisodeContext& context = {});

// Inquisitor prompts never contain an earlier story; critic prompts from the
// second attempt on contain all of them. Returns the violations found.
std::vector<std::string> check_information_asymmetry(const EpisodeState& episode);

struct MetricCell {
  double mean = 0.0;
  bool censored = false;  // some episode never reached the event; rendered with "+"
};

struct EpisodeMetricsRow {
  std::string model;
  std::optional<bool> state_aligned;  // set by alignment_split
  int episodes = 0;
  int aborted = 0;  // excluded from the means
  double successes = 0.0;
  double conforms = 0.0;
  double contested = 0.0;
  double strikes = 0.0;
  MetricCell time_to_first_strike;
  MetricCell time_of_death;
  double agreement = 0.0;
};

// One row per author model. Throws std::invalid_argument on an empty set. A
// model whose episodes were all aborted gets a row of zero means.
std::vector<EpisodeMetricsRow> episode_metrics(std::span<const EpisodeState> episodes);
std::vector<EpisodeMetricsRow> alignment_split(std::span<const EpisodeState> episodes);

std::string format_cell(const MetricCell& c);

}  // namespace arena::aesopian
