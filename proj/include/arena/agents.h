#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "arena/parsing.h"
#include "arena/prompts.h"
#include "arena/types.h"

namespace arena {

class Gateway;

class AgentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Backend { remote_model, scripted };

struct ThinkingConfig {
  enum class Mode { none, dynamic, effort, budget };
  Mode mode = Mode::none;
  std::string effort;     // Mode::effort, e.g. "medium"
  int budget_tokens = 0;  // Mode::budget
};

struct GenerationConfig {
  double temperature = 1.0;
  int max_tokens = 8192;
  ThinkingConfig thinking;
  bool retry_on_truncation = true;
};

struct ScriptPolicy {
  std::string name;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> params;
};

struct PromptPart {
  std::string template_id;
  prompts::Bindings bindings;
};

struct AgentSpec {
  std::string agent_id;
  std::string display_name;
  Backend backend = Backend::scripted;
  std::optional<std::string> provider;    // remote only, e.g. "openai"
  std::optional<std::string> model_name;  // remote only
  std::optional<ScriptPolicy> script_policy;  // scripted only
  std::vector<PromptPart> system_prompt_parts;
  int memory_window_k = 0;
  std::vector<std::string> shared_story_ids;
  std::optional<std::string> partner_belief;
  GenerationConfig generation;

  // Throws ConfigError when backend-specific fields are inconsistent.
  void validate() const;
  // Name used for report rows: display_name, falling back to the model.
  std::string label() const;
};

// "scripted:<policy>[:<param>=<value>,...]" or "<provider>:<model>".
AgentSpec parse_agent_ref(const std::string& ref, const std::string& agent_id);

nlohmann::json to_json(const AgentSpec& spec);
AgentSpec agent_spec_from_json(const nlohmann::json& j);

struct ChatTurn {
  enum class Role { system, user, assistant };
  Role role = Role::user;
  std::string text;
  std::vector<std::string> images;
};

std::string_view to_string(ChatTurn::Role role);

// Structured per-phase view handed to scripted policies. Model-backed agents
// only read the rendered prompts.
struct StorytellerFacts {
  int player = 0;
  std::vector<Card> hand;
  std::vector<std::string> story_titles;
};
struct CardPlayFacts {
  int player = 0;
  int storyteller = 0;
  std::string clue;
  std::vector<Card> hand;
};
struct VoteFacts {
  int player = 0;
  int storyteller = 0;
  std::string clue;
  std::vector<Card> options;
  int own_label = 0;
};
struct SenderFacts {
  int player = 0;
  Spectrum spectrum;
  int target = 0;
};
struct GuesserFacts {
  int player = 0;
  int sender = 0;
  bool sender_is_teammate = false;
  Spectrum spectrum;
  std::string clue;
};
struct ResearchFacts {
  std::string event;
  std::string event_details;
};
struct WriterFacts {
  std::string event;
  std::string genre;
  int num_hidden_clues = 3;
  std::vector<std::string> key_players;
  std::vector<std::string> sub_events;
  std::vector<std::string> narrative_themes;
  std::string pov_character;
};
struct ReadingFacts {
  std::string story;
  std::string persona;
  std::string information;
  std::optional<std::string> name;
};
struct DecodeJudgeFacts {
  std::string analysis;
  std::string event;
};
struct PairJudgeFacts {
  std::string story;
  std::string event1;
  std::string event2;
};
struct AuthorFacts {
  int attempt = 1;
  bool control = false;
  std::string m_ban;
  std::string m_celeb;
};
struct ReceptionFacts {
  int attempt = 1;
};
struct InterpreterFacts {
  std::string role;  // "inquisitor" or "critic"
  int attempt = 1;
  std::string story;
  std::string m_ban;
  std::string m_celeb;
};
struct AwarenessFacts {
  int player = 0;
  std::string trace;
};

using PhaseFacts =
    std::variant<StorytellerFacts, CardPlayFacts, VoteFacts, SenderFacts, GuesserFacts,
                 ResearchFacts, WriterFacts, ReadingFacts, DecodeJudgeFacts, PairJudgeFacts,
                 AuthorFacts, ReceptionFacts, InterpreterFacts, AwarenessFacts>;

struct Observation {
  PhaseSchema schema;
  std::string system_prompt;
  std::vector<ChatTurn> history;  // earlier user/assistant turns of this conversation
  std::string user_prompt;
  std::vector<std::string> images;
  PhaseFacts facts;
};

struct AgentReply {
  ParsedOutput output;
  std::string raw_text;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual const AgentSpec& spec() const = 0;
  // Throws AgentError once the backend's retries are exhausted.
  virtual AgentReply act(const Observation& observation) = 0;
};

// Deterministic policies: always-first-card, caption-keyword-matcher,
// partner-code, fixed-interpretation, midpoint-guesser, fixed-choice,
// awareness-keyword, canned-writer.
ParsedOutput run_scripted(const AgentSpec& spec, const Observation& observation);
std::vector<std::string> scripted_policy_names();

class ScriptedAgent final : public Agent {
 public:
  explicit ScriptedAgent(AgentSpec spec);
  const AgentSpec& spec() const override { return spec_; }
  AgentReply act(const Observation& observation) override;

 private:
  AgentSpec spec_;
};

// Sends the rendered prompts through the gateway and parses the reply,
// re-asking once when the reply does not parse.
class ModelAgent final : public Agent {
 public:
  ModelAgent(AgentSpec spec, std::shared_ptr<const Gateway> gateway);
  const AgentSpec& spec() const override { return spec_; }
  AgentReply act(const Observation& observation) override;

 private:
  AgentSpec spec_;
  std::shared_ptr<const Gateway> gateway_;
};

// Calls the agent and checks that every required schema field is present. A
// reply missing one is re-requested once before AgentError is thrown.
AgentReply act_validated(Agent& agent, const Observation& observation);

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, std::shared_ptr<const Gateway> gateway);

enum class Environment { visual_allusions, attuned, allegories, aesopian };

// Renders the environment's system prompt for an agent. Role context carries
// per-seat bindings (player_id, partner_player_id, team names, role for the
// Aesopian agents, ...). Story blocks come from spec.shared_story_ids; the
// Visual Allusions shared-context variant is used when spec.partner_belief
// is set, the inferring-shared-beliefs variant otherwise.
std::string assemble_system_prompt(const AgentSpec& spec, Environment environment,
                                   const prompts::Bindings& role_context,
                                   const StoryCorpus& stories);

}  // namespace arena
