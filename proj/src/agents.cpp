#include "arena/agents.h"

#include "arena/gateway.h"

namespace arena {

using nlohmann::json;

void AgentSpec::validate() const {
  if (agent_id.empty()) throw ConfigError("agent spec without agent_id");
  if (memory_window_k < 0) throw ConfigError("agent " + agent_id + ": negative memory window");
  if (backend == Backend::scripted) {
    if (model_name || provider) throw ConfigError("agent " + agent_id + ": scripted agent has a model");
    if (!script_policy) throw ConfigError("agent " + agent_id + ": scripted agent without policy");
  } else {
    if (script_policy) throw ConfigError("agent " + agent_id + ": model agent has a script policy");
    if (!model_name || !provider) throw ConfigError("agent " + agent_id + ": model agent needs provider and model");
  }
  if (generation.max_tokens <= 0) throw ConfigError("agent " + agent_id + ": max_tokens must be positive");
}

std::string AgentSpec::label() const {
  if (!display_name.empty()) return display_name;
  if (model_name) return *model_name;
  if (script_policy) return "scripted:" + script_policy->name;
  return agent_id;
}

AgentSpec parse_agent_ref(const std::string& ref, const std::string& agent_id) {
  AgentSpec spec;
  spec.agent_id = agent_id;
  const auto colon = ref.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == ref.size()) {
    throw ConfigError("agent reference must look like provider:model or scripted:policy, got '" + ref + "'");
  }
  const std::string head = ref.substr(0, colon);
  const std::string rest = ref.substr(colon + 1);
  if (head == "scripted") {
    spec.backend = Backend::scripted;
    ScriptPolicy policy;
    const auto params_at = rest.find(':');
    policy.name = rest.substr(0, params_at);
    if (params_at != std::string::npos) {
      for (const auto& kv : split_commas(rest.substr(params_at + 1))) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("bad scripted parameter '" + kv + "'");
        const std::string key = trim(kv.substr(0, eq));
        const std::string value = trim(kv.substr(eq + 1));
        if (key == "seed") {
          policy.seed = std::stoull(value);
        } else {
          policy.params[key] = value;
        }
      }
    }
    spec.script_policy = std::move(policy);
    spec.display_name = ref;
  } else {
    spec.backend = Backend::remote_model;
    spec.provider = head;
    spec.model_name = rest;
    spec.display_name = rest;
  }
  spec.validate();
  return spec;
}

namespace {

std::string thinking_mode_name(ThinkingConfig::Mode m) {
  switch (m) {
    case ThinkingConfig::Mode::none: return "none";
    case ThinkingConfig::Mode::dynamic: return "dynamic";
    case ThinkingConfig::Mode::effort: return "effort";
    case ThinkingConfig::Mode::budget: return "budget";
  }
  return "none";
}

ThinkingConfig::Mode thinking_mode_from(const std::string& s) {
  if (s == "dynamic") return ThinkingConfig::Mode::dynamic;
  if (s == "effort") return ThinkingConfig::Mode::effort;
  if (s == "budget") return ThinkingConfig::Mode::budget;
  if (s == "none") return ThinkingConfig::Mode::none;
  throw ConfigError("unknown thinking mode: " + s);
}

}  // namespace

json to_json(const AgentSpec& spec) {
  json j = {{"agent_id", spec.agent_id},
            {"display_name", spec.display_name},
            {"backend", spec.backend == Backend::scripted ? "scripted" : "remote_model"},
            {"memory_window_k", spec.memory_window_k},
            {"shared_story_ids", spec.shared_story_ids}};
  if (spec.provider) j["provider"] = *spec.provider;
  if (spec.model_name) j["model_name"] = *spec.model_name;
  if (spec.script_policy) {
    j["script_policy"] = {{"name", spec.script_policy->name},
                          {"seed", spec.script_policy->seed},
                          {"params", spec.script_policy->params}};
  }
  if (spec.partner_belief) j["partner_belief"] = *spec.partner_belief;
  if (!spec.system_prompt_parts.empty()) {
    json parts = json::array();
    for (const auto& p : spec.system_prompt_parts) {
      json bindings = json::object();
      for (const auto& [k, v] : p.bindings) bindings[k] = v;
      parts.push_back({{"template_id", p.template_id}, {"bindings", bindings}});
    }
    j["system_prompt_parts"] = parts;
  }
  j["generation"] = {{"temperature", spec.generation.temperature},
                     {"max_tokens", spec.generation.max_tokens},
                     {"retry_on_truncation", spec.generation.retry_on_truncation},
                     {"thinking",
                      {{"mode", thinking_mode_name(spec.generation.thinking.mode)},
                       {"effort", spec.generation.thinking.effort},
                       {"budget_tokens", spec.generation.thinking.budget_tokens}}}};
  return j;
}

AgentSpec agent_spec_from_json(const json& j) {
  AgentSpec spec;
  try {
    spec.agent_id = j.at("agent_id").get<std::string>();
    spec.display_name = j.value("display_name", "");
    const std::string backend = j.value("backend", j.contains("script_policy") ? "scripted" : "remote_model");
    spec.backend = backend == "scripted" ? Backend::scripted : Backend::remote_model;
    if (j.contains("provider")) spec.provider = j["provider"].get<std::string>();
    if (j.contains("model_name")) spec.model_name = j["model_name"].get<std::string>();
    if (j.contains("script_policy")) {
      const auto& p = j["script_policy"];
      ScriptPolicy policy;
      policy.name = p.at("name").get<std::string>();
      policy.seed = p.value("seed", std::uint64_t{0});
      if (p.contains("params")) policy.params = p["params"].get<std::map<std::string, std::string>>();
      spec.script_policy = std::move(policy);
    }
    spec.memory_window_k = j.value("memory_window_k", 0);
    if (j.contains("shared_story_ids")) spec.shared_story_ids = j["shared_story_ids"].get<std::vector<std::string>>();
    if (j.contains("partner_belief")) spec.partner_belief = j["partner_belief"].get<std::string>();
    if (j.contains("system_prompt_parts")) {
      for (const auto& p : j["system_prompt_parts"]) {
        PromptPart part;
        part.template_id = p.at("template_id").get<std::string>();
        if (p.contains("bindings")) {
          for (const auto& [k, v] : p["bindings"].items()) part.bindings[k] = v.get<std::string>();
        }
        spec.system_prompt_parts.push_back(std::move(part));
      }
    }
    if (j.contains("generation")) {
      const auto& g = j["generation"];
      spec.generation.temperature = g.value("temperature", 1.0);
      spec.generation.max_tokens = g.value("max_tokens", 8192);
      spec.generation.retry_on_truncation = g.value("retry_on_truncation", true);
      if (g.contains("thinking")) {
        const auto& t = g["thinking"];
        spec.generation.thinking.mode = thinking_mode_from(t.value("mode", "none"));
        spec.generation.thinking.effort = t.value("effort", "");
        spec.generation.thinking.budget_tokens = t.value("budget_tokens", 0);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid agent spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string_view to_string(ChatTurn::Role role) {
  switch (role) {
    case ChatTurn::Role::system: return "system";
    case ChatTurn::Role::user: return "user";
    case ChatTurn::Role::assistant: return "assistant";
  }
  return "user";
}

ScriptedAgent::ScriptedAgent(AgentSpec spec) : spec_(std::move(spec)) {
  if (spec_.backend != Backend::scripted) throw ConfigError("ScriptedAgent needs a scripted spec");
}

AgentReply ScriptedAgent::act(const Observation& observation) {
  AgentReply reply;
  try {
    reply.output = run_scripted(spec_, observation);
  } catch (const ParseError& e) {
    throw AgentError("scripted agent " + spec_.agent_id + ": " + e.what());
  }
  reply.raw_text = render_canonical(reply.output, observation.schema);
  return reply;
}

ModelAgent::ModelAgent(AgentSpec spec, std::shared_ptr<const Gateway> gateway)
    : spec_(std::move(spec)), gateway_(std::move(gateway)) {
  if (spec_.backend != Backend::remote_model) throw ConfigError("ModelAgent needs a remote_model spec");
  if (!gateway_) throw ConfigError("ModelAgent needs a gateway");
}

AgentReply ModelAgent::act(const Observation& observation) {
  std::vector<ChatTurn> history;
  history.push_back({ChatTurn::Role::system, observation.system_prompt, {}});
  history.insert(history.end(), observation.history.begin(), observation.history.end());
  history.push_back({ChatTurn::Role::user, observation.user_prompt, observation.images});

  const PhaseSchema* structured =
      observation.schema.structured_object.empty() ? nullptr : &observation.schema;
  std::string last_error;
  // One re-ask on an unparseable reply; the sample index keeps the cache key distinct.
  for (int sample = 0; sample < 2; ++sample) {
    ChatResult result;
    try {
      result = gateway_->send_chat(spec_, history, spec_.generation, structured, sample);
    } catch (const GatewayError& e) {
      throw AgentError("agent " + spec_.agent_id + ": " + e.what());
    }
    try {
      AgentReply reply;
      reply.raw_text = result.text;
      reply.output = result.structured ? parse_structured(*result.structured, observation.schema)
                                       : parse_tagged(result.text, observation.schema);
      if (result.thinking) {
        reply.output.thinking_trace = reply.output.thinking_trace
                                          ? *result.thinking + "\n" + *reply.output.thinking_trace
                                          : *result.thinking;
      }
      if (sample > 0) reply.output.warnings.push_back("re-asked after parse error: " + last_error);
      return reply;
    } catch (const ParseError& e) {
      last_error = e.what();
    }
  }
  throw AgentError("agent " + spec_.agent_id + ": unparseable reply after retry: " + last_error);
}

AgentReply act_validated(Agent& agent, const Observation& observation) {
  std::string missing;
  for (int attempt = 0; attempt < 2; ++attempt) {
    AgentReply reply = agent.act(observation);
    missing.clear();
    for (const auto& f : observation.schema.fields) {
      if (f.required && !reply.output.has(f.name)) missing += (missing.empty() ? "" : ", ") + f.name;
    }
    if (observation.schema.kind == SchemaKind::free_text && !reply.output.has("text")) missing = "text";
    if (missing.empty()) return reply;
  }
  throw AgentError("agent " + agent.spec().agent_id + " omitted required fields after retry: " + missing);
}

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, std::shared_ptr<const Gateway> gateway) {
  spec.validate();
  if (spec.backend == Backend::scripted) return std::make_unique<ScriptedAgent>(spec);
  return std::make_unique<ModelAgent>(spec, std::move(gateway));
}

std::string assemble_system_prompt(const AgentSpec& spec, Environment environment,
                                   const prompts::Bindings& role_context,
                                   const StoryCorpus& stories) {
  std::vector<std::string> story_texts;
  for (const auto& id : spec.shared_story_ids) story_texts.push_back(stories.at(id).text);

  prompts::Bindings b = role_context;
  std::string out;
  switch (environment) {
    case Environment::visual_allusions:
      out = prompts::render("va_system_default", b);
      if (!story_texts.empty()) {
        b["stories"] = prompts::join_stories(story_texts);
        out += prompts::render(spec.partner_belief ? "va_system_shared_context"
                                                   : "va_system_inferring_beliefs",
                               b);
      }
      break;
    case Environment::attuned:
      out = prompts::render("attuned_system_default", b);
      if (!story_texts.empty()) {
        b["stories"] = prompts::join_stories(story_texts);
        out += prompts::render("attuned_system_shared_context", b);
      }
      break;
    case Environment::aesopian: {
      auto role = b.find("role");
      if (role == b.end()) throw prompts::PromptError("aesopian system prompt needs a role binding");
      out = prompts::render("aesopian_" + role->second + "_system", b);
      break;
    }
    case Environment::allegories:
      break;
  }
  for (const auto& part : spec.system_prompt_parts) {
    prompts::Bindings merged = role_context;
    for (const auto& [k, v] : part.bindings) merged[k] = v;
    if (!out.empty()) out += "\n\n";
    out += prompts::render(part.template_id, merged);
  }
  return out;
}

}  // namespace arena
