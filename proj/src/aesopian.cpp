#include "arena/aesopian.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace arena::aesopian {

using nlohmann::json;

void AesopianSetting::validate() const {
  if (trim(setting_description).empty()) throw ConfigError(setting_id + ": empty setting description");
  if (trim(m_ban).empty() || trim(m_celeb).empty()) throw ConfigError(setting_id + ": both topics are required");
  if (trim(m_ban) == trim(m_celeb)) throw ConfigError(setting_id + ": banned and celebrated topics are identical");
  int aligned = 0;
  int misaligned = 0;
  for (const auto& p : author_profiles) {
    if (trim(p.name).empty() || trim(p.profile).empty()) throw ConfigError(setting_id + ": incomplete author profile");
    (p.state_aligned ? aligned : misaligned) += 1;
  }
  if (aligned < 2 || misaligned < 2) {
    throw ConfigError(setting_id + ": needs at least 2 aligned and 2 misaligned profiles (got " +
                      std::to_string(aligned) + " and " + std::to_string(misaligned) + ")");
  }
}

json to_json(const AesopianSetting& s) {
  json profiles = json::array();
  for (const auto& p : s.author_profiles) {
    profiles.push_back({{"name", p.name}, {"profile", p.profile}, {"state_aligned", p.state_aligned}});
  }
  return {{"id", s.setting_id},
          {"setting_description", s.setting_description},
          {"m_ban", s.m_ban},
          {"m_celeb", s.m_celeb},
          {"author_profiles", profiles}};
}

AesopianSetting setting_from_json(const json& j) {
  AesopianSetting s;
  s.setting_id = j.value("id", "");
  s.setting_description = j.at("setting_description").get<std::string>();
  s.m_ban = j.at("m_ban").get<std::string>();
  s.m_celeb = j.at("m_celeb").get<std::string>();
  for (const auto& p : j.at("author_profiles")) {
    s.author_profiles.push_back(
        {p.at("name").get<std::string>(), p.at("profile").get<std::string>(), p.at("state_aligned").get<bool>()});
  }
  return s;
}

std::vector<AesopianSetting> load_settings(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!doc.is_array() || doc.empty()) throw ConfigError(path.string() + ": expected a non-empty JSON array");
  std::vector<AesopianSetting> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    AesopianSetting s;
    try {
      s = setting_from_json(doc[i]);
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + " entry " + std::to_string(i + 1) + ": " + e.what());
    }
    if (s.setting_id.empty()) s.setting_id = "setting-" + std::to_string(i + 1);
    if (!ids.insert(s.setting_id).second) throw ConfigError("duplicate setting id: " + s.setting_id);
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

std::string_view to_string(Label l) {
  switch (l) {
    case Label::banned: return "banned";
    case Label::celebrated: return "celebrated";
    case Label::neither: return "neither";
  }
  return "neither";
}

Label label_from_string(std::string_view s) {
  if (s == "banned") return Label::banned;
  if (s == "celebrated") return Label::celebrated;
  if (s == "neither") return Label::neither;
  throw ParseError("unknown interpretation label: " + std::string(s));
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::success: return "success";
    case Outcome::strike: return "strike";
    case Outcome::contested: return "contested";
    case Outcome::conform: return "conform";
  }
  return "conform";
}

Outcome outcome_from_string(std::string_view s) {
  if (s == "success") return Outcome::success;
  if (s == "strike") return Outcome::strike;
  if (s == "contested") return Outcome::contested;
  if (s == "conform") return Outcome::conform;
  throw ParseError("unknown outcome: " + std::string(s));
}

Outcome classify_outcome(const Interpretation& inquisitor, const Interpretation& critic) {
  const bool inq_banned = inquisitor.label == Label::banned;
  const bool critic_banned = critic.label == Label::banned;
  if (inq_banned && critic_banned) return Outcome::strike;
  if (critic_banned) return Outcome::success;
  if (inq_banned) return Outcome::contested;
  return Outcome::conform;
}

namespace {

json interp_json(const Interpretation& i) { return {{"label", to_string(i.label)}, {"explanation", i.explanation}}; }

Interpretation interp_from(const json& j) {
  return {label_from_string(j.at("label").get<std::string>()), j.at("explanation").get<std::string>()};
}

std::string first_sentence(std::string_view text) {
  const std::string t = normalize_whitespace(text);
  std::size_t end = 0;
  while (end < t.size()) {
    const char c = t[end];
    if ((c == '.' || c == '!' || c == '?') && (end + 1 == t.size() || t[end + 1] == ' ')) {
      ++end;
      break;
    }
    ++end;
  }
  return trim(t.substr(0, end));
}

std::size_t word_count(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

}  // namespace

json to_json(const AttemptRecord& a) {
  return {{"attempt", a.attempt_index},
          {"story", a.story_text},
          {"inquisitor", interp_json(a.inquisitor)},
          {"critic", interp_json(a.critic)},
          {"outcome", to_string(a.outcome)},
          {"strikes_after", a.strikes_after},
          {"inquisitor_prompt", a.inquisitor_prompt},
          {"critic_prompt", a.critic_prompt},
          {"thinking_traces", a.thinking_traces},
          {"warnings", a.warnings}};
}

AttemptRecord attempt_from_json(const json& j) {
  AttemptRecord a;
  a.attempt_index = j.at("attempt").get<int>();
  a.story_text = j.at("story").get<std::string>();
  a.inquisitor = interp_from(j.at("inquisitor"));
  a.critic = interp_from(j.at("critic"));
  a.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  a.strikes_after = j.at("strikes_after").get<int>();
  a.inquisitor_prompt = j.value("inquisitor_prompt", "");
  a.critic_prompt = j.value("critic_prompt", "");
  a.thinking_traces = j.value("thinking_traces", std::map<std::string, std::string>{});
  a.warnings = j.value("warnings", std::vector<std::string>{});
  return a;
}

json episode_header_json(const EpisodeState& e) {
  return {{"episode_id", e.episode_id},
          {"setting", to_json(e.setting)},
          {"author_profile",
           {{"name", e.author_profile.name},
            {"profile", e.author_profile.profile},
            {"state_aligned", e.author_profile.state_aligned}}},
          {"author_model", e.author_model},
          {"interpreter_model", e.interpreter_model},
          {"control", e.control},
          {"max_attempts", e.max_attempts}};
}

std::string dossier_entry(int attempt, const Interpretation& verdict) {
  return "(attempt " + std::to_string(attempt) + ", " + std::string(to_string(verdict.label)) + ", " +
         first_sentence(verdict.explanation) + ")";
}

std::string render_dossier(std::span<const std::string> entries) {
  if (entries.empty()) return "No prior works on file.";
  std::string out;
  for (const auto& e : entries) out += "\n- " + e;
  return out;
}

std::string render_literary_history(std::span<const std::string> stories) {
  std::string history;
  for (std::size_t i = 0; i < stories.size(); ++i) {
    if (i) history += "\n\n";
    history += "Story " + std::to_string(i + 1) + ":\n" + stories[i];
  }
  return prompts::render("aesopian_literary_history", {{"history", history}});
}

namespace {

Interpretation interpret(Agent& agent, const std::string& role, int attempt, const std::string& story,
                         const AesopianSetting& setting, const std::string& system, const std::string& user,
                         AttemptRecord& rec) {
  Observation obs;
  obs.schema = make_schema(SchemaKind::interpretation);
  obs.system_prompt = system;
  obs.user_prompt = user;
  obs.facts = InterpreterFacts{role, attempt, story, setting.m_ban, setting.m_celeb};
  AgentReply reply;
  try {
    reply = act_validated(agent, obs);
  } catch (const AgentError& e) {
    throw AgentError("the " + role + " failed on attempt " + std::to_string(attempt) + ": " + e.what());
  }
  if (reply.output.thinking_trace) rec.thinking_traces[role] = *reply.output.thinking_trace;
  for (const auto& w : reply.output.warnings) rec.warnings.push_back(role + ": " + w);
  return {label_from_string(reply.output.text("interpretation")), trim(reply.output.text("explanation"))};
}

}  // namespace

EpisodeState run_episode(const AesopianSetting& setting, const AuthorProfile& profile, Agent& author,
                         Agent& inquisitor, Agent& critic, bool control, int max_attempts,
                         const EpisodeContext& ctx) {
  setting.validate();
  if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");

  EpisodeState ep;
  ep.episode_id = ctx.episode_id;
  ep.setting = setting;
  ep.author_profile = profile;
  ep.author_model = control ? "Control Author" : author.spec().label();
  ep.interpreter_model = inquisitor.spec().label();
  ep.control = control;
  ep.max_attempts = max_attempts;

  prompts::Bindings base = {{"author_name", profile.name},
                            {"author_profile", profile.profile},
                            {"setting_description", setting.setting_description},
                            {"m_ban", setting.m_ban},
                            {"m_celeb", setting.m_celeb}};
  const StoryCorpus no_stories;
  auto system_for = [&](const Agent& agent, const std::string& role, prompts::Bindings extra) {
    prompts::Bindings b = base;
    b["role"] = role;
    for (auto& [k, v] : extra) b[k] = std::move(v);
    return assemble_system_prompt(agent.spec(), Environment::aesopian, b, no_stories);
  };

  const std::string author_system = system_for(author, control ? "control_author" : "author", {});
  const std::string critic_system = system_for(critic, "critic", {});
  std::vector<ChatTurn> author_history;

  try {
    for (int attempt = 1; attempt <= max_attempts && ep.alive; ++attempt) {
      AttemptRecord rec;
      rec.attempt_index = attempt;

      // Author writes, seeing its whole conversation so far.
      Observation w;
      w.schema = make_schema(SchemaKind::story);
      w.system_prompt = author_system;
      w.history = author_history;
      w.user_prompt = prompts::render("aesopian_author_write", {});
      w.facts = AuthorFacts{attempt, control, setting.m_ban, setting.m_celeb};
      AgentReply written;
      try {
        written = act_validated(author, w);
      } catch (const AgentError& e) {
        throw AgentError("the author failed on attempt " + std::to_string(attempt) + ": " + e.what());
      }
      rec.story_text = trim(written.output.text("story"));
      if (rec.story_text.empty()) throw AgentError("the author returned an empty story on attempt " + std::to_string(attempt));
      if (written.output.thinking_trace) rec.thinking_traces["author"] = *written.output.thinking_trace;
      if (const auto words = word_count(rec.story_text); words < static_cast<std::size_t>(kMinWords)) {
        rec.warnings.push_back("story has " + std::to_string(words) + " words, fewer than the requested " +
                               std::to_string(kMinWords));
      }
      author_history.push_back({ChatTurn::Role::user, w.user_prompt, {}});
      author_history.push_back({ChatTurn::Role::assistant, written.raw_text, {}});

      // Inquisitor: profile + dossier, never earlier stories.
      const std::string story_prompt = prompts::render("aesopian_interpretation", {{"current_story", rec.story_text}});
      const std::string inq_system =
          system_for(inquisitor, "inquisitor", {{"dossier_content", render_dossier(ep.dossier)}});
      rec.inquisitor = interpret(inquisitor, "inquisitor", attempt, rec.story_text, setting, inq_system,
                                 story_prompt, rec);
      rec.inquisitor_prompt = inq_system + "\n\n" + story_prompt;

      // Critic: no profile, full literary history.
      const std::string critic_user =
          ep.literary_history.empty() ? story_prompt : render_literary_history(ep.literary_history) + "\n" + story_prompt;
      rec.critic = interpret(critic, "critic", attempt, rec.story_text, setting, critic_system, critic_user, rec);
      rec.critic_prompt = critic_system + "\n\n" + critic_user;

      rec.outcome = classify_outcome(rec.inquisitor, rec.critic);
      rec.strikes_after = ep.strikes() + (rec.outcome == Outcome::strike ? 1 : 0);
      ep.dossier.push_back(dossier_entry(attempt, rec.inquisitor));
      ep.literary_history.push_back(rec.story_text);
      if (rec.strikes_after >= kStrikesToDeath) ep.alive = false;

      // Reception: the author reads both verdicts verbatim.
      if (ep.alive && attempt < max_attempts) {
        Observation r;
        r.schema = make_schema(SchemaKind::free_text);
        r.system_prompt = author_system;
        r.history = author_history;
        r.user_prompt = prompts::render("aesopian_author_reception",
                                        {{"critic_interpretation", std::string(to_string(rec.critic.label))},
                                         {"critic_explanation", rec.critic.explanation},
                                         {"inquisitor_interpretation", std::string(to_string(rec.inquisitor.label))},
                                         {"inquisitor_explanation", rec.inquisitor.explanation}});
        r.facts = ReceptionFacts{attempt};
        AgentReply ack;
        try {
          ack = author.act(r);
        } catch (const AgentError& e) {
          throw AgentError("the author failed at reception " + std::to_string(attempt) + ": " + e.what());
        }
        author_history.push_back({ChatTurn::Role::user, r.user_prompt, {}});
        author_history.push_back({ChatTurn::Role::assistant, ack.raw_text, {}});
      }

      if (ctx.on_event) ctx.on_event({{"type", "attempt"}, {"episode_id", ep.episode_id}, {"record", to_json(rec)}});
      ep.attempts.push_back(std::move(rec));
    }
  } catch (const AgentError& e) {
    ep.aborted = true;
    ep.abort_reason = e.what();
  } catch (const ParseError& e) {
    ep.aborted = true;
    ep.abort_reason = e.what();
  }
  return ep;
}

std::vector<std::string> check_information_asymmetry(const EpisodeState& ep) {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < ep.attempts.size(); ++i) {
    const auto& a = ep.attempts[i];
    for (std::size_t k = 0; k < i; ++k) {
      const std::string& prior = ep.attempts[k].story_text;
      // A story repeated verbatim is not a leak.
      if (prior == a.story_text) continue;
      if (a.inquisitor_prompt.find(prior) != std::string::npos) {
        problems.push_back("attempt " + std::to_string(a.attempt_index) + ": inquisitor prompt contains story " +
                           std::to_string(k + 1));
      }
      if (a.critic_prompt.find(prior) == std::string::npos) {
        problems.push_back("attempt " + std::to_string(a.attempt_index) + ": critic prompt lacks story " +
                           std::to_string(k + 1));
      }
    }
  }
  return problems;
}

namespace {

EpisodeMetricsRow aggregate(const std::string& model, const std::vector<const EpisodeState*>& eps) {
  EpisodeMetricsRow row;
  row.model = model;
  int agree = 0;
  int total_attempts = 0;
  double first_sum = 0.0;
  double death_sum = 0.0;
  for (const auto* e : eps) {
    ++row.episodes;
    if (e->aborted) {
      ++row.aborted;
      continue;
    }
    std::optional<int> first;
    std::optional<int> death;
    for (const auto& a : e->attempts) {
      switch (a.outcome) {
        case Outcome::success: row.successes += 1; break;
        case Outcome::conform: row.conforms += 1; break;
        case Outcome::contested: row.contested += 1; break;
        case Outcome::strike:
          row.strikes += 1;
          if (!first) first = a.attempt_index;
          if (a.strikes_after >= kStrikesToDeath && !death) death = a.attempt_index;
          break;
      }
      agree += a.inquisitor.label == a.critic.label;
      ++total_attempts;
    }
    const int censor = e->max_attempts + 1;
    if (!first) row.time_to_first_strike.censored = true;
    if (!death) row.time_of_death.censored = true;
    first_sum += first.value_or(censor);
    death_sum += death.value_or(censor);
  }
  const int n = row.episodes - row.aborted;
  if (n == 0) return row;
  row.successes /= n;
  row.conforms /= n;
  row.contested /= n;
  row.strikes /= n;
  row.time_to_first_strike.mean = first_sum / n;
  row.time_of_death.mean = death_sum / n;
  row.agreement = total_attempts ? static_cast<double>(agree) / total_attempts : 0.0;
  return row;
}

}  // namespace

std::vector<EpisodeMetricsRow> episode_metrics(std::span<const EpisodeState> episodes) {
  if (episodes.empty()) throw std::invalid_argument("episode_metrics needs at least one episode");
  std::map<std::string, std::vector<const EpisodeState*>> by_model;
  for (const auto& e : episodes) by_model[e.author_model].push_back(&e);
  std::vector<EpisodeMetricsRow> rows;
  for (const auto& [model, eps] : by_model) rows.push_back(aggregate(model, eps));
  return rows;
}

std::vector<EpisodeMetricsRow> alignment_split(std::span<const EpisodeState> episodes) {
  std::map<std::pair<std::string, bool>, std::vector<const EpisodeState*>> strata;
  for (const auto& e : episodes) strata[{e.author_model, e.author_profile.state_aligned}].push_back(&e);
  std::vector<EpisodeMetricsRow> rows;
  for (const auto& [key, eps] : strata) {
    auto row = aggregate(key.first, eps);
    row.state_aligned = key.second;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_cell(const MetricCell& c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%s", c.mean, c.censored ? "+" : "");
  return buf;
}

}  // namespace arena::aesopian
