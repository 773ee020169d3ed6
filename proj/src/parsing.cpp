#include "arena/parsing.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "arena/types.h"

namespace arena {
namespace {

constexpr std::string_view kLabelDecorations = " \t*#>-_";

FieldSpec label_int(std::string name, std::vector<std::string> labels, std::int64_t min,
                    std::int64_t max, std::string structured) {
  FieldSpec f;
  f.name = std::move(name);
  f.kind = FieldKind::integer;
  f.locator = Locator::label;
  f.keys = std::move(labels);
  f.min = min;
  f.max = max;
  f.structured_name = std::move(structured);
  return f;
}

FieldSpec label_text(std::string name, std::vector<std::string> labels, std::string structured,
                     bool required = true) {
  FieldSpec f;
  f.name = std::move(name);
  f.kind = FieldKind::text;
  f.locator = Locator::label;
  f.keys = std::move(labels);
  f.required = required;
  f.structured_name = std::move(structured);
  return f;
}

FieldSpec tag_field(std::string name, FieldKind kind, bool required = true) {
  FieldSpec f;
  f.kind = kind;
  f.locator = Locator::tag;
  f.keys = {name};
  f.structured_name = name;
  f.name = std::move(name);
  f.required = required;
  return f;
}

std::string strip_decorations(std::string_view value) {
  std::string v = trim(value);
  while (!v.empty() && (v.front() == '*' || v.front() == '_')) v.erase(v.begin());
  while (!v.empty() && (v.back() == '*' || v.back() == '_')) v.pop_back();
  v = trim(v);
  if (v.size() >= 2) {
    const char f = v.front();
    const char b = v.back();
    if ((f == '"' && b == '"') || (f == '\'' && b == '\'') || (f == '[' && b == ']')) {
      v = trim(v.substr(1, v.size() - 2));
    }
  }
  return v;
}

struct LabelHit {
  std::size_t line_begin;  // start of the line holding the label
  std::size_t value_begin;
};

// Lines of the form "<decorations>Label<decorations>:<value>".
std::vector<LabelHit> find_label(std::string_view text, std::string_view lower_text,
                                 std::string_view label) {
  const std::string needle = to_lower(label);
  std::vector<LabelHit> hits;
  std::size_t line_begin = 0;
  while (line_begin < text.size()) {
    std::size_t line_end = text.find('\n', line_begin);
    if (line_end == std::string_view::npos) line_end = text.size();
    std::size_t p = line_begin;
    while (p < line_end && kLabelDecorations.find(text[p]) != std::string_view::npos) ++p;
    if (lower_text.compare(p, needle.size(), needle) == 0) {
      std::size_t q = p + needle.size();
      while (q < line_end && (text[q] == '*' || text[q] == ' ' || text[q] == '_')) ++q;
      if (q < line_end && text[q] == ':') {
        ++q;
        while (q < line_end && (text[q] == '*' || text[q] == '_')) ++q;
        hits.push_back({line_begin, q});
      }
    }
    line_begin = line_end + 1;
  }
  return hits;
}

struct NumberToken {
  double value;
  bool integral;
};

std::optional<NumberToken> first_number(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) continue;
    std::size_t begin = i;
    if (i > 0 && s[i - 1] == '-') begin = i - 1;
    std::size_t end = i;
    while (end < s.size() && std::isdigit(static_cast<unsigned char>(s[end]))) ++end;
    bool integral = true;
    if (end + 1 < s.size() && s[end] == '.' && std::isdigit(static_cast<unsigned char>(s[end + 1]))) {
      integral = false;
      ++end;
      while (end < s.size() && std::isdigit(static_cast<unsigned char>(s[end]))) ++end;
    }
    return NumberToken{std::stod(std::string(s.substr(begin, end - begin))), integral};
  }
  return std::nullopt;
}

std::int64_t to_integer(const FieldSpec& spec, std::string_view raw_value,
                        std::vector<std::string>& warnings) {
  auto number = first_number(raw_value);
  if (!number) throw ParseError("field '" + spec.name + "': no integer found");
  double v = number->value;
  if (!number->integral) {
    if (!spec.accept_real) {
      throw ParseError("field '" + spec.name + "': expected an integer, got " + trim(raw_value));
    }
    v = std::floor(v + 0.5);
    warnings.push_back("field '" + spec.name + "': rounded non-integer value");
  }
  auto value = static_cast<std::int64_t>(v);
  if (value < spec.min || value > spec.max) {
    if (!spec.clamp) {
      throw ParseError("field '" + spec.name + "': value " + std::to_string(value) +
                       " outside [" + std::to_string(spec.min) + ", " + std::to_string(spec.max) + "]");
    }
    warnings.push_back("field '" + spec.name + "': clamped out-of-range value " +
                       std::to_string(value));
    value = std::clamp(value, spec.min, spec.max);
  }
  return value;
}

bool contains_word(std::string_view lower, std::string_view word) {
  std::size_t pos = lower.find(word);
  while (pos != std::string_view::npos) {
    const bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(lower[pos - 1]));
    const std::size_t end = pos + word.size();
    const bool right_ok = end >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[end]));
    if (left_ok && right_ok) return true;
    pos = lower.find(word, pos + 1);
  }
  return false;
}

// Synonyms accepted for each canonical choice value.
std::vector<std::string> choice_synonyms(const std::string& choice) {
  if (choice == "banned") return {"banned", "forbidden", "transgression"};
  if (choice == "celebrated") return {"celebrated", "revered", "conformity"};
  if (choice == "neither") return {"neither"};
  return {choice};
}

std::string to_choice(const FieldSpec& spec, std::string_view raw_value) {
  const std::string lower = to_lower(strip_decorations(raw_value));
  std::vector<std::string> matched;
  for (const auto& choice : spec.choices) {
    for (const auto& syn : choice_synonyms(choice)) {
      if (contains_word(lower, syn)) {
        matched.push_back(choice);
        break;
      }
    }
  }
  if (matched.size() != 1) {
    throw ParseError("field '" + spec.name + "': expected exactly one of the allowed values, got '" +
                     trim(raw_value) + "'");
  }
  return matched.front();
}

FieldValue convert(const FieldSpec& spec, std::string_view raw_value,
                   std::vector<std::string>& warnings) {
  switch (spec.kind) {
    case FieldKind::integer:
      return to_integer(spec, raw_value, warnings);
    case FieldKind::choice:
      return to_choice(spec, raw_value);
    case FieldKind::list: {
      const std::string v = strip_decorations(raw_value);
      if (to_lower(v) == "none") return std::vector<std::string>{};
      std::vector<std::string> items;
      for (auto& item : split_commas(v)) items.push_back(strip_decorations(item));
      return items;
    }
    case FieldKind::text:
      break;
  }
  return strip_decorations(raw_value);
}

std::string describe(const FieldValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  std::string out;
  for (const auto& item : std::get<std::vector<std::string>>(v)) out += item + ",";
  return out;
}

struct Stripped {
  std::string text;
  std::optional<std::string> trace;
  bool unclosed = false;
};

Stripped strip_thinking(std::string_view raw) {
  Stripped out;
  const std::string lower = to_lower(raw);
  std::vector<std::string> pieces;
  std::size_t cursor = 0;
  while (true) {
    const std::size_t open = lower.find("<think>", cursor);
    if (open == std::string::npos) break;
    out.text.append(raw.substr(cursor, open - cursor));
    const std::size_t body = open + 7;
    const std::size_t close = lower.find("</think>", body);
    if (close == std::string::npos) {
      pieces.push_back(trim(raw.substr(body)));
      out.unclosed = true;
      cursor = raw.size();
      break;
    }
    pieces.push_back(trim(raw.substr(body, close - body)));
    cursor = close + 8;
  }
  if (cursor < raw.size()) out.text.append(raw.substr(cursor));
  if (!pieces.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      if (i > 0) joined += "\n";
      joined += pieces[i];
    }
    out.trace = std::move(joined);
  }
  return out;
}

}  // namespace

std::string_view to_string(SchemaKind kind) {
  switch (kind) {
    case SchemaKind::storyteller: return "storyteller";
    case SchemaKind::card_play: return "card-play";
    case SchemaKind::vote: return "vote";
    case SchemaKind::attuned_sender: return "attuned-sender";
    case SchemaKind::attuned_guesser: return "attuned-guesser";
    case SchemaKind::interpretation: return "interpretation";
    case SchemaKind::story: return "story";
    case SchemaKind::research: return "research";
    case SchemaKind::judge: return "judge";
    case SchemaKind::decode_judge: return "decode-judge";
    case SchemaKind::awareness: return "awareness";
    case SchemaKind::free_text: return "free-text";
  }
  return "unknown";
}

SchemaKind schema_kind_from_string(std::string_view name) {
  for (auto k : {SchemaKind::storyteller, SchemaKind::card_play, SchemaKind::vote,
                 SchemaKind::attuned_sender, SchemaKind::attuned_guesser,
                 SchemaKind::interpretation, SchemaKind::story, SchemaKind::research,
                 SchemaKind::judge, SchemaKind::decode_judge, SchemaKind::awareness,
                 SchemaKind::free_text}) {
    if (to_string(k) == name) return k;
  }
  throw ParseError("unknown schema: " + std::string(name));
}

const FieldSpec* PhaseSchema::field(std::string_view name) const {
  for (const auto& f : fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

PhaseSchema make_schema(SchemaKind kind, const SchemaOptions& options) {
  PhaseSchema s;
  s.kind = kind;
  const std::int64_t last_label = options.option_count - 1;
  switch (kind) {
    case SchemaKind::storyteller:
      s.structured_object = "StorytellerOutput";
      s.fields.push_back(label_int("card", {"Chosen Card"}, 0, last_label, "storyteller_card"));
      s.fields.push_back(label_text("clue", {"Clue"}, "clue"));
      if (options.story_refs) {
        FieldSpec refs = label_text("referenced_stories", {"Referenced Stories"},
                                    "referenced_stories");
        refs.kind = FieldKind::list;
        s.fields.push_back(std::move(refs));
      }
      break;
    case SchemaKind::card_play:
      s.structured_object = "CardPlayOutput";
      s.fields.push_back(label_int("card", {"My chosen card to play is", "Chosen Card"}, 0,
                                   last_label, "played_card"));
      break;
    case SchemaKind::vote:
      s.structured_object = "VoteOutput";
      s.fields.push_back(label_int("vote", {"I vote for card", "Vote"}, 0, last_label, "voted_card"));
      break;
    case SchemaKind::attuned_sender:
      s.structured_object = "SenderOutput";
      s.fields.push_back(tag_field("clue", FieldKind::text));
      break;
    case SchemaKind::attuned_guesser: {
      s.structured_object = "GuesserOutput";
      FieldSpec guess = tag_field("guess", FieldKind::integer);
      guess.min = 0;
      guess.max = 100;
      guess.clamp = true;
      guess.accept_real = true;
      s.fields.push_back(std::move(guess));
      break;
    }
    case SchemaKind::interpretation: {
      FieldSpec label = tag_field("interpretation", FieldKind::choice);
      label.choices = {"banned", "celebrated", "neither"};
      s.fields.push_back(std::move(label));
      s.fields.push_back(tag_field("explanation", FieldKind::text));
      break;
    }
    case SchemaKind::story:
      s.fields.push_back(tag_field("plan", FieldKind::text, false));
      s.fields.push_back(tag_field("story", FieldKind::text));
      break;
    case SchemaKind::research:
      s.fields.push_back(tag_field("key_players", FieldKind::list));
      s.fields.push_back(tag_field("sub_events", FieldKind::list));
      s.fields.push_back(tag_field("narrative_themes", FieldKind::list));
      s.fields.push_back(tag_field("pov_character", FieldKind::text));
      break;
    case SchemaKind::judge:
      s.fields.push_back(label_int("choice", {"Choice"}, 1, 4, "choice"));
      s.fields.push_back(label_text("reasoning", {"Reasoning"}, "reasoning"));
      break;
    case SchemaKind::decode_judge: {
      FieldSpec verdict = tag_field("identified", FieldKind::choice);
      verdict.choices = {"yes", "no"};
      s.fields.push_back(std::move(verdict));
      s.fields.push_back(tag_field("evidence", FieldKind::text, false));
      break;
    }
    case SchemaKind::awareness: {
      FieldSpec verdict = tag_field("aware", FieldKind::choice);
      verdict.choices = {"yes", "no"};
      s.fields.push_back(std::move(verdict));
      s.fields.push_back(tag_field("partner", FieldKind::text, false));
      break;
    }
    case SchemaKind::free_text:
      break;
  }
  return s;
}

bool ParsedOutput::has(std::string_view name) const { return fields.count(std::string(name)) > 0; }

std::int64_t ParsedOutput::integer(std::string_view name) const {
  auto it = fields.find(std::string(name));
  if (it == fields.end()) throw ParseError("missing field: " + std::string(name));
  if (const auto* v = std::get_if<std::int64_t>(&it->second)) return *v;
  throw ParseError("field is not an integer: " + std::string(name));
}

const std::string& ParsedOutput::text(std::string_view name) const {
  auto it = fields.find(std::string(name));
  if (it == fields.end()) throw ParseError("missing field: " + std::string(name));
  if (const auto* v = std::get_if<std::string>(&it->second)) return *v;
  throw ParseError("field is not text: " + std::string(name));
}

const std::vector<std::string>& ParsedOutput::list(std::string_view name) const {
  static const std::vector<std::string> kEmpty;
  auto it = fields.find(std::string(name));
  if (it == fields.end()) return kEmpty;
  if (const auto* v = std::get_if<std::vector<std::string>>(&it->second)) return *v;
  throw ParseError("field is not a list: " + std::string(name));
}

std::vector<std::string> extract_tag_bodies(std::string_view text, std::string_view tag) {
  const std::string lower = to_lower(text);
  const std::string open = "<" + to_lower(tag) + ">";
  const std::string close = "</" + to_lower(tag) + ">";
  std::vector<std::string> bodies;
  std::size_t cursor = 0;
  while (true) {
    const std::size_t start = lower.find(open, cursor);
    if (start == std::string::npos) break;
    const std::size_t body = start + open.size();
    const std::size_t end = lower.find(close, body);
    if (end == std::string::npos) {
      bodies.emplace_back(text.substr(body));
      break;
    }
    bodies.emplace_back(text.substr(body, end - body));
    cursor = end + close.size();
  }
  return bodies;
}

ParsedOutput parse_tagged(std::string_view raw, const PhaseSchema& schema) {
  ParsedOutput out;
  Stripped stripped = strip_thinking(raw);
  out.thinking_trace = std::move(stripped.trace);
  if (stripped.unclosed) out.warnings.push_back("unclosed <think> tag");
  const std::string& text = stripped.text;

  if (schema.kind == SchemaKind::free_text) {
    out.fields["text"] = trim(text);
    return out;
  }

  const std::string lower = to_lower(text);
  // Every label start in the text; a label's value stops at the next one.
  std::vector<std::size_t> boundaries;
  for (const auto& f : schema.fields) {
    if (f.locator != Locator::label) continue;
    for (const auto& key : f.keys) {
      for (const auto& hit : find_label(text, lower, key)) boundaries.push_back(hit.line_begin);
    }
  }
  std::sort(boundaries.begin(), boundaries.end());

  for (const auto& f : schema.fields) {
    std::vector<std::string> raw_values;
    if (f.locator == Locator::tag) {
      for (const auto& key : f.keys) {
        for (auto& body : extract_tag_bodies(text, key)) raw_values.push_back(std::move(body));
      }
    } else {
      std::vector<LabelHit> hits;
      for (const auto& key : f.keys) {
        auto more = find_label(text, lower, key);
        hits.insert(hits.end(), more.begin(), more.end());
      }
      std::sort(hits.begin(), hits.end(),
                [](const LabelHit& a, const LabelHit& b) { return a.value_begin < b.value_begin; });
      for (const auto& hit : hits) {
        auto next = std::upper_bound(boundaries.begin(), boundaries.end(), hit.line_begin);
        const std::size_t end = next == boundaries.end() ? text.size() : *next;
        std::string_view value(text.data() + hit.value_begin, end - hit.value_begin);
        if (f.kind == FieldKind::integer) value = value.substr(0, value.find('\n'));
        raw_values.emplace_back(value);
      }
    }

    std::vector<FieldValue> values;
    for (const auto& rv : raw_values) {
      if (trim(rv).empty()) continue;
      values.push_back(convert(f, rv, out.warnings));
    }
    if (values.empty()) {
      if (f.required) {
        throw ParseError(std::string(to_string(schema.kind)) + " output is missing field '" +
                         f.name + "'");
      }
      continue;
    }
    if (values.size() > 1) {
      const bool conflicting = std::any_of(values.begin(), values.end(),
                                           [&](const FieldValue& v) { return v != values.back(); });
      if (conflicting) {
        out.warnings.push_back("field '" + f.name + "' given " + std::to_string(values.size()) +
                               " times; kept last value '" + describe(values.back()) + "'");
      }
    }
    out.fields[f.name] = values.back();
  }
  return out;
}

std::string render_canonical(const ParsedOutput& output, const PhaseSchema& schema) {
  std::string out;
  if (output.thinking_trace) out += "<think>" + *output.thinking_trace + "</think>\n";
  if (schema.kind == SchemaKind::free_text) {
    if (output.has("text")) out += output.text("text");
    return out;
  }
  for (const auto& f : schema.fields) {
    auto it = output.fields.find(f.name);
    if (it == output.fields.end()) continue;
    std::string value;
    if (const auto* list = std::get_if<std::vector<std::string>>(&it->second)) {
      if (list->empty() && f.locator == Locator::label) value = "None";
      for (std::size_t i = 0; i < list->size(); ++i) value += (i ? ", " : "") + (*list)[i];
    } else {
      value = describe(it->second);
    }
    if (f.locator == Locator::label) {
      out += f.keys.front() + ": " + value + "\n";
    } else {
      out += "<" + f.keys.front() + ">" + value + "</" + f.keys.front() + ">\n";
    }
  }
  return out;
}

ParsedOutput parse_structured(const nlohmann::json& object, const PhaseSchema& schema) {
  if (!object.is_object()) throw ParseError("structured output is not an object");
  ParsedOutput out;
  if (object.contains("thinking") && object["thinking"].is_string()) {
    out.thinking_trace = object["thinking"].get<std::string>();
  }
  for (const auto& f : schema.fields) {
    const std::string& key = f.structured_name.empty() ? f.name : f.structured_name;
    if (!object.contains(key) || object[key].is_null()) {
      if (f.required) throw ParseError("structured output is missing field '" + key + "'");
      continue;
    }
    const auto& v = object[key];
    if (f.kind == FieldKind::list && v.is_array()) {
      std::vector<std::string> items;
      for (const auto& item : v) items.push_back(item.is_string() ? item.get<std::string>() : item.dump());
      out.fields[f.name] = std::move(items);
    } else {
      out.fields[f.name] = convert(f, v.is_string() ? v.get<std::string>() : v.dump(), out.warnings);
    }
  }
  return out;
}

nlohmann::json structured_json_schema(const PhaseSchema& schema) {
  nlohmann::json props = nlohmann::json::object();
  nlohmann::json required = nlohmann::json::array();
  for (const auto& f : schema.fields) {
    const std::string& key = f.structured_name.empty() ? f.name : f.structured_name;
    switch (f.kind) {
      case FieldKind::integer: props[key] = {{"type", "integer"}}; break;
      case FieldKind::list: props[key] = {{"type", "array"}, {"items", {{"type", "string"}}}}; break;
      case FieldKind::choice: props[key] = {{"type", "string"}, {"enum", f.choices}}; break;
      case FieldKind::text: props[key] = {{"type", "string"}}; break;
    }
    required.push_back(key);
  }
  props["thinking"] = {{"type", "string"}};
  required.push_back("thinking");
  return {{"type", "object"}, {"properties", props}, {"required", required},
          {"additionalProperties", false}};
}

nlohmann::json to_json(const ParsedOutput& output) {
  nlohmann::json fields = nlohmann::json::object();
  for (const auto& [name, value] : output.fields) {
    std::visit([&](const auto& v) { fields[name] = v; }, value);
  }
  nlohmann::json j = {{"fields", fields}};
  if (output.thinking_trace) j["thinking_trace"] = *output.thinking_trace;
  if (!output.warnings.empty()) j["warnings"] = output.warnings;
  return j;
}

ParsedOutput parsed_output_from_json(const nlohmann::json& j) {
  ParsedOutput out;
  if (j.contains("thinking_trace")) out.thinking_trace = j["thinking_trace"].get<std::string>();
  if (j.contains("warnings")) out.warnings = j["warnings"].get<std::vector<std::string>>();
  for (const auto& [name, value] : j.at("fields").items()) {
    if (value.is_number_integer()) {
      out.fields[name] = value.get<std::int64_t>();
    } else if (value.is_array()) {
      out.fields[name] = value.get<std::vector<std::string>>();
    } else {
      out.fields[name] = value.get<std::string>();
    }
  }
  return out;
}

}  // namespace arena
