#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace arena {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The fixed response formats agents answer in.
enum class SchemaKind {
  storyteller,
  card_play,
  vote,
  attuned_sender,
  attuned_guesser,
  interpretation,
  story,
  research,
  judge,
  decode_judge,
  awareness,
  free_text,
};

std::string_view to_string(SchemaKind kind);
SchemaKind schema_kind_from_string(std::string_view name);

enum class FieldKind { integer, text, list, choice };

// How a field is located in raw output: after a "Label:" prefix or inside
// an <tag>...</tag> pair.
enum class Locator { label, tag };

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::text;
  Locator locator = Locator::tag;
  std::vector<std::string> keys;  // label texts or tag names; first is canonical
  bool required = true;
  std::int64_t min = 0;
  std::int64_t max = 0;
  bool clamp = false;       // out-of-range integers are clamped instead of rejected
  bool accept_real = false; // "62.5" rounds half-up instead of truncating
  std::vector<std::string> choices;  // canonical values for choice fields
  std::string structured_name;       // field name in structured-output objects
};

struct PhaseSchema {
  SchemaKind kind = SchemaKind::free_text;
  std::vector<FieldSpec> fields;
  std::string structured_object;  // e.g. "StorytellerOutput"; empty when unsupported

  const FieldSpec* field(std::string_view name) const;
};

struct SchemaOptions {
  int option_count = 6;        // valid integer labels are [0, option_count)
  bool story_refs = false;     // storyteller also reports referenced story titles
};

PhaseSchema make_schema(SchemaKind kind, const SchemaOptions& options = {});

using FieldValue = std::variant<std::int64_t, std::string, std::vector<std::string>>;

struct ParsedOutput {
  std::optional<std::string> thinking_trace;
  std::map<std::string, FieldValue> fields;
  std::vector<std::string> warnings;

  bool has(std::string_view name) const;
  std::int64_t integer(std::string_view name) const;
  const std::string& text(std::string_view name) const;
  const std::vector<std::string>& list(std::string_view name) const;

  friend bool operator==(const ParsedOutput&, const ParsedOutput&) = default;
};

// Splits <think> spans out of raw output and extracts every schema field.
// Tag names match case-insensitively. A field given more than once keeps the
// last occurrence and records a warning.
ParsedOutput parse_tagged(std::string_view raw, const PhaseSchema& schema);

// Inverse of parse_tagged for well-formed outputs.
std::string render_canonical(const ParsedOutput& output, const PhaseSchema& schema);

// Reads a structured-output object (provider JSON mode) into the same shape.
ParsedOutput parse_structured(const nlohmann::json& object, const PhaseSchema& schema);
nlohmann::json structured_json_schema(const PhaseSchema& schema);

// All <tag>...</tag> bodies, in order. Unclosed trailing tags run to the end.
std::vector<std::string> extract_tag_bodies(std::string_view text, std::string_view tag);

nlohmann::json to_json(const ParsedOutput& output);
ParsedOutput parsed_output_from_json(const nlohmann::json& j);

}  // namespace arena
