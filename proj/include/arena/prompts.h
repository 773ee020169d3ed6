#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace arena::prompts {

using Bindings = std::map<std::string, std::string, std::less<>>;

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A stored prompt. Only the declared variables are placeholders; any other
// brace text in the template (e.g. "Choice: {choice}") is literal output.
// Placeholders may be written {name} or {{name}}.
struct Template {
  std::string id;
  std::string text;
  std::vector<std::string> variables;
};

// A substitution site in rendered output, [begin, end) in bytes.
struct Substitution {
  std::size_t template_begin = 0;
  std::size_t template_end = 0;
  std::size_t output_begin = 0;
  std::size_t output_end = 0;
  std::string variable;
};

const Template& get(std::string_view id);
std::vector<std::string> ids();

// Throws PromptError on an unknown id or a declared variable missing from
// `bindings`.
std::string render(std::string_view id, const Bindings& bindings);
std::string render(const Template& tmpl, const Bindings& bindings,
                   std::vector<Substitution>* sites = nullptr);

// 40-dash divider used between stories in story blocks.
inline constexpr std::string_view kStoryDivider = "----------------------------------------";
std::string join_stories(const std::vector<std::string>& stories);

namespace detail {
struct RawTemplate {
  const char* id;
  const char* text;
  std::vector<const char*> variables;
};
const std::vector<RawTemplate>& raw_templates();
}  // namespace detail

}  // namespace arena::prompts
