#include "arena/prompts.h"

#include <algorithm>

namespace arena::prompts {
namespace {

const std::map<std::string, Template, std::less<>>& registry() {
  static const auto* table = [] {
    auto* out = new std::map<std::string, Template, std::less<>>();
    for (const auto& raw : detail::raw_templates()) {
      Template t;
      t.id = raw.id;
      t.text = raw.text;
      // Files end with one newline that is not part of the prompt.
      if (!t.text.empty() && t.text.back() == '\n') t.text.pop_back();
      for (const char* v : raw.variables) t.variables.emplace_back(v);
      out->emplace(t.id, std::move(t));
    }
    return out;
  }();
  return *table;
}

bool is_declared(const Template& t, std::string_view name) {
  return std::find(t.variables.begin(), t.variables.end(), name) != t.variables.end();
}

}  // namespace

const Template& get(std::string_view id) {
  const auto& reg = registry();
  auto it = reg.find(id);
  if (it == reg.end()) throw PromptError("unknown template: " + std::string(id));
  return it->second;
}

std::vector<std::string> ids() {
  std::vector<std::string> out;
  for (const auto& [id, _] : registry()) out.push_back(id);
  return out;
}

std::string render(std::string_view id, const Bindings& bindings) {
  return render(get(id), bindings);
}

std::string render(const Template& tmpl, const Bindings& bindings,
                   std::vector<Substitution>* sites) {
  for (const auto& v : tmpl.variables) {
    if (bindings.find(v) == bindings.end()) {
      throw PromptError("template " + tmpl.id + ": unbound variable {" + v + "}");
    }
  }
  const std::string_view text = tmpl.text;
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const bool doubled = i + 1 < text.size() && text[i + 1] == '{';
      const std::size_t name_begin = i + (doubled ? 2 : 1);
      const std::size_t close = text.find('}', name_begin);
      if (close != std::string_view::npos) {
        const std::string_view name = text.substr(name_begin, close - name_begin);
        const std::size_t end = close + (doubled ? 2 : 1);
        const bool closes = !doubled || (close + 1 < text.size() && text[close + 1] == '}');
        if (closes && is_declared(tmpl, name)) {
          const std::string& value = bindings.find(name)->second;
          if (sites) {
            sites->push_back({i, end, out.size(), out.size() + value.size(), std::string(name)});
          }
          out += value;
          i = end;
          continue;
        }
      }
    }
    out += text[i];
    ++i;
  }
  return out;
}

std::string join_stories(const std::vector<std::string>& stories) {
  std::string out;
  for (std::size_t i = 0; i < stories.size(); ++i) {
    if (i > 0) {
      out += "\n\n";
      out += kStoryDivider;
      out += "\n\n";
    }
    out += stories[i];
  }
  return out;
}

}  // namespace arena::prompts
