#include "arena/types.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace arena {
namespace {

// Tab-separated rows; '#' comments and the header row are skipped.
std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& path,
                                               std::size_t columns) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (cells.size() + 1 < columns) {
      const auto tab = line.find('\t', start);
      if (tab == std::string::npos) break;
      cells.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    cells.push_back(line.substr(start));
    if (cells.size() != columns) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(columns) + " tab-separated columns");
    }
    for (auto& c : cells) c = trim(c);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

StoryCorpus StoryCorpus::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("story directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  StoryCorpus corpus;
  for (const auto& file : files) {
    Story story;
    story.id = file.stem().string();
    story.text = trim(read_file(file));
    story.title = story.id;
    const auto first_line = story.text.substr(0, story.text.find('\n'));
    if (first_line.rfind("Title:", 0) == 0) story.title = trim(first_line.substr(6));
    corpus.add(std::move(story));
  }
  return corpus;
}

void StoryCorpus::add(Story story) {
  if (story.text.empty()) throw ConfigError("story " + story.id + " is empty");
  const std::string id = story.id;
  if (!stories_.emplace(id, std::move(story)).second) {
    throw ConfigError("duplicate story id: " + id);
  }
}

const Story& StoryCorpus::at(const std::string& id) const {
  auto it = stories_.find(id);
  if (it == stories_.end()) throw ConfigError("unknown story id: " + id);
  return it->second;
}

std::vector<std::string> StoryCorpus::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : stories_) out.push_back(id);
  return out;
}

std::vector<Card> load_deck_manifest(const std::filesystem::path& path) {
  std::vector<Card> deck;
  std::set<int> seen;
  for (auto& row : read_tsv(path, 3)) {
    Card card;
    try {
      card.card_id = std::stoi(row[0]);
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ": bad card id '" + row[0] + "'");
    }
    card.image_ref = row[1];
    card.caption = row[2];
    if (card.caption.empty()) throw ConfigError("card " + row[0] + " has an empty caption");
    if (!seen.insert(card.card_id).second) throw ConfigError("duplicate card id " + row[0]);
    deck.push_back(std::move(card));
  }
  return deck;
}

std::vector<Spectrum> load_spectrum_deck(const std::filesystem::path& path) {
  std::vector<Spectrum> deck;
  for (auto& row : read_tsv(path, 2)) {
    if (row[0].empty() || row[1].empty() || row[0] == row[1]) {
      throw ConfigError(path.string() + ": spectrum labels must be distinct and non-empty");
    }
    deck.push_back({row[0], row[1]});
  }
  return deck;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += c;
    }
  }
  return out;
}

std::vector<std::string> split_commas(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    if (comma == std::string_view::npos) comma = s.size();
    auto item = trim(s.substr(start, comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = comma + 1;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp." +
                   std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace arena
