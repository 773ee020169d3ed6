#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace arena {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One Visual Allusions picture card. Scripted agents only ever look at the
/// caption; the image is an opaque asset handed to model backends.
struct Card {
  int card_id = 0;
  std::string image_ref;
  std::string caption;

  friend bool operator==(const Card&, const Card&) = default;
};

/// Attuned spectrum: left label is value 0, right label is value 100.
struct Spectrum {
  std::string left_label;
  std::string right_label;

  friend bool operator==(const Spectrum&, const Spectrum&) = default;
};

struct Story {
  std::string id;
  std::string title;
  std::string text;
};

// Stories keyed by id. Directory layout: one UTF-8 .txt file per story, the
// file stem is the id; a first line "Title: ..." sets the title, otherwise
// the id doubles as the title.
class StoryCorpus {
 public:
  StoryCorpus() = default;
  static StoryCorpus load_dir(const std::filesystem::path& dir);

  void add(Story story);
  const Story& at(const std::string& id) const;
  bool contains(const std::string& id) const { return stories_.count(id) > 0; }
  std::vector<std::string> ids() const;
  std::size_t size() const { return stories_.size(); }

 private:
  std::map<std::string, Story> stories_;
};

std::vector<Card> load_deck_manifest(const std::filesystem::path& path);
std::vector<Spectrum> load_spectrum_deck(const std::filesystem::path& path);

// Shared text helpers.
std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::string normalize_whitespace(std::string_view s);
std::vector<std::string> split_commas(std::string_view s);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace arena
