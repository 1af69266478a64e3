#pragma once

#include "synsem/transcript.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace synsem {

struct WordCount {
  std::string word;
  double frequency = 0.0;

  friend bool operator==(const WordCount&, const WordCount&) = default;
};

/// Words observed under each (POS, dependency) pair and under each POS
/// alone. Word lists are sorted by word.
class Lexicon {
 public:
  static Lexicon build(std::span<const Sentence> corpus);

  void add(const std::string& pos, const std::string& dep, const std::string& word,
           double frequency = 1.0);

  /// Empty span when the key was never observed.
  std::span<const WordCount> by_tags(const std::string& pos, const std::string& dep) const;
  std::span<const WordCount> by_pos(const std::string& pos) const;

  bool empty() const noexcept { return by_tags_.empty(); }
  std::size_t tag_pair_count() const noexcept { return by_tags_.size(); }

  /// One JSON object per (pos, dep) key: {"pos","dep","words":[{"w","f"},...]}.
  void save(const std::filesystem::path& path) const;
  static Lexicon load(const std::filesystem::path& path);

  friend bool operator==(const Lexicon&, const Lexicon&) = default;

 private:
  static void insert(std::vector<WordCount>& list, const std::string& word, double frequency);

  std::map<std::pair<std::string, std::string>, std::vector<WordCount>> by_tags_;
  std::map<std::string, std::vector<WordCount>> by_pos_;
};

}  // namespace synsem
