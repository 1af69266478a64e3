#pragma once

#include "synsem/common.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace synsem {

/// Dependency head of a token: either ROOT or an index into the sentence.
/// Files encode ROOT as -1.
class Head {
 public:
  constexpr Head() = default;
  static constexpr Head root() { return Head(); }
  static constexpr Head token(int index) { return Head(index); }
  static Head decode(long long encoded);

  constexpr bool is_root() const noexcept { return index_ < 0; }
  int index() const;
  constexpr int encoded() const noexcept { return index_; }

  friend constexpr bool operator==(Head, Head) = default;

 private:
  constexpr explicit Head(int index) : index_(index) {}
  int index_ = -1;
};

struct AnnotatedToken {
  std::string text;
  std::string pos;
  std::string dep;
  Head head;
  double onset_s = 0.0;
  double offset_s = 0.0;
  bool is_content = false;

  friend bool operator==(const AnnotatedToken&, const AnnotatedToken&) = default;
};

struct Sentence {
  std::string story_id;
  int sentence_index = 0;
  std::vector<AnnotatedToken> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  std::vector<std::string> pos_sequence() const;
  std::vector<int> heads() const;  // -1 for ROOT
  std::string text() const;        // tokens joined by single spaces

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct PhoneEvent {
  std::string label;
  std::string stress;
  std::string tone;
  double onset_s = 0.0;
  double offset_s = 0.0;

  friend bool operator==(const PhoneEvent&, const PhoneEvent&) = default;
};

struct Transcript {
  std::string story_id;
  std::vector<Sentence> sentences;
  std::vector<PhoneEvent> phones;
  std::vector<double> tr_times;

  std::size_t word_count() const noexcept;
  std::vector<double> word_onsets() const;
  std::vector<const AnnotatedToken*> words() const;
};

/// POS tags treated as content words when a file does not say otherwise.
bool is_content_pos(const std::string& pos);

/// Throws ValidationError on any broken token, head or ordering invariant.
void validate_sentence(const Sentence& s);
void validate_transcript(const Transcript& t);

struct TranscriptFiles {
  std::filesystem::path sentences;            // one sentence object per line
  std::optional<std::filesystem::path> phones;  // one phone event per line
  std::filesystem::path meta;                 // {story, tr_times}
};

Transcript load_transcript(const TranscriptFiles& files);

/// Reads a sentence JSONL file (e.g. a donor corpus); every sentence is validated.
std::vector<Sentence> load_sentences(const std::filesystem::path& path);

void write_sentences(const std::filesystem::path& path, const std::vector<Sentence>& sentences);
void write_phones(const std::filesystem::path& path, const std::vector<PhoneEvent>& phones);
void write_story_meta(const std::filesystem::path& path, const Transcript& t);

/// Parses one sentence JSONL line; `where` prefixes error messages.
Sentence parse_sentence_line(const std::string& line, const std::string& where);
std::string sentence_to_json_line(const Sentence& s);

}  // namespace synsem
