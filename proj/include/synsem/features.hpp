#pragma once

#include "synsem/common.hpp"
#include "synsem/transcript.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace synsem {

/// Word- or event-level features bound to onset times. TR-level features
/// (rates) carry the TR times as onsets.
struct FeatureBundle {
  std::string name;
  std::optional<int> layer;
  Matrix matrix;  // M x d
  std::vector<double> onsets;
};

void validate_features(const FeatureBundle& f);

/// Words per TR, counted by nearest-TR assignment of word onsets (N x 1).
FeatureBundle word_rate(const Transcript& t);

/// Phones per TR, counted by nearest-TR assignment of phone onsets (N x 1).
FeatureBundle phone_rate(const Transcript& t);

using PhoneKey = std::tuple<std::string, std::string, std::string>;  // phone, stress, tone

/// Lexicographically ordered set of (phone, stress, tone) triples.
class PhoneVocabulary {
 public:
  PhoneVocabulary() = default;
  explicit PhoneVocabulary(std::vector<PhoneKey> keys);

  static PhoneVocabulary build(std::span<const Transcript> transcripts);

  std::size_t size() const noexcept { return keys_.size(); }
  const std::vector<PhoneKey>& keys() const noexcept { return keys_; }
  std::optional<std::size_t> find(const PhoneEvent& p) const;

 private:
  std::vector<PhoneKey> keys_;
  std::map<PhoneKey, std::size_t> index_;
};

/// One row per phone event with a 1 at its triple's column; triples absent
/// from the vocabulary give an all-zero row.
FeatureBundle phone_category_onehot(const Transcript& t, const PhoneVocabulary& vocab);

/// Each token replaced by a uniform draw from the story's tokens
/// (punctuation included). Onsets and the tree shape stay positional.
std::vector<Sentence> control_random_words(const Transcript& t, std::uint64_t seed);

/// Tokens permuted within each sentence. Heads follow their tokens; onsets
/// stay with positions.
std::vector<Sentence> control_shuffle_within_sentence(const Transcript& t, std::uint64_t seed);

struct MatchLengthResult {
  std::vector<Sentence> sentences;
  std::vector<int> skipped;  // sentence_index of stimulus sentences with no donor
};

/// Each sentence replaced by a uniformly drawn donor sentence of identical
/// length; stimulus onsets are reassigned positionally.
MatchLengthResult control_match_length_sentences(const Transcript& t,
                                                 std::span<const Sentence> donors,
                                                 std::uint64_t seed);

}  // namespace synsem
