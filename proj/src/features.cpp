#include "synsem/features.hpp"

#include "synsem/align.hpp"
#include "synsem/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace synsem {
namespace {

FeatureBundle count_per_tr(const std::string& name, std::span<const double> onsets,
                           const std::vector<double>& tr_times) {
  const auto asg = nearest_tr(onsets, tr_times);
  FeatureBundle f;
  f.name = name;
  f.matrix = Matrix::Zero(static_cast<Index>(tr_times.size()), 1);
  for (Index i : asg.index) f.matrix(i, 0) += 1.0;
  f.onsets = tr_times;
  return f;
}

}  // namespace

void validate_features(const FeatureBundle& f) {
  if (static_cast<std::size_t>(f.matrix.rows()) != f.onsets.size()) {
    throw ValidationError("feature bundle '" + f.name + "': " + std::to_string(f.matrix.rows()) +
                          " rows but " + std::to_string(f.onsets.size()) + " onsets");
  }
  if (!f.matrix.allFinite()) {
    throw ValidationError("feature bundle '" + f.name + "' has non-finite values");
  }
}

FeatureBundle word_rate(const Transcript& t) {
  const auto onsets = t.word_onsets();
  return count_per_tr("word_rate", onsets, t.tr_times);
}

FeatureBundle phone_rate(const Transcript& t) {
  std::vector<double> onsets;
  onsets.reserve(t.phones.size());
  for (const auto& p : t.phones) onsets.push_back(p.onset_s);
  return count_per_tr("phone_rate", onsets, t.tr_times);
}

PhoneVocabulary::PhoneVocabulary(std::vector<PhoneKey> keys) : keys_(std::move(keys)) {
  std::sort(keys_.begin(), keys_.end());
  keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
  for (std::size_t i = 0; i < keys_.size(); ++i) index_.emplace(keys_[i], i);
}

PhoneVocabulary PhoneVocabulary::build(std::span<const Transcript> transcripts) {
  std::vector<PhoneKey> keys;
  for (const auto& t : transcripts) {
    for (const auto& p : t.phones) keys.emplace_back(p.label, p.stress, p.tone);
  }
  return PhoneVocabulary(std::move(keys));
}

std::optional<std::size_t> PhoneVocabulary::find(const PhoneEvent& p) const {
  const auto it = index_.find(PhoneKey{p.label, p.stress, p.tone});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

FeatureBundle phone_category_onehot(const Transcript& t, const PhoneVocabulary& vocab) {
  FeatureBundle f;
  f.name = "phone_category";
  f.matrix = Matrix::Zero(static_cast<Index>(t.phones.size()), static_cast<Index>(vocab.size()));
  f.onsets.reserve(t.phones.size());
  for (std::size_t m = 0; m < t.phones.size(); ++m) {
    if (const auto col = vocab.find(t.phones[m])) {
      f.matrix(static_cast<Index>(m), static_cast<Index>(*col)) = 1.0;
    }
    f.onsets.push_back(t.phones[m].onset_s);
  }
  return f;
}

std::vector<Sentence> control_random_words(const Transcript& t, std::uint64_t seed) {
  const auto pool = t.words();
  if (pool.empty()) throw std::invalid_argument("control_random_words: empty story");
  Rng rng(derive_seed(seed, "control/random-words/" + t.story_id));
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<Sentence> out = t.sentences;
  for (auto& s : out) {
    for (auto& tok : s.tokens) {
      const auto& src = *pool[pick(rng)];
      tok.text = src.text;
      tok.pos = src.pos;
      tok.is_content = src.is_content;
    }
  }
  return out;
}

std::vector<Sentence> control_shuffle_within_sentence(const Transcript& t, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "control/shuffle/" + t.story_id));
  std::vector<Sentence> out;
  out.reserve(t.sentences.size());
  for (const auto& s : t.sentences) {
    const auto m = s.tokens.size();
    std::vector<std::size_t> perm(m);  // new position -> old position
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> new_pos(m);
    for (std::size_t p = 0; p < m; ++p) new_pos[perm[p]] = static_cast<int>(p);

    Sentence shuffled = s;
    for (std::size_t p = 0; p < m; ++p) {
      const auto& src = s.tokens[perm[p]];
      auto& dst = shuffled.tokens[p];
      dst.text = src.text;
      dst.pos = src.pos;
      dst.dep = src.dep;
      dst.is_content = src.is_content;
      dst.head = src.head.is_root() ? Head::root() : Head::token(new_pos[src.head.index()]);
      // onset/offset stay with position p
    }
    out.push_back(std::move(shuffled));
  }
  return out;
}

MatchLengthResult control_match_length_sentences(const Transcript& t,
                                                 std::span<const Sentence> donors,
                                                 std::uint64_t seed) {
  std::unordered_map<std::size_t, std::vector<const Sentence*>> by_length;
  for (const auto& d : donors) by_length[d.size()].push_back(&d);

  Rng rng(derive_seed(seed, "control/match-length/" + t.story_id));
  MatchLengthResult result;
  for (const auto& s : t.sentences) {
    const auto it = by_length.find(s.size());
    if (it == by_length.end()) {
      result.skipped.push_back(s.sentence_index);
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, it->second.size() - 1);
    const Sentence& donor = *it->second[pick(rng)];
    Sentence replaced;
    replaced.story_id = s.story_id;
    replaced.sentence_index = s.sentence_index;
    replaced.tokens = donor.tokens;
    for (std::size_t p = 0; p < s.size(); ++p) {
      replaced.tokens[p].onset_s = s.tokens[p].onset_s;
      replaced.tokens[p].offset_s = s.tokens[p].offset_s;
    }
    result.sentences.push_back(std::move(replaced));
  }
  return result;
}

}  // namespace synsem
