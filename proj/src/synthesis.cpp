#include "synsem/synthesis.hpp"

#include "synsem/dependency_tree.hpp"
#include "synsem/parallel.hpp"
#include "synsem/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

namespace synsem {
namespace {

const std::string& draw(std::span<const WordCount> words, bool weighted, Rng& rng) {
  if (weighted) {
    std::vector<double> w(words.size());
    std::transform(words.begin(), words.end(), w.begin(),
                   [](const WordCount& c) { return c.frequency; });
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    return words[pick(rng)].word;
  }
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  return words[pick(rng)].word;
}

bool same_words(const Sentence& a, const Sentence& b) {
  return std::equal(a.tokens.begin(), a.tokens.end(), b.tokens.begin(), b.tokens.end(),
                    [](const AnnotatedToken& x, const AnnotatedToken& y) { return x.text == y.text; });
}

bool same_structure(const Sentence& a, const Sentence& b) {
  return std::equal(a.tokens.begin(), a.tokens.end(), b.tokens.begin(), b.tokens.end(),
                    [](const AnnotatedToken& x, const AnnotatedToken& y) {
                      return x.head == y.head && x.dep == y.dep;
                    });
}

}  // namespace

std::vector<Candidate> synthesize_variants(const Sentence& target, const Lexicon& lex,
                                           int k_prime, std::uint64_t seed,
                                           bool frequency_weighted) {
  if (k_prime < 1) throw std::invalid_argument("synthesize_variants: k_prime must be >= 1");
  Rng rng(seed);
  std::vector<Candidate> out(static_cast<std::size_t>(k_prime));
  for (auto& cand : out) {
    cand.sentence = target;
    for (auto& tok : cand.sentence.tokens) {
      auto words = lex.by_tags(tok.pos, tok.dep);
      if (words.empty()) {
        words = lex.by_pos(tok.pos);
        if (words.empty()) {
          cand.copied_target = true;
          continue;
        }
        ++cand.pos_backoffs;
      }
      tok.text = draw(words, frequency_weighted, rng);
    }
  }
  return out;
}

VariantSet select_variants(std::span<const Sentence> candidates, const Sentence& target, int k,
                           double threshold) {
  if (k < 1) throw std::invalid_argument("select_variants: k must be >= 1");
  const auto target_pos = target.pos_sequence();
  struct Scored {
    std::size_t index;
    double similarity;
  };
  std::vector<Scored> kept;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.size() != target.size() || same_words(c, target)) continue;
    if (c.pos_sequence() != target_pos) continue;
    double sim = 0.0;
    if (target.size() < 3) {
      if (!same_structure(c, target)) continue;
      sim = 1.0;
    } else {
      const auto r = tree_similarity(c, target);
      if (!r) continue;
      sim = *r;
    }
    if (sim >= threshold) kept.push_back({i, sim});
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Scored& a, const Scored& b) { return a.similarity > b.similarity; });
  VariantSet out;
  out.target = target;
  const auto n = std::min(kept.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    out.variants.push_back(candidates[kept[i].index]);
    out.similarities.push_back(kept[i].similarity);
  }
  out.insufficient = n < static_cast<std::size_t>(k);
  return out;
}

std::vector<VariantSet> synthesize_story(const Transcript& t, const Lexicon& lex,
                                         const SynthesisConfig& cfg, std::uint64_t seed,
                                         const Reparser& reparse, int workers) {
  std::vector<VariantSet> out(t.sentences.size());
  parallel_for(t.sentences.size(), workers, [&](std::size_t i) {
    const auto& target = t.sentences[i];
    auto cands = synthesize_variants(target, lex, cfg.k_prime,
                                     sentence_seed(seed, t.story_id, target.sentence_index),
                                     cfg.frequency_weighted);
    std::vector<Sentence> sentences;
    sentences.reserve(cands.size());
    for (auto& c : cands) {
      sentences.push_back(reparse ? reparse(c.sentence) : std::move(c.sentence));
    }
    out[i] = select_variants(sentences, target, cfg.k, cfg.threshold);
  });
  return out;
}

void write_variant_sets(const std::filesystem::path& path, std::span<const VariantSet> sets) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string(), path.string());
  for (const auto& set : sets) {
    nlohmann::json variants = nlohmann::json::array();
    for (std::size_t i = 0; i < set.variants.size(); ++i) {
      variants.push_back({{"sentence", nlohmann::json::parse(sentence_to_json_line(set.variants[i]))},
                          {"similarity", set.similarities[i]}});
    }
    nlohmann::json obj = {{"story", set.target.story_id},
                          {"sent_index", set.target.sentence_index},
                          {"insufficient", set.insufficient},
                          {"target", nlohmann::json::parse(sentence_to_json_line(set.target))},
                          {"variants", variants}};
    out << obj.dump() << '\n';
  }
}

std::vector<VariantSet> load_variant_sets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open variant file: " + path.string(), path.string());
  std::vector<VariantSet> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(where + ": " + e.what());
    }
    try {
      VariantSet set;
      set.target = parse_sentence_line(obj.at("target").dump(), where);
      set.insufficient = obj.at("insufficient").get<bool>();
      for (const auto& v : obj.at("variants")) {
        set.variants.push_back(parse_sentence_line(v.at("sentence").dump(), where));
        set.similarities.push_back(v.at("similarity").get<double>());
      }
      out.push_back(std::move(set));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace synsem
