#pragma once

#include "synsem/lexicon.hpp"
#include "synsem/transcript.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace synsem {

struct SynthesisConfig {
  int k = 10;
  int k_prime = 100;
  double threshold = 0.90;
  bool frequency_weighted = false;
};

struct Candidate {
  Sentence sentence;
  int pos_backoffs = 0;         // tokens drawn from the POS-only index
  bool copied_target = false;   // some token had no lexicon entry at all
};

/// k_prime sentences with the target's tags, each word drawn from
/// lex[(pos, dep)], else lex[pos], else copied from the target. Timing,
/// heads and tags are carried over from the target.
std::vector<Candidate> synthesize_variants(const Sentence& target, const Lexicon& lex,
                                           int k_prime, std::uint64_t seed,
                                           bool frequency_weighted = false);

struct VariantSet {
  Sentence target;
  std::vector<Sentence> variants;
  std::vector<double> similarities;  // aligned with variants, descending
  bool insufficient = false;         // fewer than k variants survived
};

/// Drops candidates that repeat the target's words, differ in length or POS
/// sequence, or fall below `threshold` tree similarity; keeps the k most
/// similar (stable on ties). For sentences shorter than 3 tokens, where the
/// similarity is undefined, a candidate is kept only if its heads and
/// relations equal the target's and is recorded with similarity 1.
VariantSet select_variants(std::span<const Sentence> candidates, const Sentence& target, int k,
                           double threshold = 0.90);

/// Re-annotates a synthesized sentence, typically by parsing it. With no
/// reparser the candidates keep the target's tree.
using Reparser = std::function<Sentence(const Sentence&)>;

/// Synthesis and selection for every sentence of a story. Each sentence
/// uses its own stream seeded from (seed, story, sentence index), so the
/// result does not depend on `workers`.
std::vector<VariantSet> synthesize_story(const Transcript& t, const Lexicon& lex,
                                         const SynthesisConfig& cfg, std::uint64_t seed,
                                         const Reparser& reparse = {}, int workers = 1);

void write_variant_sets(const std::filesystem::path& path, std::span<const VariantSet> sets);
std::vector<VariantSet> load_variant_sets(const std::filesystem::path& path);

}  // namespace synsem
