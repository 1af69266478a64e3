#pragma once

#include "synsem/common.hpp"
#include "synsem/embedding.hpp"
#include "synsem/lexicon.hpp"
#include "synsem/probe.hpp"
#include "synsem/signals.hpp"
#include "synsem/transcript.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace synsem::sim {

// ---------------------------------------------------------------- grammar

struct TemplateToken {
  std::string pos;
  std::string dep;
  int head = -1;
};

/// One POS sequence with one or more admissible parses (attachment
/// ambiguities share the relations and differ only in heads).
struct Template {
  std::vector<std::string> pos;
  std::vector<std::vector<TemplateToken>> parses;
};

struct Grammar {
  std::vector<Template> templates;
  std::map<std::string, std::vector<std::string>> vocabulary;  // POS -> words
};

const Grammar& default_grammar();

/// Annotates a sentence with the grammar's parse for its POS sequence;
/// ambiguous sequences resolve by a hash of the words. Sentences whose
/// sequence the grammar does not know are returned unchanged.
Sentence toy_parse(const Grammar& g, const Sentence& s);

/// Sentences drawn from uniformly chosen templates and words, parsed by
/// toy_parse. Tokens get nominal timing of 1/3 s per word.
std::vector<Sentence> gen_corpus(std::uint64_t seed, int n_sentences,
                                 const Grammar& g = default_grammar());

struct StoryConfig {
  double tr = 1.5;             // seconds
  double words_per_s = 3.0;
  double sentence_gap_s = 0.3;
};

/// A story of `n_trs` TRs with word and phone timings; TR i is acquired at
/// tr * (i + 1).
Transcript gen_story(std::uint64_t seed, const std::string& story_id, int n_trs,
                     const StoryConfig& cfg = {}, const Grammar& g = default_grammar());

// --------------------------------------------------------------- provider

struct ProviderSpec {
  int d = 64;
  int syn_dim = 16;
  int lex_dim = 16;
  int ctx_dim = 16;
  double sigma = 0.1;
  int layers = 3;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static ProviderSpec from_json(const nlohmann::json& j);
};

/// Clean latent codes of a sentence, one row per token.
struct Components {
  Matrix syn;  // M x syn_dim, a function of the (pos, dep) sequence only
  Matrix lex;  // M x lex_dim, a function of each word alone
  Matrix ctx;  // M x ctx_dim, a function of (previous word, word)
};

/// Layer 0 = B_lex·φ_lex + σ·noise(word); deeper layers add B_syn·φ_syn and
/// B_ctx·φ_ctx, with noise keyed by (layer, sentence, position).
class SimProvider final : public EmbeddingProvider {
 public:
  explicit SimProvider(const ProviderSpec& spec, const Grammar& g = default_grammar());

  int layer_count() const override { return spec_.layers; }
  Index dim() const override { return spec_.d; }
  Matrix activations(const Sentence& s, int layer) const override;

  Components components(const Sentence& s) const;
  const ProviderSpec& spec() const noexcept { return spec_; }
  const Matrix& basis_syn() const noexcept { return b_syn_; }
  const Matrix& basis_lex() const noexcept { return b_lex_; }
  const Matrix& basis_ctx() const noexcept { return b_ctx_; }

  Vector lexical_code(const std::string& word) const;
  Vector tag_code(const std::string& pos, const std::string& dep) const;

 private:
  Vector code(const char* kind, const std::string& key, int dim) const;
  Vector centred(const char* kind, const std::string& word, const std::string& pos) const;

  ProviderSpec spec_;
  Matrix b_syn_, b_lex_, b_ctx_;  // d x k, mutually orthogonal columns
  std::map<std::string, Vector> psi_mean_, chi_mean_;  // per POS
  std::map<std::string, std::string> pos_of_word_;
};

// ---------------------------------------------------------------- signals

enum class Planted : int { syntactic = 0, lexical = 1, compositional = 2 };
const char* to_string(Planted p);
Planted planted_from_string(const std::string& s);

struct SignalConfig {
  /// targets x 3 weights on (syntactic, lexical, compositional).
  Matrix mask;
  double snr = std::numeric_limits<double>::infinity();
  int lags = 5;
  std::uint64_t seed = 0;

  /// Every one of `targets` driven by the same components.
  static SignalConfig uniform(Index targets, std::span<const Planted> drivers, double snr,
                              std::uint64_t seed, int lags = 5);
};

struct GroundTruth {
  ProviderSpec provider;
  SignalConfig config;
  std::vector<std::string> stories;
  std::vector<double> signal_variance;  // per target
  std::vector<double> noise_variance;   // per target

  nlohmann::json to_json() const;
  static GroundTruth from_json(const nlohmann::json& j);
};

struct SimSignals {
  std::vector<SignalBundle> stories;
  GroundTruth truth;
};

/// Y = g(planted latent codes)·W + ε per story, with lags applied within
/// each story and ε scaled so that var(signal)/var(ε) equals snr for each
/// target over all stories.
SimSignals gen_signals(const SimProvider& provider, std::span<const Transcript> transcripts,
                       const SignalConfig& cfg);

// ------------------------------------------------------------------ probes

/// Planted probe targets over the stacked tokens: "semantic" is u·φ_lex
/// centred within the lexicon words of the token's (pos, dep) class;
/// "syntactic" is u·φ_syn.
std::vector<ProbeFeature> planted_probe_features(const SimProvider& provider,
                                                 std::span<const Transcript> transcripts,
                                                 const Lexicon& lexicon, std::uint64_t seed);

}  // namespace synsem::sim
