#pragma once

#include "synsem/align.hpp"
#include "synsem/embedding.hpp"
#include "synsem/encoder.hpp"
#include "synsem/features.hpp"
#include "synsem/lexicon.hpp"
#include "synsem/signals.hpp"
#include "synsem/simgen.hpp"
#include "synsem/synthesis.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace synsem {

/// Lag-stacked design over several stories from per-story word-level
/// features (rows aligned with each transcript's words).
LaggedDesign word_design(std::span<const Transcript> transcripts, std::span<const Matrix> features,
                         int lags);

/// Word rate, phone rate and phone-category one-hot features, each
/// lag-stacked per story and joined column-wise.
LaggedDesign phonological_design(std::span<const Transcript> transcripts,
                                 const PhoneVocabulary& vocab, int lags);

/// Story index of every TR row of the concatenated stories.
std::vector<int> tr_groups(std::span<const Transcript> transcripts);

/// Vertical concatenation of per-story signals; checks the TR grids match.
Matrix stack_signals(std::span<const Transcript> transcripts, std::span<const SignalBundle> signals);

/// Word-level feature sets of one representation layer: X (activations) and
/// X̄ (syntactic embedding) per story.
struct LayerFeatures {
  std::vector<Matrix> x;
  std::vector<Matrix> bar_x;
};

LayerFeatures layer_features(const EmbeddingProvider& provider,
                             std::span<const Transcript> transcripts,
                             std::span<const std::vector<VariantSet>> variants, int layer,
                             int workers = 1);

struct SimulationConfig {
  std::uint64_t seed = 0;
  int stories = 4;
  int trs_per_story = 1250;
  int corpus_sentences = 2000;
  sim::ProviderSpec provider;
  int layer = 2;  // the deep layer l compared against layer 0
  SynthesisConfig synthesis;
  std::vector<sim::Planted> drivers = {sim::Planted::syntactic};
  Matrix mask;  // optional targets x 3; overrides drivers when set
  double snr = 1.0;
  Index targets = 50;
  int lags = 5;
  int workers = 1;
};

struct SimulationData {
  sim::ProviderSpec provider;  // with the derived seed
  Lexicon lexicon;
  std::vector<Transcript> transcripts;
  std::vector<std::vector<VariantSet>> variants;  // per story, per sentence
  sim::SimSignals signals;
  std::map<std::string, std::vector<Matrix>> features;  // X0, Xl, barX0, barXl per story
};

/// Corpus, lexicon, stories, variant synthesis (with the toy parser),
/// features and planted signals, all derived from cfg.seed.
SimulationData simulate(const SimulationConfig& cfg);

}  // namespace synsem
