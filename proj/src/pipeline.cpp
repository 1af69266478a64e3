#include "synsem/pipeline.hpp"

#include "synsem/random.hpp"

namespace synsem {

LaggedDesign word_design(std::span<const Transcript> transcripts, std::span<const Matrix> features,
                         int lags) {
  if (transcripts.size() != features.size()) {
    throw std::invalid_argument("one feature matrix per story required");
  }
  std::vector<LaggedDesign> parts;
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    const auto onsets = transcripts[i].word_onsets();
    if (static_cast<Index>(onsets.size()) != features[i].rows()) {
      throw ValidationError("story " + transcripts[i].story_id + ": " +
                            std::to_string(features[i].rows()) + " feature rows for " +
                            std::to_string(onsets.size()) + " words");
    }
    parts.push_back(align_events(features[i], onsets, transcripts[i].tr_times, lags));
  }
  return concat_stories(parts);
}

LaggedDesign phonological_design(std::span<const Transcript> transcripts,
                                 const PhoneVocabulary& vocab, int lags) {
  std::vector<LaggedDesign> stories;
  for (const auto& t : transcripts) {
    const auto words = word_rate(t);
    const auto phones = phone_rate(t);
    const auto cats = phone_category_onehot(t, vocab);
    const std::vector<LaggedDesign> parts = {
        lag_stack(words.matrix, lags), lag_stack(phones.matrix, lags),
        align_events(cats.matrix, cats.onsets, t.tr_times, lags)};
    stories.push_back(concat_features(parts));
  }
  return concat_stories(stories);
}

std::vector<int> tr_groups(std::span<const Transcript> transcripts) {
  std::vector<int> out;
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    out.insert(out.end(), transcripts[i].tr_times.size(), static_cast<int>(i));
  }
  return out;
}

Matrix stack_signals(std::span<const Transcript> transcripts, std::span<const SignalBundle> signals) {
  if (transcripts.size() != signals.size()) {
    throw ValidationError("one signal bundle per story required");
  }
  Index rows = 0;
  Index cols = -1;
  for (std::size_t i = 0; i < signals.size(); ++i) {
    validate_signals(signals[i]);
    if (signals[i].story_id != transcripts[i].story_id) {
      throw ValidationError("signals for '" + signals[i].story_id + "' paired with story '" +
                            transcripts[i].story_id + "'");
    }
    if (signals[i].tr_times != transcripts[i].tr_times) {
      throw ValidationError("story " + transcripts[i].story_id + ": TR grids differ");
    }
    if (cols >= 0 && signals[i].matrix.cols() != cols) {
      throw ValidationError("stories differ in target count");
    }
    cols = signals[i].matrix.cols();
    rows += signals[i].matrix.rows();
  }
  Matrix out(rows, std::max<Index>(cols, 0));
  Index r = 0;
  for (const auto& s : signals) {
    out.middleRows(r, s.matrix.rows()) = s.matrix;
    r += s.matrix.rows();
  }
  return out;
}

LayerFeatures layer_features(const EmbeddingProvider& provider,
                             std::span<const Transcript> transcripts,
                             std::span<const std::vector<VariantSet>> variants, int layer,
                             int workers) {
  if (transcripts.size() != variants.size()) {
    throw std::invalid_argument("one variant list per story required");
  }
  LayerFeatures out;
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    out.x.push_back(story_activations(provider, transcripts[i], layer, workers));
    out.bar_x.push_back(story_syntactic_embedding(provider, variants[i], layer, workers));
  }
  return out;
}

SimulationData simulate(const SimulationConfig& cfg) {
  const auto& grammar = sim::default_grammar();
  SimulationData data;
  data.lexicon = Lexicon::build(sim::gen_corpus(derive_seed(cfg.seed, "lexicon"),
                                                cfg.corpus_sentences, grammar));
  for (int s = 0; s < cfg.stories; ++s) {
    data.transcripts.push_back(sim::gen_story(cfg.seed, "story" + std::to_string(s),
                                              cfg.trs_per_story, {}, grammar));
  }
  auto spec = cfg.provider;
  spec.seed = derive_seed(cfg.seed, "provider");
  data.provider = spec;
  const sim::SimProvider provider(spec, grammar);
  if (cfg.layer < 1 || cfg.layer >= spec.layers) {
    throw std::invalid_argument("simulation layer must be a deep layer of the provider");
  }

  const Reparser reparse = [&grammar](const Sentence& s) { return sim::toy_parse(grammar, s); };
  for (const auto& t : data.transcripts) {
    data.variants.push_back(synthesize_story(t, data.lexicon, cfg.synthesis,
                                             derive_seed(cfg.seed, "synthesis"), reparse,
                                             cfg.workers));
  }
  const auto l0 = layer_features(provider, data.transcripts, data.variants, 0, cfg.workers);
  const auto ll = layer_features(provider, data.transcripts, data.variants, cfg.layer, cfg.workers);
  data.features["X0"] = l0.x;
  data.features["barX0"] = l0.bar_x;
  data.features["Xl"] = ll.x;
  data.features["barXl"] = ll.bar_x;

  sim::SignalConfig sc = cfg.mask.size() > 0
                             ? sim::SignalConfig{cfg.mask, cfg.snr, cfg.lags, 0}
                             : sim::SignalConfig::uniform(cfg.targets, cfg.drivers, cfg.snr, 0,
                                                          cfg.lags);
  sc.seed = derive_seed(cfg.seed, "signals");
  data.signals = sim::gen_signals(provider, data.transcripts, sc);
  return data;
}

}  // namespace synsem
