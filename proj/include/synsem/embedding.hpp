#pragma once

#include "synsem/common.hpp"
#include "synsem/synthesis.hpp"
#include "synsem/transcript.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace synsem {

/// Per-layer token activations of some language model. Implementations
/// must be deterministic and safe to call concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int layer_count() const = 0;  // valid layers are [0, layer_count)
  virtual Index dim() const = 0;
  /// M x dim, one row per token of `s`.
  virtual Matrix activations(const Sentence& s, int layer) const = 0;
};

/// Activations read from exported files: a sentence JSONL plus one DTEN per
/// layer whose rows follow the tokens of the JSONL in order. Sentences are
/// looked up by their space-joined text.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  struct Source {
    std::filesystem::path sentences;
    std::vector<std::filesystem::path> layers;  // index = layer
  };

  explicit FileEmbeddingProvider(std::span<const Source> sources);

  int layer_count() const override { return layers_; }
  Index dim() const override { return dim_; }
  Matrix activations(const Sentence& s, int layer) const override;
  bool contains(const Sentence& s) const { return index_.count(s.text()) > 0; }

 private:
  struct Location {
    std::size_t source;
    Index row;
    Index length;
  };
  int layers_ = 0;
  Index dim_ = 0;
  std::vector<std::vector<Matrix>> data_;  // [source][layer]
  std::map<std::string, Location> index_;
};

struct SyntacticEmbedding {
  Matrix matrix;  // M x d
  int k = 0;
  int layer = 0;
};

/// Mean of the variants' activations at `layer`, row-aligned with the target.
SyntacticEmbedding syntactic_embedding(const EmbeddingProvider& provider, const VariantSet& set,
                                       int layer);

struct ConvergencePoint {
  int k = 0;
  std::optional<double> cosine;  // empty when a running mean has zero norm
};

/// Cosine between successive running means over the first K variants,
/// K = 2..k_max, with matrices flattened.
std::vector<ConvergencePoint> convergence_curve(const EmbeddingProvider& provider,
                                                const VariantSet& set, int layer, int k_max);

/// Stacked activations of every sentence of a story (word count x d).
Matrix story_activations(const EmbeddingProvider& provider, const Transcript& t, int layer,
                         int workers = 1);

/// Stacked syntactic embeddings, one block per sentence. A sentence without
/// any surviving variant contributes zero rows.
Matrix story_syntactic_embedding(const EmbeddingProvider& provider,
                                 std::span<const VariantSet> sets, int layer, int workers = 1);

}  // namespace synsem
