#include "synsem/embedding.hpp"

#include "synsem/parallel.hpp"
#include "synsem/tensor.hpp"

#include <cmath>

namespace synsem {
namespace {

void check_layer(const EmbeddingProvider& p, int layer) {
  if (layer < 0 || layer >= p.layer_count()) {
    throw std::out_of_range("layer " + std::to_string(layer) + " outside [0, " +
                            std::to_string(p.layer_count()) + ")");
  }
}

Matrix checked_activations(const EmbeddingProvider& p, const Sentence& s, int layer) {
  Matrix a = p.activations(s, layer);
  if (a.rows() != static_cast<Index>(s.size()) || a.cols() != p.dim()) {
    throw ValidationError("provider returned " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " activations for a " +
                          std::to_string(s.size()) + "-token sentence");
  }
  return a;
}

Matrix stack(std::vector<Matrix>& blocks, Index cols) {
  Index rows = 0;
  for (const auto& b : blocks) rows += b.rows();
  Matrix out(rows, cols);
  Index r = 0;
  for (auto& b : blocks) {
    out.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  return out;
}

}  // namespace

FileEmbeddingProvider::FileEmbeddingProvider(std::span<const Source> sources) {
  for (std::size_t si = 0; si < sources.size(); ++si) {
    const auto& src = sources[si];
    if (si == 0) {
      layers_ = static_cast<int>(src.layers.size());
    } else if (static_cast<int>(src.layers.size()) != layers_) {
      throw ValidationError("activation sources disagree on the number of layers");
    }
    const auto sentences = load_sentences(src.sentences);
    Index words = 0;
    for (const auto& s : sentences) words += static_cast<Index>(s.size());

    std::vector<Matrix> layers;
    for (const auto& path : src.layers) {
      Matrix m = load_matrix(path);
      if (m.rows() != words) {
        throw ValidationError(path.string() + ": " + std::to_string(m.rows()) +
                              " rows but the transcript has " + std::to_string(words) + " words");
      }
      if (dim_ == 0) dim_ = m.cols();
      if (m.cols() != dim_) throw ValidationError(path.string() + ": activation width differs");
      layers.push_back(std::move(m));
    }
    data_.push_back(std::move(layers));

    Index row = 0;
    for (const auto& s : sentences) {
      index_.try_emplace(s.text(), Location{si, row, static_cast<Index>(s.size())});
      row += static_cast<Index>(s.size());
    }
  }
}

Matrix FileEmbeddingProvider::activations(const Sentence& s, int layer) const {
  check_layer(*this, layer);
  auto it = index_.find(s.text());
  if (it == index_.end()) {
    throw ValidationError("no exported activations for sentence \"" + s.text() + "\"");
  }
  const auto& loc = it->second;
  return data_[loc.source][static_cast<std::size_t>(layer)].middleRows(loc.row, loc.length);
}

SyntacticEmbedding syntactic_embedding(const EmbeddingProvider& provider, const VariantSet& set,
                                       int layer) {
  if (set.variants.empty()) throw std::invalid_argument("syntactic_embedding: no variants");
  check_layer(provider, layer);
  Matrix sum = Matrix::Zero(static_cast<Index>(set.target.size()), provider.dim());
  for (const auto& v : set.variants) {
    if (v.size() != set.target.size()) {
      throw ValidationError("variant length differs from its target");
    }
    sum += checked_activations(provider, v, layer);
  }
  const auto k = static_cast<int>(set.variants.size());
  return {sum / static_cast<double>(k), k, layer};
}

std::vector<ConvergencePoint> convergence_curve(const EmbeddingProvider& provider,
                                                const VariantSet& set, int layer, int k_max) {
  if (k_max < 2 || k_max > static_cast<int>(set.variants.size())) {
    throw std::invalid_argument("convergence_curve: k_max must lie in [2, variant count]");
  }
  check_layer(provider, layer);
  std::vector<ConvergencePoint> curve;
  Matrix sum = checked_activations(provider, set.variants[0], layer);
  Matrix prev = sum;
  for (int k = 2; k <= k_max; ++k) {
    sum += checked_activations(provider, set.variants[static_cast<std::size_t>(k - 1)], layer);
    Matrix cur = sum / static_cast<double>(k);
    const double na = prev.norm();
    const double nb = cur.norm();
    ConvergencePoint pt{k, std::nullopt};
    if (na > 0.0 && nb > 0.0) pt.cosine = prev.cwiseProduct(cur).sum() / (na * nb);
    curve.push_back(pt);
    prev = std::move(cur);
  }
  return curve;
}

Matrix story_activations(const EmbeddingProvider& provider, const Transcript& t, int layer,
                         int workers) {
  check_layer(provider, layer);
  std::vector<Matrix> blocks(t.sentences.size());
  parallel_for(blocks.size(), workers, [&](std::size_t i) {
    blocks[i] = checked_activations(provider, t.sentences[i], layer);
  });
  return stack(blocks, provider.dim());
}

Matrix story_syntactic_embedding(const EmbeddingProvider& provider,
                                 std::span<const VariantSet> sets, int layer, int workers) {
  check_layer(provider, layer);
  std::vector<Matrix> blocks(sets.size());
  parallel_for(blocks.size(), workers, [&](std::size_t i) {
    if (sets[i].variants.empty()) {
      blocks[i] = Matrix::Zero(static_cast<Index>(sets[i].target.size()), provider.dim());
    } else {
      blocks[i] = syntactic_embedding(provider, sets[i], layer).matrix;
    }
  });
  return stack(blocks, provider.dim());
}

}  // namespace synsem
