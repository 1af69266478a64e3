#include "synsem/dependency_tree.hpp"

#include "synsem/correlation.hpp"

#include <deque>
#include <string>

namespace synsem {

void validate_heads(std::span<const int> heads) {
  const auto m = static_cast<int>(heads.size());
  for (int i = 0; i < m; ++i) {
    const int h = heads[i];
    if (h < -1 || h >= m) {
      throw ValidationError("head " + std::to_string(h) + " out of range at token " +
                            std::to_string(i));
    }
    if (h == i) throw ValidationError("token " + std::to_string(i) + " heads itself");
  }
  for (int i = 0; i < m; ++i) {
    int h = heads[i];
    int steps = 0;
    while (h != -1) {
      if (++steps > m) throw ValidationError("dependency cycle through token " + std::to_string(i));
      h = heads[h];
    }
  }
}

Matrix tree_pairwise_distances(const Sentence& s) {
  const auto heads = s.heads();
  validate_heads(heads);
  const auto m = static_cast<int>(heads.size());
  // Node m is the virtual root; it only matters when there are several roots.
  int roots = 0;
  for (int h : heads) roots += h == -1;
  const int nodes = roots > 1 ? m + 1 : m;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(nodes));
  for (int i = 0; i < m; ++i) {
    const int h = heads[i] == -1 ? (roots > 1 ? m : -1) : heads[i];
    if (h >= 0) {
      adj[i].push_back(h);
      adj[h].push_back(i);
    }
  }
  Matrix dist = Matrix::Zero(m, m);
  std::vector<int> seen(static_cast<std::size_t>(nodes));
  for (int src = 0; src < m; ++src) {
    std::fill(seen.begin(), seen.end(), -1);
    std::deque<int> queue{src};
    seen[src] = 0;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : adj[u]) {
        if (seen[v] < 0) {
          seen[v] = seen[u] + 1;
          queue.push_back(v);
        }
      }
    }
    for (int j = 0; j < m; ++j) dist(src, j) = seen[j];
  }
  return dist;
}

std::vector<int> tree_depths(const Sentence& s) {
  const auto heads = s.heads();
  validate_heads(heads);
  std::vector<int> depth(heads.size());
  for (std::size_t i = 0; i < heads.size(); ++i) {
    int d = 0;
    for (int h = heads[i]; h != -1; h = heads[h]) ++d;
    depth[i] = d;
  }
  return depth;
}

std::optional<double> tree_similarity(const Sentence& a, const Sentence& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("tree_similarity: sentences differ in length");
  }
  const auto m = static_cast<Index>(a.size());
  if (m < 3) return std::nullopt;
  const Matrix da = tree_pairwise_distances(a);
  const Matrix db = tree_pairwise_distances(b);
  std::vector<double> va;
  std::vector<double> vb;
  va.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  vb.reserve(va.capacity());
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      va.push_back(da(i, j));
      vb.push_back(db(i, j));
    }
  }
  const auto c = pearson(va, vb);
  if (!c.defined) return std::nullopt;
  return c.r;
}

}  // namespace synsem
