#pragma once

#include "synsem/common.hpp"
#include "synsem/transcript.hpp"

#include <optional>
#include <span>
#include <vector>

namespace synsem {

/// Checks an encoded head array (-1 = ROOT): indices in range, no
/// self-loops, no cycles. Throws ValidationError.
void validate_heads(std::span<const int> heads);

/// Hop counts on the undirected, unlabeled dependency tree (M x M,
/// symmetric, zero diagonal). Several ROOT tokens are joined through a
/// virtual root node.
Matrix tree_pairwise_distances(const Sentence& s);

/// Arcs between each token and ROOT; the root token has depth 0.
std::vector<int> tree_depths(const Sentence& s);

/// Pearson r between the strict upper triangles of both distance matrices.
/// Empty when undefined (fewer than 3 tokens, or a constant distance vector).
/// Throws std::invalid_argument if lengths differ.
std::optional<double> tree_similarity(const Sentence& a, const Sentence& b);

}  // namespace synsem
