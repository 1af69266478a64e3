#pragma once

#include "synsem/common.hpp"
#include "synsem/transcript.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace synsem {

/// (mean per-class recall - 1/C) / (1 - 1/C). Labels lie in [0, n_classes);
/// every class must occur in y_true and n_classes must be >= 2.
double adjusted_balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred,
                                  int n_classes);

enum class ProbeKind { continuous, categorical };

/// A decoding target defined on a subset of embedding rows.
struct ProbeFeature {
  std::string name;
  ProbeKind kind = ProbeKind::continuous;
  std::vector<Index> rows;               // embedding rows the values belong to
  Matrix values;                         // continuous: rows.size() x k
  std::vector<int> labels;               // categorical: one class id per row
  std::vector<std::string> class_names;  // categorical

  std::size_t size() const noexcept { return rows.size(); }
};

/// Keeps only the entries whose embedding row is flagged in `keep`.
ProbeFeature restrict_rows(const ProbeFeature& f, const std::vector<bool>& keep);

/// POS tag of every token, stacked across transcripts.
ProbeFeature pos_feature(std::span<const Transcript> transcripts);

/// Arcs to ROOT of every token (root token = 0).
ProbeFeature depth_feature(std::span<const Transcript> transcripts);

/// is_content flag of every token, stacked across transcripts.
std::vector<bool> content_mask(std::span<const Transcript> transcripts);

/// Reads {story, sent_index, token_index, name, value | vector | class}
/// lines; one feature per name, rows ordered as the stacked tokens.
std::vector<ProbeFeature> load_probe_targets(const std::filesystem::path& path,
                                             std::span<const Transcript> transcripts);

std::vector<double> default_probe_grid();  // 1e-3 .. 1e6, 10 values

struct ProbeConfig {
  int folds = 10;
  std::vector<double> lambda_grid = default_probe_grid();
};

struct ProbeResult {
  double mean = 0.0;
  double sem = 0.0;
  std::vector<double> fold_scores;
};

/// Contiguous K-fold decoding with a centered ridge model. Continuous
/// targets are scored by R² averaged over dimensions; categorical targets
/// by a one-vs-all ridge classifier and adjusted balanced accuracy over
/// the classes present in each test fold.
ProbeResult probe_decode(const Matrix& embeddings, const ProbeFeature& feature,
                         const ProbeConfig& cfg = {});

}  // namespace synsem
