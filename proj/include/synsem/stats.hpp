#pragma once

#include "synsem/common.hpp"
#include "synsem/parcellation.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace synsem {

struct RoiScores {
  std::vector<std::string> regions;  // regions with at least one target
  Matrix values;                     // folds x regions
  std::vector<std::string> dropped;  // regions without any target in range
};

/// Mean over the targets of each region, per fold. Unlabeled targets are ignored.
RoiScores roi_average(const Matrix& scores, const ParcellationTable& parc);

struct WilcoxonResult {
  double p = 1.0;
  double statistic = 0.0;  // sum of ranks of the positive samples
  int n = 0;               // samples left after dropping zeros
  bool exact = false;
  bool degenerate = false;  // every sample was zero
};

/// Two-sided signed-rank test of zero location. Zeros are dropped; exact
/// null distribution up to 15 samples, normal approximation with tie and
/// continuity corrections above. Throws if fewer than 5 nonzero samples.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> samples);

/// The exact two-sided p for the given signed samples (no zeros), by
/// dynamic programming over midranks. Exposed for the large-n cross-check.
double wilcoxon_exact_p(std::span<const double> samples);

/// Normal approximation with tie and continuity correction; zeros are
/// dropped. The path taken by wilcoxon_signed_rank above 15 samples.
double wilcoxon_normal_p(std::span<const double> samples);

struct FdrResult {
  std::vector<double> adjusted;
  std::vector<bool> reject;
};

/// Benjamini-Hochberg step-up adjustment; rejection where adjusted <= q.
FdrResult fdr_bh(std::span<const double> pvalues, double q = 0.05);

struct SignificanceRow {
  std::string region;
  std::string component;
  double p_raw = 1.0;
  double p_adj = 1.0;
  bool reject = false;
};

/// Wilcoxon per region on the fold samples, FDR across the regions of one component.
std::vector<SignificanceRow> region_significance(const RoiScores& roi, const std::string& component,
                                                 double q = 0.05);

/// CSV `region,component,p_raw,p_adj,reject`.
void write_significance(const std::filesystem::path& path, std::span<const SignificanceRow> rows);

struct RegionSummary {
  std::string region;
  double mean = 0.0;
  double sem = 0.0;
};

/// Regions ordered by descending fold-mean, truncated to `count`.
std::vector<RegionSummary> top_regions(const RoiScores& roi, std::size_t count = 10);

}  // namespace synsem
