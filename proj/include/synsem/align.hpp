#pragma once

#include "synsem/common.hpp"

#include <span>
#include <vector>

namespace synsem {

/// Nearest-TR index for each word-level event.
struct TrAssignment {
  std::vector<Index> index;  // length M, each in [0, tr_count)
  Index tr_count = 0;
};

/// Maps each onset to the TR time closest to it; a tie goes to the earlier
/// TR (first minimum of |t_tr - t_onset|). Onsets outside the grid map to
/// the first/last TR. Throws on empty or non-increasing tr_times.
TrAssignment nearest_tr(std::span<const double> onsets, std::span<const double> tr_times);

/// Sums the rows of `features` (M x d) into their assigned TR (N x d).
Matrix bin_sum(const Matrix& features, const TrAssignment& assignment);

/// FIR design: column blocks [u_i, u_{i-1}, ..., u_{i-lags+1}], newest
/// first, with zeros where i - j < 0.
struct LaggedDesign {
  Matrix matrix;  // N x (lags * d)
  int lags = 1;
};

LaggedDesign lag_stack(const Matrix& binned, int lags);

/// Composite g: nearest_tr, bin_sum, then lag_stack for one story.
LaggedDesign align_events(const Matrix& features, std::span<const double> onsets,
                          std::span<const double> tr_times, int lags);

/// Vertically concatenates per-story designs. Lags were applied per story,
/// so no story's history leaks into the next one.
LaggedDesign concat_stories(std::span<const LaggedDesign> stories);

/// Horizontally concatenates designs with equal row counts (feature-set ⊕).
LaggedDesign concat_features(std::span<const LaggedDesign> parts);

}  // namespace synsem
