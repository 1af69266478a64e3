#include "synsem/align.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace synsem {

TrAssignment nearest_tr(std::span<const double> onsets, std::span<const double> tr_times) {
  if (tr_times.empty()) throw std::invalid_argument("nearest_tr: empty tr_times");
  for (std::size_t i = 1; i < tr_times.size(); ++i) {
    if (!(tr_times[i] > tr_times[i - 1])) {
      throw std::invalid_argument("nearest_tr: tr_times must be strictly increasing");
    }
  }
  TrAssignment out;
  out.tr_count = static_cast<Index>(tr_times.size());
  out.index.reserve(onsets.size());
  const auto n = tr_times.size();
  for (double t : onsets) {
    const auto upper = static_cast<std::size_t>(
        std::lower_bound(tr_times.begin(), tr_times.end(), t) - tr_times.begin());
    std::size_t best;
    if (upper == 0) {
      best = 0;
    } else if (upper == n) {
      best = n - 1;
    } else {
      const double below = std::fabs(tr_times[upper - 1] - t);
      const double above = std::fabs(tr_times[upper] - t);
      best = above < below ? upper : upper - 1;
    }
    // Rounded distances can tie with farther TRs on the left; the first
    // minimum is the leftmost of them.
    while (best > 0 && std::fabs(tr_times[best - 1] - t) <= std::fabs(tr_times[best] - t)) {
      --best;
    }
    out.index.push_back(static_cast<Index>(best));
  }
  return out;
}

Matrix bin_sum(const Matrix& features, const TrAssignment& assignment) {
  if (static_cast<std::size_t>(features.rows()) != assignment.index.size()) {
    throw std::invalid_argument("bin_sum: " + std::to_string(features.rows()) +
                                " feature rows but " + std::to_string(assignment.index.size()) +
                                " assignments");
  }
  Matrix out = Matrix::Zero(assignment.tr_count, features.cols());
  for (Index m = 0; m < features.rows(); ++m) {
    const Index i = assignment.index[static_cast<std::size_t>(m)];
    if (i < 0 || i >= assignment.tr_count) throw std::out_of_range("bin_sum: bad TR index");
    out.row(i) += features.row(m);
  }
  return out;
}

LaggedDesign lag_stack(const Matrix& binned, int lags) {
  if (lags < 1) throw std::invalid_argument("lag_stack: lags must be >= 1");
  const Index n = binned.rows();
  const Index d = binned.cols();
  LaggedDesign out;
  out.lags = lags;
  out.matrix = Matrix::Zero(n, d * lags);
  for (int j = 0; j < lags; ++j) {
    if (j >= n) break;
    out.matrix.block(j, j * d, n - j, d) = binned.topRows(n - j);
  }
  return out;
}

LaggedDesign align_events(const Matrix& features, std::span<const double> onsets,
                          std::span<const double> tr_times, int lags) {
  return lag_stack(bin_sum(features, nearest_tr(onsets, tr_times)), lags);
}

LaggedDesign concat_stories(std::span<const LaggedDesign> stories) {
  if (stories.empty()) return {};
  Index rows = 0;
  for (const auto& s : stories) {
    if (s.matrix.cols() != stories.front().matrix.cols() || s.lags != stories.front().lags) {
      throw std::invalid_argument("concat_stories: designs disagree on width or lags");
    }
    rows += s.matrix.rows();
  }
  LaggedDesign out;
  out.lags = stories.front().lags;
  out.matrix.resize(rows, stories.front().matrix.cols());
  Index r = 0;
  for (const auto& s : stories) {
    out.matrix.middleRows(r, s.matrix.rows()) = s.matrix;
    r += s.matrix.rows();
  }
  return out;
}

LaggedDesign concat_features(std::span<const LaggedDesign> parts) {
  if (parts.empty()) return {};
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.matrix.rows() != parts.front().matrix.rows()) {
      throw std::invalid_argument("concat_features: row counts differ");
    }
    cols += p.matrix.cols();
  }
  LaggedDesign out;
  out.lags = parts.front().lags;
  out.matrix.resize(parts.front().matrix.rows(), cols);
  Index c = 0;
  for (const auto& p : parts) {
    out.matrix.middleCols(c, p.matrix.cols()) = p.matrix;
    c += p.matrix.cols();
  }
  return out;
}

}  // namespace synsem
