#pragma once

#include "synsem/align.hpp"
#include "synsem/common.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace synsem {

// ---------------------------------------------------------------- scaling

/// Per-column clip band and moments. A column with zero spread maps to 0.
struct ColumnScaler {
  Vector low, high, mean, scale;

  /// Fits on the given rows of `x` (all rows when `rows` is empty).
  /// Percentiles use linear interpolation between order statistics.
  static ColumnScaler fit(const Matrix& x, std::span<const Index> rows, double clip_low = 0.01,
                          double clip_high = 99.99);
  /// Held-out rows are scaled with clip = false: a band fitted on other
  /// rows would distort values just outside it.
  void apply(Matrix& x, std::span<const Index> rows, bool clip = true) const;
};

/// Clips each column to its [clip_low, clip_high] percentile band, then
/// z-scores with the population std. With `groups` (one id per row) each
/// group is scaled on its own.
Matrix robust_standardize(const Matrix& x, std::span<const int> groups = {},
                          double clip_low = 0.01, double clip_high = 99.99);

// ------------------------------------------------------------------ ridge

std::vector<double> default_lambda_grid();  // 1e-1 .. 1e8, 10 values

/// Shares one eigendecomposition of the design across the λ grid and all
/// targets. Uses XᵀX when features <= samples and XXᵀ otherwise.
/// `x` must outlive the solver.
class RidgeSolver {
 public:
  explicit RidgeSolver(const Matrix& x);

  Index samples() const noexcept { return x_.rows(); }
  Index features() const noexcept { return x_.cols(); }
  bool dual() const noexcept { return dual_; }

  /// Mean squared leave-one-out residual, grid.size() x targets.
  Matrix loo_errors(const Matrix& y, std::span<const double> grid) const;

  /// Weights (features x targets), one λ per target column.
  Matrix weights(const Matrix& y, std::span<const double> lambdas) const;

 private:
  Vector shrink(double lambda) const;

  const Matrix& x_;
  bool dual_ = false;
  Vector s_;       // eigenvalues, clamped at 0
  Matrix basis_;   // eigenvectors of XᵀX (primal) or XXᵀ (dual)
  Matrix z_;       // X * basis_ (primal only)
};

enum class LambdaMode { per_target, shared };

/// Index into `grid` of the smallest error per target (first on ties), or
/// of the smallest summed error in shared mode.
std::vector<std::size_t> argmin_lambda(const Matrix& loo, LambdaMode mode);

std::vector<double> select_lambda(const Matrix& x, const Matrix& y, std::span<const double> grid,
                                  LambdaMode mode = LambdaMode::per_target);

struct RidgeModel {
  Matrix weights;              // d x V
  std::vector<double> lambda;  // per target
};

RidgeModel ridge_fit(const Matrix& x, const Matrix& y, double lambda);

// -------------------------------------------------------------- scoring

struct Fold {
  Index test_begin = 0;
  Index test_end = 0;  // exclusive
  Index test_size() const noexcept { return test_end - test_begin; }
};

/// Contiguous, unshuffled K-fold split; the first n % k folds get one extra row.
std::vector<Fold> make_fold_plan(Index n, int folds);

enum class ScalerMode {
  per_story_train,   // statistics from each story's training rows only
  per_story_global,  // every row of each story, before splitting
};

struct RidgeConfig {
  std::vector<double> lambda_grid = default_lambda_grid();
  int folds = 100;
  int min_test_samples = 10;
  LambdaMode lambda_mode = LambdaMode::per_target;
  ScalerMode scaler = ScalerMode::per_story_train;
  double clip_low = 0.01;
  double clip_high = 99.99;
  int workers = 1;

  void validate() const;
};

struct FoldFit {
  Matrix weights;               // d x V, on the standardized design
  std::vector<double> lambda;   // per target
  Matrix prediction;            // test rows x V
  Matrix observed;              // standardized test targets
  std::vector<double> score;    // per target Pearson
  std::vector<bool> undefined;  // per target
};

/// One fold of the cross-validated loop. `groups` labels each row with its
/// story (empty = one story).
FoldFit fit_fold(const Matrix& x, const Matrix& y, const Fold& fold, const RidgeConfig& cfg,
                 std::span<const int> groups = {});

struct ScoreTable {
  std::string feature_set;
  std::optional<int> layer;
  Matrix scores;                                            // folds x V
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> undefined;  // folds x V
  Matrix lambdas;                                           // folds x V

  Index folds() const noexcept { return scores.rows(); }
  Index targets() const noexcept { return scores.cols(); }
};

/// Cross-validated Pearson scores of ridge predictions for every fold and target.
ScoreTable brain_scores(const LaggedDesign& design, const Matrix& y, const RidgeConfig& cfg,
                        std::span<const int> groups = {}, std::string feature_set = {},
                        std::optional<int> layer = std::nullopt);

/// CSV `feature_set,layer,fold,target,score`; undefined scores are written as nan.
void write_score_tables(const std::filesystem::path& path, std::span<const ScoreTable> tables);
std::vector<ScoreTable> read_score_tables(const std::filesystem::path& path);

}  // namespace synsem
