#include "synsem/encoder.hpp"

#include "synsem/correlation.hpp"
#include "synsem/csv.hpp"
#include "synsem/linalg.hpp"
#include "synsem/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace synsem {
namespace {

// Linear interpolation between order statistics, as numpy's default.
double percentile(std::vector<double>& v, double q) {
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (frac == 0.0 || lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + frac * (b - a);
}

std::vector<Index> all_rows(Index n) {
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + " contains non-finite values");
}

// Row positions of each group id, in order of first appearance.
std::map<int, std::vector<Index>> rows_by_group(std::span<const int> groups, Index offset,
                                                Index count, Index out_offset) {
  std::map<int, std::vector<Index>> out;
  for (Index i = 0; i < count; ++i) {
    out[groups[static_cast<std::size_t>(offset + i)]].push_back(out_offset + i);
  }
  return out;
}

void scale_fold(Matrix& train, Matrix& test, std::span<const int> groups, const Fold& fold,
                Index n, const RidgeConfig& cfg) {
  if (groups.empty()) {
    const auto s = ColumnScaler::fit(train, {}, cfg.clip_low, cfg.clip_high);
    s.apply(train, {});
    s.apply(test, {}, false);
    return;
  }
  // Train rows are [0, b) followed by [e, n) of the original order.
  auto train_rows = rows_by_group(groups, 0, fold.test_begin, 0);
  for (auto& [g, rows] : rows_by_group(groups, fold.test_end, n - fold.test_end, fold.test_begin)) {
    auto& dst = train_rows[g];
    dst.insert(dst.end(), rows.begin(), rows.end());
  }
  const auto test_rows = rows_by_group(groups, fold.test_begin, fold.test_size(), 0);

  std::optional<ColumnScaler> pooled;
  auto scaler_for = [&](int g) -> ColumnScaler {
    auto it = train_rows.find(g);
    if (it != train_rows.end() && it->second.size() >= 2) {
      return ColumnScaler::fit(train, it->second, cfg.clip_low, cfg.clip_high);
    }
    if (!pooled) pooled = ColumnScaler::fit(train, {}, cfg.clip_low, cfg.clip_high);
    return *pooled;
  };
  // Fit every scaler before modifying any rows of `train`.
  std::map<int, ColumnScaler> scalers;
  for (const auto& [g, rows] : train_rows) scalers.emplace(g, scaler_for(g));
  for (const auto& [g, rows] : test_rows) {
    if (!scalers.count(g)) scalers.emplace(g, scaler_for(g));
  }
  for (const auto& [g, rows] : train_rows) scalers.at(g).apply(train, rows);
  for (const auto& [g, rows] : test_rows) scalers.at(g).apply(test, rows, false);
}

}  // namespace

// ---------------------------------------------------------------- scaling

ColumnScaler ColumnScaler::fit(const Matrix& x, std::span<const Index> rows, double clip_low,
                               double clip_high) {
  if (!(0.0 <= clip_low && clip_low <= clip_high && clip_high <= 100.0)) {
    throw std::invalid_argument("clip percentiles must satisfy 0 <= low <= high <= 100");
  }
  std::vector<Index> owned;
  if (rows.empty()) {
    owned = all_rows(x.rows());
    rows = owned;
  }
  if (rows.empty()) throw std::invalid_argument("ColumnScaler::fit: no rows");
  const Index d = x.cols();
  ColumnScaler s;
  s.low.resize(d);
  s.high.resize(d);
  s.mean.resize(d);
  s.scale.resize(d);
  std::vector<double> buf(rows.size());
  for (Index c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < rows.size(); ++i) buf[i] = x(rows[i], c);
    const double lo = percentile(buf, clip_low);
    const double hi = percentile(buf, clip_high);
    double sum = 0.0;
    for (Index r : rows) sum += std::clamp(x(r, c), lo, hi);
    const double mean = sum / static_cast<double>(rows.size());
    double ss = 0.0;
    for (Index r : rows) {
      const double dv = std::clamp(x(r, c), lo, hi) - mean;
      ss += dv * dv;
    }
    const double sd = std::sqrt(ss / static_cast<double>(rows.size()));
    s.low[c] = lo;
    s.high[c] = hi;
    s.mean[c] = mean;
    s.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 0.0;
  }
  return s;
}

void ColumnScaler::apply(Matrix& x, std::span<const Index> rows, bool clip) const {
  if (x.cols() != mean.size()) throw std::invalid_argument("ColumnScaler: column count differs");
  const bool all = rows.empty();
  const Index n = all ? x.rows() : static_cast<Index>(rows.size());
  for (Index c = 0; c < x.cols(); ++c) {
    double* col = x.col(c).data();
    for (Index i = 0; i < n; ++i) {
      double& v = col[all ? i : rows[static_cast<std::size_t>(i)]];
      const double u = clip ? std::clamp(v, low[c], high[c]) : v;
      v = scale[c] > 0.0 ? (u - mean[c]) / scale[c] : 0.0;
    }
  }
}

Matrix robust_standardize(const Matrix& x, std::span<const int> groups, double clip_low,
                          double clip_high) {
  Matrix out = x;
  if (groups.empty()) {
    ColumnScaler::fit(x, {}, clip_low, clip_high).apply(out, {});
    return out;
  }
  if (static_cast<Index>(groups.size()) != x.rows()) {
    throw std::invalid_argument("robust_standardize: one group id per row required");
  }
  for (const auto& [g, rows] : rows_by_group(groups, 0, x.rows(), 0)) {
    ColumnScaler::fit(x, rows, clip_low, clip_high).apply(out, rows);
  }
  return out;
}

// ------------------------------------------------------------------ ridge

std::vector<double> default_lambda_grid() {
  std::vector<double> grid(10);
  for (int i = 0; i < 10; ++i) grid[static_cast<std::size_t>(i)] = std::pow(10.0, -1.0 + i);
  return grid;
}

RidgeSolver::RidgeSolver(const Matrix& x) : x_(x) {
  require_finite(x, "design");
  dual_ = x.cols() > x.rows();
  Matrix gram;
  if (dual_) {
    gram = Matrix::Zero(x.rows(), x.rows());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
  } else {
    gram = Matrix::Zero(x.cols(), x.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  }
  auto eig = symmetric_eigen(std::move(gram));
  s_ = eig.values.cwiseMax(0.0);
  basis_ = std::move(eig.vectors);
  if (!dual_) z_ = x * basis_;
}

Vector RidgeSolver::shrink(double lambda) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("ridge penalty must be finite and >= 0");
  }
  Vector d(s_.size());
  for (Index j = 0; j < s_.size(); ++j) {
    const double den = s_[j] + lambda;
    d[j] = den > 0.0 ? 1.0 / den : 0.0;
  }
  return d;
}

Matrix RidgeSolver::loo_errors(const Matrix& y, std::span<const double> grid) const {
  if (y.rows() != samples()) throw std::invalid_argument("loo_errors: row count differs");
  if (grid.empty()) throw std::invalid_argument("loo_errors: empty lambda grid");
  require_finite(y, "targets");
  const Index n = samples();
  Matrix out(static_cast<Index>(grid.size()), y.cols());
  const Matrix sq = dual_ ? basis_.cwiseAbs2() : z_.cwiseAbs2();
  const Matrix q = (dual_ ? basis_ : z_).transpose() * y;
  Matrix scaled(q.rows(), q.cols());
  Matrix resid(n, y.cols());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const Vector d = shrink(grid[g]);
    scaled.noalias() = d.asDiagonal() * q;
    const Vector diag = sq * d;
    if (dual_) {
      // (K + λI)^{-1} y divided by the diagonal of (K + λI)^{-1}.
      resid.noalias() = basis_ * scaled;
      resid = diag.cwiseInverse().asDiagonal() * resid;
    } else {
      resid.noalias() = -z_ * scaled;
      resid += y;
      resid = (Vector::Ones(n) - diag).cwiseInverse().asDiagonal() * resid;
    }
    out.row(static_cast<Index>(g)) = resid.colwise().squaredNorm() / static_cast<double>(n);
  }
  return out;
}

Matrix RidgeSolver::weights(const Matrix& y, std::span<const double> lambdas) const {
  if (y.rows() != samples()) throw std::invalid_argument("weights: row count differs");
  if (static_cast<Index>(lambdas.size()) != y.cols()) {
    throw std::invalid_argument("weights: one lambda per target required");
  }
  require_finite(y, "targets");
  Matrix q = (dual_ ? basis_ : z_).transpose() * y;
  std::map<double, Vector> cache;
  for (Index v = 0; v < y.cols(); ++v) {
    const double lam = lambdas[static_cast<std::size_t>(v)];
    auto it = cache.find(lam);
    if (it == cache.end()) it = cache.emplace(lam, shrink(lam)).first;
    q.col(v).array() *= it->second.array();
  }
  if (dual_) return x_.transpose() * (basis_ * q);
  return basis_ * q;
}

std::vector<std::size_t> argmin_lambda(const Matrix& loo, LambdaMode mode) {
  if (loo.rows() == 0) throw std::invalid_argument("argmin_lambda: empty grid");
  auto best_row = [&](auto&& err) {
    std::size_t best = 0;
    for (Index g = 1; g < loo.rows(); ++g) {
      if (err(g) < err(static_cast<Index>(best))) best = static_cast<std::size_t>(g);
    }
    return best;
  };
  if (mode == LambdaMode::shared) {
    const Vector total = loo.rowwise().sum();
    return std::vector<std::size_t>(static_cast<std::size_t>(loo.cols()),
                                    best_row([&](Index g) { return total[g]; }));
  }
  std::vector<std::size_t> out(static_cast<std::size_t>(loo.cols()));
  for (Index v = 0; v < loo.cols(); ++v) {
    out[static_cast<std::size_t>(v)] = best_row([&](Index g) { return loo(g, v); });
  }
  return out;
}

std::vector<double> select_lambda(const Matrix& x, const Matrix& y, std::span<const double> grid,
                                  LambdaMode mode) {
  const RidgeSolver solver(x);
  const auto idx = argmin_lambda(solver.loo_errors(y, grid), mode);
  std::vector<double> out(idx.size());
  std::transform(idx.begin(), idx.end(), out.begin(), [&](std::size_t i) { return grid[i]; });
  return out;
}

RidgeModel ridge_fit(const Matrix& x, const Matrix& y, double lambda) {
  if (x.rows() != y.rows()) throw std::invalid_argument("ridge_fit: row count differs");
  const RidgeSolver solver(x);
  std::vector<double> lam(static_cast<std::size_t>(y.cols()), lambda);
  return {solver.weights(y, lam), lam};
}

// -------------------------------------------------------------- scoring

std::vector<Fold> make_fold_plan(Index n, int folds) {
  if (folds < 2) throw std::invalid_argument("fold count must be >= 2");
  if (n < folds) {
    throw ValidationError("cannot split " + std::to_string(n) + " rows into " +
                          std::to_string(folds) + " folds");
  }
  std::vector<Fold> plan;
  Index start = 0;
  for (int f = 0; f < folds; ++f) {
    const Index size = n / folds + (f < n % folds ? 1 : 0);
    plan.push_back({start, start + size});
    start += size;
  }
  return plan;
}

void RidgeConfig::validate() const {
  if (lambda_grid.empty()) throw std::invalid_argument("lambda grid is empty");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > 0.0) || !std::isfinite(lambda_grid[i])) {
      throw std::invalid_argument("lambda grid values must be positive and finite");
    }
    if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1])) {
      throw std::invalid_argument("lambda grid must be strictly ascending");
    }
  }
  if (folds < 2) throw std::invalid_argument("fold count must be >= 2");
  if (min_test_samples < 3) throw std::invalid_argument("min_test_samples must be >= 3");
}

FoldFit fit_fold(const Matrix& x, const Matrix& y, const Fold& fold, const RidgeConfig& cfg,
                 std::span<const int> groups) {
  const Index n = x.rows();
  if (y.rows() != n) throw std::invalid_argument("design and targets differ in row count");
  if (!groups.empty() && static_cast<Index>(groups.size()) != n) {
    throw std::invalid_argument("one group id per row required");
  }
  if (fold.test_begin < 0 || fold.test_end > n || fold.test_size() <= 0) {
    throw std::invalid_argument("fold outside the data");
  }
  if (fold.test_size() < cfg.min_test_samples) {
    throw ValidationError("test fold has " + std::to_string(fold.test_size()) +
                          " rows, fewer than min_test_samples=" +
                          std::to_string(cfg.min_test_samples));
  }
  const Index b = fold.test_begin;
  const Index e = fold.test_end;
  const Index ntr = n - fold.test_size();
  auto split = [&](const Matrix& m, Matrix& train, Matrix& test) {
    train.resize(ntr, m.cols());
    train.topRows(b) = m.topRows(b);
    train.bottomRows(n - e) = m.bottomRows(n - e);
    test = m.middleRows(b, fold.test_size());
  };
  Matrix xtr, xte, ytr, yte;
  split(x, xtr, xte);
  split(y, ytr, yte);
  if (cfg.scaler == ScalerMode::per_story_train) {
    scale_fold(xtr, xte, groups, fold, n, cfg);
    scale_fold(ytr, yte, groups, fold, n, cfg);
  }

  FoldFit out;
  const RidgeSolver solver(xtr);
  const auto idx = argmin_lambda(solver.loo_errors(ytr, cfg.lambda_grid), cfg.lambda_mode);
  out.lambda.resize(idx.size());
  for (std::size_t v = 0; v < idx.size(); ++v) out.lambda[v] = cfg.lambda_grid[idx[v]];
  out.weights = solver.weights(ytr, out.lambda);
  out.prediction = xte * out.weights;
  out.observed = std::move(yte);
  out.score.resize(static_cast<std::size_t>(y.cols()));
  out.undefined.resize(static_cast<std::size_t>(y.cols()));
  const auto rows = static_cast<std::size_t>(fold.test_size());
  for (Index v = 0; v < y.cols(); ++v) {
    const auto c = pearson({out.prediction.col(v).data(), rows}, {out.observed.col(v).data(), rows});
    out.score[static_cast<std::size_t>(v)] = c.r;
    out.undefined[static_cast<std::size_t>(v)] = !c.defined;
  }
  return out;
}

ScoreTable brain_scores(const LaggedDesign& design, const Matrix& y, const RidgeConfig& cfg,
                        std::span<const int> groups, std::string feature_set,
                        std::optional<int> layer) {
  cfg.validate();
  const Matrix& x = design.matrix;
  if (x.rows() != y.rows()) {
    throw ValidationError("design has " + std::to_string(x.rows()) + " rows but targets have " +
                          std::to_string(y.rows()));
  }
  require_finite(x, "design");
  require_finite(y, "targets");
  const auto plan = make_fold_plan(x.rows(), cfg.folds);
  for (const auto& f : plan) {
    if (f.test_size() < cfg.min_test_samples) {
      throw ValidationError("test folds of " + std::to_string(f.test_size()) +
                            " rows are below min_test_samples=" +
                            std::to_string(cfg.min_test_samples));
    }
  }
  Matrix xs, ys;
  const Matrix* xp = &x;
  const Matrix* yp = &y;
  if (cfg.scaler == ScalerMode::per_story_global) {
    xs = robust_standardize(x, groups, cfg.clip_low, cfg.clip_high);
    ys = robust_standardize(y, groups, cfg.clip_low, cfg.clip_high);
    xp = &xs;
    yp = &ys;
  }

  ScoreTable table;
  table.feature_set = std::move(feature_set);
  table.layer = layer;
  table.scores.resize(cfg.folds, y.cols());
  table.undefined.resize(cfg.folds, y.cols());
  table.lambdas.resize(cfg.folds, y.cols());
  parallel_for(plan.size(), cfg.workers, [&](std::size_t f) {
    const auto fit = fit_fold(*xp, *yp, plan[f], cfg, groups);
    const auto row = static_cast<Index>(f);
    for (Index v = 0; v < y.cols(); ++v) {
      const auto vi = static_cast<std::size_t>(v);
      table.scores(row, v) = fit.score[vi];
      table.undefined(row, v) = fit.undefined[vi];
      table.lambdas(row, v) = fit.lambda[vi];
    }
  });
  return table;
}

void write_score_tables(const std::filesystem::path& path, std::span<const ScoreTable> tables) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string(), path.string());
  out << "feature_set,layer,fold,target,score\n";
  for (const auto& t : tables) {
    const std::string layer = t.layer ? std::to_string(*t.layer) : "";
    for (Index f = 0; f < t.folds(); ++f) {
      for (Index v = 0; v < t.targets(); ++v) {
        out << t.feature_set << ',' << layer << ',' << f << ',' << v << ','
            << (t.undefined(f, v) ? std::string("nan") : format_double(t.scores(f, v))) << '\n';
      }
    }
  }
}

std::vector<ScoreTable> read_score_tables(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open score table: " + path.string(), path.string());
  struct Entry {
    Index fold, target;
    double score;
  };
  std::map<std::pair<std::string, std::string>, std::vector<Entry>> groups;
  std::vector<std::pair<std::string, std::string>> order;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto cells = split_csv_line(line);
    if (cells.size() != 5) throw FormatError(where + ": expected 5 columns");
    if (lineno == 1 && cells[0] == "feature_set") continue;
    const auto key = std::make_pair(cells[0], cells[1]);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back({static_cast<Index>(parse_int(cells[2], where)),
                           static_cast<Index>(parse_int(cells[3], where)),
                           parse_double(cells[4], where)});
  }
  std::vector<ScoreTable> out;
  for (const auto& key : order) {
    const auto& entries = groups[key];
    Index folds = 0;
    Index targets = 0;
    for (const auto& e : entries) {
      if (e.fold < 0 || e.target < 0) throw ValidationError(path.string() + ": negative index");
      folds = std::max(folds, e.fold + 1);
      targets = std::max(targets, e.target + 1);
    }
    if (static_cast<Index>(entries.size()) != folds * targets) {
      throw ValidationError(path.string() + ": table '" + key.first +
                            "' does not cover every (fold, target) exactly once");
    }
    ScoreTable t;
    t.feature_set = key.first;
    if (!key.second.empty()) t.layer = static_cast<int>(parse_int(key.second, path.string()));
    t.scores = Matrix::Constant(folds, targets, std::nan(""));
    t.undefined.setConstant(folds, targets, false);
    t.lambdas = Matrix::Constant(folds, targets, std::nan(""));
    for (const auto& e : entries) {
      if (!std::isnan(t.scores(e.fold, e.target)) || t.undefined(e.fold, e.target)) {
        throw ValidationError(path.string() + ": duplicate entry in table '" + key.first + "'");
      }
      if (std::isnan(e.score)) {
        t.scores(e.fold, e.target) = 0.0;
        t.undefined(e.fold, e.target) = true;
      } else {
        t.scores(e.fold, e.target) = e.score;
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace synsem
