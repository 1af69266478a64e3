#include "support.hpp"

#include "synsem/correlation.hpp"
#include "synsem/encoder.hpp"
#include "synsem/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace synsem;
using synsem::test::random_matrix;
using synsem::test::TempDir;

namespace {

Matrix normal_solve(const Matrix& x, const Matrix& y, double lambda) {
  const Matrix a = x.transpose() * x + lambda * Matrix::Identity(x.cols(), x.cols());
  return a.fullPivLu().solve(x.transpose() * y);
}

/// Percentile with linear interpolation between order statistics.
double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

RidgeConfig small_config(int folds) {
  RidgeConfig cfg;
  cfg.folds = folds;
  cfg.min_test_samples = 5;
  return cfg;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("robust standardization of a short column") {
  const Matrix x = (Matrix(3, 1) << 1, 2, 3).finished();
  const Matrix z = robust_standardize(x, {}, 0.0, 100.0);
  CHECK(z(0, 0) == doctest::Approx(-1.224744871).epsilon(1e-9));
  CHECK(z(1, 0) == doctest::Approx(0.0));
  CHECK(z(2, 0) == doctest::Approx(1.224744871).epsilon(1e-9));
  const Matrix d = robust_standardize(x);  // default band barely clips three points
  CHECK(d(0, 0) == doctest::Approx(-1.2247).epsilon(1e-3));
  CHECK(d(2, 0) == doctest::Approx(1.2247).epsilon(1e-3));
}

TEST_CASE("constant columns map to zeros") {
  Matrix x(5, 2);
  x.col(0).setConstant(7.0);
  x.col(1) << 1, 2, 3, 4, 5;
  const Matrix z = robust_standardize(x);
  CHECK(z.col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(z.col(1).mean() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("an extreme outlier is clipped to the upper percentile before scaling") {
  const Index n = 20000;
  std::vector<double> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0.0);
  v[500] = 1e9;
  Matrix x(n, 1);
  for (Index i = 0; i < n; ++i) x(i, 0) = v[static_cast<std::size_t>(i)];
  const double lo = percentile(v, 0.01);
  const double hi = percentile(v, 99.99);
  std::vector<double> c(v);
  for (auto& e : c) e = std::clamp(e, lo, hi);
  const double mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double e : c) ss += (e - mean) * (e - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  const Matrix z = robust_standardize(x);
  CHECK(hi < static_cast<double>(n));
  for (Index i = 0; i < n; ++i) {
    CHECK(z(i, 0) == doctest::Approx((c[static_cast<std::size_t>(i)] - mean) / sd).epsilon(1e-12));
  }
  CHECK(z(500, 0) < 2.0);
}

TEST_CASE("groups are scaled independently") {
  Matrix x(6, 1);
  x << 1, 2, 3, 100, 200, 300;
  const std::vector<int> groups = {0, 0, 0, 1, 1, 1};
  const Matrix z = robust_standardize(x, groups, 0.0, 100.0);
  CHECK(z.topRows(3).isApprox(z.bottomRows(3), 1e-12));
}

TEST_CASE("ridge closed-form examples") {
  const Matrix eye = Matrix::Identity(2, 2);
  const Matrix y = (Matrix(2, 1) << 3, 4).finished();
  const auto m = ridge_fit(eye, y, 0.0);
  CHECK(m.weights(0, 0) == doctest::Approx(3.0));
  CHECK(m.weights(1, 0) == doctest::Approx(4.0));

  const Matrix x = (Matrix(2, 1) << 1, 1).finished();
  const Matrix y2 = (Matrix(2, 1) << 1, 3).finished();
  CHECK(ridge_fit(x, y2, 2.0).weights(0, 0) == doctest::Approx(1.0));

  std::mt19937_64 rng(3);
  const Matrix xb = random_matrix(30, 6, rng);
  const Matrix yb = random_matrix(30, 4, rng);
  const auto big = ridge_fit(xb, yb, 1e12);
  CHECK(big.weights.norm() < 1e-6 * (xb.transpose() * yb).norm());
}

TEST_CASE("ridge matches the normal equations, primal and dual") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const Index n = std::uniform_int_distribution<Index>(5, 25)(rng);
    const Index d = std::uniform_int_distribution<Index>(2, 35)(rng);
    const Matrix x = random_matrix(n, d, rng);
    const Matrix y = random_matrix(n, 3, rng);
    const double lambda = std::pow(10.0, std::uniform_real_distribution<double>(-2, 3)(rng));
    const Matrix want = normal_solve(x, y, lambda);
    const Matrix got = ridge_fit(x, y, lambda).weights;
    INFO("n=" << n << " d=" << d << " lambda=" << lambda);
    CHECK((got - want).norm() <= 1e-8 * want.norm());
    CHECK(RidgeSolver(x).dual() == (d > n));
  }
}

TEST_CASE("closed-form leave-one-out errors match explicit refits") {
  std::mt19937_64 rng(8);
  const Matrix x = random_matrix(12, 3, rng);
  const Matrix y = random_matrix(12, 2, rng);
  const std::vector<double> grid = {0.01, 0.1, 1.0, 10.0};
  const Matrix loo = RidgeSolver(x).loo_errors(y, grid);
  REQUIRE(loo.rows() == 4);
  REQUIRE(loo.cols() == 2);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (Index t = 0; t < 2; ++t) {
      double sq = 0.0;
      for (Index i = 0; i < 12; ++i) {
        Matrix xi(11, 3);
        Matrix yi(11, 1);
        for (Index r = 0, k = 0; r < 12; ++r) {
          if (r == i) continue;
          xi.row(k) = x.row(r);
          yi(k++, 0) = y(r, t);
        }
        const Matrix w = normal_solve(xi, yi, grid[g]);
        const double res = y(i, t) - (x.row(i) * w)(0, 0);
        sq += res * res;
      }
      CHECK(loo(static_cast<Index>(g), t) == doctest::Approx(sq / 12.0).epsilon(1e-8));
    }
  }
  // Dual path agrees with the primal one.
  const Matrix xw = random_matrix(8, 20, rng);
  const Matrix yw = random_matrix(8, 2, rng);
  const Matrix dual = RidgeSolver(xw).loo_errors(yw, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (Index t = 0; t < 2; ++t) {
      double sq = 0.0;
      for (Index i = 0; i < 8; ++i) {
        Matrix xi(7, 20);
        Matrix yi(7, 1);
        for (Index r = 0, k = 0; r < 8; ++r) {
          if (r == i) continue;
          xi.row(k) = xw.row(r);
          yi(k++, 0) = yw(r, t);
        }
        const double res = yw(i, t) - (xw.row(i) * normal_solve(xi, yi, grid[g]))(0, 0);
        sq += res * res;
      }
      CHECK(dual(static_cast<Index>(g), t) == doctest::Approx(sq / 8.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("lambda selection: exact fit wins, ties go to the smaller lambda") {
  Matrix loo(3, 2);
  loo << 0.5, 0.2,
         0.0, 0.2,
         0.3, 0.9;
  const auto idx = argmin_lambda(loo, LambdaMode::per_target);
  CHECK(idx == std::vector<std::size_t>{1, 0});
  CHECK(argmin_lambda(loo, LambdaMode::shared) == std::vector<std::size_t>{1, 1});
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(20, 2, rng);
  const Matrix y = x * (Matrix(2, 1) << 1, -2).finished();
  const std::vector<double> grid = {1e-12, 1.0, 100.0};
  CHECK(select_lambda(x, y, grid)[0] == 1e-12);
  CHECK_THROWS(select_lambda(x, y, {}));
}

TEST_CASE("pearson examples") {
  const std::vector<double> a = {1, 2, 3};
  const std::vector<double> b = {1, 2, 4};
  CHECK(pearson(a, b).r == doctest::Approx(3.0 / (std::sqrt(2.0) * std::sqrt(42.0 / 9.0))));
  CHECK(pearson(a, b).r == doctest::Approx(0.9820).epsilon(1e-4));
  CHECK(pearson(a, a).r == doctest::Approx(1.0));
  const std::vector<double> neg = {-1, -2, -3};
  CHECK(pearson(a, neg).r == doctest::Approx(-1.0));
  const std::vector<double> flat = {2, 2, 2};
  const auto c = pearson(a, flat);
  CHECK_FALSE(c.defined);
  CHECK(c.r == 0.0);
  const std::vector<double> two = {1, 2};
  CHECK_THROWS(pearson(a, two));
  CHECK_THROWS(pearson(two, two));
}

TEST_CASE("fold plan is contiguous and ordered") {
  const auto plan = make_fold_plan(200, 10);
  REQUIRE(plan.size() == 10);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    CHECK(plan[i].test_begin == static_cast<Index>(20 * i));
    CHECK(plan[i].test_size() == 20);
  }
  const auto uneven = make_fold_plan(23, 5);
  CHECK(uneven.front().test_size() == 5);
  CHECK(uneven.back().test_size() == 4);
  CHECK(uneven.back().test_end == 23);
  Index covered = 0;
  for (std::size_t i = 0; i < uneven.size(); ++i) {
    CHECK(uneven[i].test_begin == covered);
    covered = uneven[i].test_end;
  }
}

TEST_CASE("noiseless targets are recovered") {
  std::mt19937_64 rng(11);
  LaggedDesign design{random_matrix(300, 8, rng), 1};
  const Matrix y = design.matrix * random_matrix(8, 5, rng);
  const auto table = brain_scores(design, y, small_config(10));
  CHECK(table.scores.minCoeff() > 0.999);
  CHECK_FALSE(table.undefined.any());
}

TEST_CASE("null targets score near zero") {
  std::mt19937_64 rng(12);
  const int folds = 10;
  const Index n = 400;
  LaggedDesign design{random_matrix(n, 10, rng), 1};
  const Matrix y = random_matrix(n, 20, rng);
  const auto table = brain_scores(design, y, small_config(folds));
  const double bound = 3.0 / std::sqrt(static_cast<double>(folds) * (n / folds));
  CHECK(std::abs(table.scores.mean()) < bound);
}

TEST_CASE("test rows never reach the fitted weights") {
  std::mt19937_64 rng(13);
  const Index n = 120;
  const Matrix x = random_matrix(n, 6, rng);
  const Matrix y = x * random_matrix(6, 3, rng) + random_matrix(n, 3, rng);
  const auto cfg = small_config(6);
  const auto plan = make_fold_plan(n, cfg.folds);
  const std::vector<int> groups(static_cast<std::size_t>(n), 0);
  for (const auto& fold : plan) {
    const auto base = fit_fold(x, y, fold, cfg, groups);
    Matrix xp = x;
    Matrix yp = y;
    std::vector<Index> perm(static_cast<std::size_t>(fold.test_size()));
    std::iota(perm.begin(), perm.end(), fold.test_begin);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Index i = 0; i < fold.test_size(); ++i) {
      xp.row(fold.test_begin + i) = x.row(perm[static_cast<std::size_t>(i)]);
      yp.row(fold.test_begin + i) = y.row(perm[static_cast<std::size_t>(i)]);
    }
    // Replace the test targets entirely: still no effect on the weights.
    yp.middleRows(fold.test_begin, fold.test_size()) *= -5.0;
    const auto moved = fit_fold(xp, yp, fold, cfg, groups);
    CHECK(moved.weights == base.weights);
    CHECK(moved.lambda == base.lambda);
  }
}

TEST_CASE("scores are invariant to positive rescaling of targets") {
  std::mt19937_64 rng(14);
  LaggedDesign design{random_matrix(200, 5, rng), 1};
  Matrix y = design.matrix * random_matrix(5, 4, rng) + 2.0 * random_matrix(200, 4, rng);
  const auto base = brain_scores(design, y, small_config(10));
  for (Index v = 0; v < 4; ++v) y.col(v) *= std::pow(10.0, static_cast<double>(v) - 1.0);
  const auto scaled = brain_scores(design, y, small_config(10));
  CHECK((scaled.scores - base.scores).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("worker count does not change scores; both scaler modes run") {
  std::mt19937_64 rng(15);
  LaggedDesign design{random_matrix(160, 40, rng), 2};
  const Matrix y = random_matrix(160, 7, rng);
  std::vector<int> groups(160, 0);
  std::fill(groups.begin() + 80, groups.end(), 1);
  auto cfg = small_config(8);
  const auto one = brain_scores(design, y, cfg, groups);
  cfg.workers = 3;
  const auto three = brain_scores(design, y, cfg, groups);
  CHECK(one.scores == three.scores);
  CHECK(one.lambdas == three.lambdas);
  cfg.scaler = ScalerMode::per_story_global;
  const auto global = brain_scores(design, y, cfg, groups);
  CHECK(global.scores.rows() == 8);
}

TEST_CASE("guards on folds and inputs") {
  std::mt19937_64 rng(16);
  LaggedDesign design{random_matrix(50, 3, rng), 1};
  const Matrix y = random_matrix(50, 2, rng);
  auto cfg = small_config(10);
  cfg.min_test_samples = 10;
  CHECK_THROWS_AS(brain_scores(design, y, cfg), ValidationError);
  cfg.min_test_samples = 5;
  CHECK_THROWS_AS(brain_scores(design, random_matrix(40, 2, rng), cfg), ValidationError);
  LaggedDesign bad = design;
  bad.matrix(3, 1) = std::nan("");
  CHECK_THROWS_AS(brain_scores(bad, y, cfg), ValidationError);
}

TEST_CASE("score tables round-trip through CSV") {
  std::mt19937_64 rng(17);
  LaggedDesign design{random_matrix(60, 3, rng), 1};
  Matrix y = random_matrix(60, 3, rng);
  y.col(2).setConstant(1.0);
  const std::vector<ScoreTable> tables = {brain_scores(design, y, small_config(6), {}, "X0", 0),
                                          brain_scores(design, y, small_config(6), {}, "phono")};
  CHECK(tables[0].undefined.col(2).all());
  TempDir dir;
  write_score_tables(dir / "scores.csv", tables);
  const auto back = read_score_tables(dir / "scores.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].feature_set == "X0");
  CHECK(back[0].layer == 0);
  CHECK_FALSE(back[1].layer.has_value());
  CHECK(back[0].undefined.col(2).all());
  CHECK(back[1].scores.leftCols(2).isApprox(tables[1].scores.leftCols(2), 1e-12));
}

}  // TEST_SUITE
