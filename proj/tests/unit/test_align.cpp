#include "support.hpp"

#include "synsem/align.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace synsem;

namespace {

/// Direct reading of the definition: argmin over TRs (first minimum),
/// sum per TR, then u_{i-j} for j in [0, lags) with zeros before the start.
Matrix naive_g(const Matrix& u, const std::vector<double>& onsets, const std::vector<double>& trs,
               int lags) {
  const auto n = static_cast<Index>(trs.size());
  Matrix binned = Matrix::Zero(n, u.cols());
  for (Index m = 0; m < u.rows(); ++m) {
    Index best = 0;
    for (Index k = 1; k < n; ++k) {
      if (std::abs(trs[k] - onsets[m]) < std::abs(trs[best] - onsets[m])) best = k;
    }
    binned.row(best) += u.row(m);
  }
  Matrix out = Matrix::Zero(n, lags * u.cols());
  for (Index i = 0; i < n; ++i) {
    for (int j = 0; j < lags; ++j) {
      if (i - j >= 0) out.block(i, j * u.cols(), 1, u.cols()) = binned.row(i - j);
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("temporal-align") {

TEST_CASE("nearest TR examples") {
  const std::vector<double> trs = {1.0, 3.0};
  const std::vector<double> onsets = {0.5, 1.5, 2.5};
  CHECK(nearest_tr(onsets, trs).index == std::vector<Index>{0, 0, 1});
  const std::vector<double> grid = {1.0, 2.0};
  const std::vector<double> mid = {1.5};
  CHECK(nearest_tr(mid, grid).index == std::vector<Index>{0});
  const std::vector<double> early = {-4.0};
  CHECK(nearest_tr(early, grid).index == std::vector<Index>{0});
  const std::vector<double> late = {99.0};
  CHECK(nearest_tr(late, grid).index == std::vector<Index>{1});
  const std::vector<double> none;
  CHECK_THROWS(nearest_tr(mid, none));
  const std::vector<double> bad = {2.0, 1.0};
  CHECK_THROWS(nearest_tr(mid, bad));
}

TEST_CASE("bin_sum sums rows per TR and leaves empty TRs at zero") {
  Matrix u(3, 1);
  u << 1, 2, 3;
  const TrAssignment a{{0, 0, 1}, 2};
  const Matrix b = bin_sum(u, a);
  CHECK(b(0, 0) == 3.0);
  CHECK(b(1, 0) == 3.0);
  const TrAssignment gap{{0, 0, 2}, 3};
  CHECK(bin_sum(u, gap)(1, 0) == 0.0);
  CHECK(bin_sum(u, gap).sum() == u.sum());
}

TEST_CASE("lag_stack pads with zeros, newest block first") {
  Matrix u(3, 1);
  u << 1, 2, 3;
  const auto d = lag_stack(u, 3);
  Matrix expected(3, 3);
  expected << 1, 0, 0, 2, 1, 0, 3, 2, 1;
  CHECK(d.matrix == expected);
  CHECK(lag_stack(u, 1).matrix == u);
  CHECK_THROWS(lag_stack(u, 0));
}

TEST_CASE("story concatenation keeps lags inside each story") {
  Matrix a(2, 1), b(2, 1);
  a << 1, 2;
  b << 5, 6;
  const std::vector<LaggedDesign> parts = {lag_stack(a, 2), lag_stack(b, 2)};
  const auto d = concat_stories(parts);
  REQUIRE(d.matrix.rows() == 4);
  CHECK(d.matrix(2, 1) == 0.0);  // first TR of the second story
  CHECK(d.matrix(3, 1) == 5.0);
}

TEST_CASE("g matches the direct definition on random instances") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> m_d(0, 50), n_d(1, 20), d_d(1, 4), l_d(1, 5);
  std::uniform_int_distribution<int> tick(-4, 90);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = n_d(rng);
    const int m = m_d(rng);
    const int lags = l_d(rng);
    // TRs on a 0.5 s grid and onsets on a 0.25 s grid force exact ties.
    std::vector<double> trs;
    for (int i = 0; i < n; ++i) trs.push_back(0.5 * (i + 1) + (rep % 3 == 0 ? 0.5 * i : 0.0));
    std::vector<double> onsets;
    for (int i = 0; i < m; ++i) onsets.push_back(0.25 * tick(rng));
    std::sort(onsets.begin(), onsets.end());
    const Matrix u = synsem::test::random_matrix(m, d_d(rng), rng);
    const auto g = align_events(u, onsets, trs, lags);
    CHECK(g.matrix == naive_g(u, onsets, trs, lags));
  }
}

TEST_CASE("g is linear in the features") {
  std::mt19937_64 rng(8);
  const std::vector<double> trs = {1, 2, 3, 4, 5, 6};
  std::vector<double> onsets = {0.1, 0.9, 1.4, 2.2, 2.6, 3.3, 5.9, 6.5};
  const Matrix u = synsem::test::random_matrix(8, 3, rng);
  const Matrix v = synsem::test::random_matrix(8, 3, rng);
  const double alpha = -1.75;
  const Matrix lhs = align_events(alpha * u + v, onsets, trs, 4).matrix;
  const Matrix rhs = alpha * align_events(u, onsets, trs, 4).matrix + align_events(v, onsets, trs, 4).matrix;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

}  // TEST_SUITE
