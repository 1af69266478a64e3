#include "support.hpp"

#include "synsem/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace synsem;
using synsem::test::TempDir;

namespace {

/// Two-sided p by enumerating all 2^n sign assignments of the midranks.
double enumerate_p(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> ranks(n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(x[a]) < std::abs(x[b]); });
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && std::abs(x[order[j]]) == std::abs(x[order[i]])) ++j;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = (static_cast<double>(i + j) + 1.0) / 2.0;
    i = j;
  }
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > 0) t += ranks[i];
  }
  double lower = 0.0;
  double upper = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) s += ranks[i];
    }
    if (s <= t + 1e-9) lower += 1.0;
    if (s >= t - 1e-9) upper += 1.0;
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / std::ldexp(1.0, static_cast<int>(n)));
}

std::vector<double> bh_oracle(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> adj(m);
  for (std::size_t i = 0; i < m; ++i) {
    double best = 1.0;
    for (std::size_t j = i; j < m; ++j) {
      best = std::min(best, static_cast<double>(m) * p[order[j]] / static_cast<double>(j + 1));
    }
    adj[order[i]] = best;
  }
  return adj;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("region averages ignore unlabeled targets") {
  Matrix scores(2, 3);
  scores << 0.1, 0.3, 0.9,
            0.5, 0.7, -1.0;
  ParcellationTable parc;
  parc.regions = {"A", "B"};
  parc.target_region = {{0, 0}, {1, 0}};
  const auto roi = roi_average(scores, parc);
  REQUIRE(roi.regions == std::vector<std::string>{"A"});
  CHECK(roi.dropped == std::vector<std::string>{"B"});
  CHECK(roi.values.rows() == 2);
  CHECK(roi.values(0, 0) == doctest::Approx(0.2));
  CHECK(roi.values(1, 0) == doctest::Approx(0.6));
}

TEST_CASE("region averaging commutes with the fold mean") {
  std::mt19937_64 rng(1);
  const Matrix scores = synsem::test::random_matrix(7, 12, rng);
  ParcellationTable parc;
  parc.regions = {"A", "B", "C"};
  for (Index v = 0; v < 11; ++v) parc.target_region[v] = static_cast<int>(v % 3);
  const auto roi = roi_average(scores, parc);
  const Matrix folded = scores.colwise().mean();
  const auto roi_of_mean = roi_average(folded, parc);
  for (Index r = 0; r < 3; ++r) {
    CHECK(roi.values.col(r).mean() == doctest::Approx(roi_of_mean.values(0, r)).epsilon(1e-12));
  }
}

TEST_CASE("exact Wilcoxon examples") {
  const std::vector<double> pos = {0.1, 0.2, 0.3, 0.4, 0.5};
  const auto r = wilcoxon_signed_rank(pos);
  CHECK(r.exact);
  CHECK(r.n == 5);
  CHECK(r.p == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(r.statistic == 15.0);
  const std::vector<double> zeros(8, 0.0);
  const auto z = wilcoxon_signed_rank(zeros);
  CHECK(z.degenerate);
  CHECK(z.p == 1.0);
  const std::vector<double> four = {1, 2, 0, 3, 4};
  CHECK_THROWS_AS(wilcoxon_signed_rank(four), ValidationError);
}

TEST_CASE("exact Wilcoxon matches full sign enumeration, including ties") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = std::uniform_int_distribution<int>(5, 12)(rng);
    std::vector<double> x;
    for (int i = 0; i < n; ++i) {
      double v = std::uniform_int_distribution<int>(1, rep % 2 ? 4 : 1000)(rng);  // odd reps tie heavily
      if (rng() % 2) v = -v;
      x.push_back(v + (rep % 3 == 0 ? 0.25 : 0.0));
    }
    CHECK(wilcoxon_exact_p(x) == doctest::Approx(enumerate_p(x)).epsilon(1e-12));
  }
}

TEST_CASE("two-sided p is invariant to a global sign flip") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.3, 1.0);
  for (int n : {6, 15, 40}) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = nd(rng);
    std::vector<double> neg = x;
    for (auto& v : neg) v = -v;
    CHECK(wilcoxon_signed_rank(x).p == doctest::Approx(wilcoxon_signed_rank(neg).p).epsilon(1e-14));
  }
}

TEST_CASE("normal approximation against the exact distribution at n = 15") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd(0.0, 1.0);
  double rel_sum = 0.0;
  int pointwise_ok = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> x(15);
    for (auto& v : x) v = nd(rng);
    const double exact = wilcoxon_exact_p(x);
    const double approx = wilcoxon_normal_p(x);
    const double rel = std::abs(approx - exact) / exact;
    rel_sum += rel;
    if (rel <= 0.05) ++pointwise_ok;
    if (exact >= 0.05) CHECK(rel <= 0.05);
  }
  MESSAGE("draws within 5% of exact: " << pointwise_ok << "/100");
  CHECK(rel_sum / 100.0 <= 0.05);
}

TEST_CASE("Benjamini-Hochberg examples") {
  const std::vector<double> p = {0.01, 0.03, 0.04, 0.5};
  const auto r = fdr_bh(p);
  CHECK(r.adjusted[0] == doctest::Approx(0.04));
  CHECK(r.adjusted[1] == doctest::Approx(0.16 / 3.0));
  CHECK(r.adjusted[2] == doctest::Approx(0.16 / 3.0));
  CHECK(r.adjusted[3] == doctest::Approx(0.5));
  CHECK(r.reject == std::vector<bool>{true, false, false, false});
  const std::vector<double> ones(6, 1.0);
  for (double a : fdr_bh(ones).adjusted) CHECK(a == 1.0);
  const std::vector<double> single = {0.2};
  CHECK(fdr_bh(single).adjusted[0] == 0.2);
  const std::vector<double> bad = {0.1, 1.2};
  CHECK_THROWS(fdr_bh(bad));
}

TEST_CASE("Benjamini-Hochberg matches the step-up oracle and is monotone") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    const auto m = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
    std::vector<double> p(m);
    for (auto& v : p) v = rep % 2 ? u(rng) * 0.1 : u(rng);
    if (m > 3) p[1] = p[0];  // ties
    const auto adj = fdr_bh(p).adjusted;
    const auto want = bh_oracle(p);
    for (std::size_t i = 0; i < m; ++i) CHECK(adj[i] == doctest::Approx(want[i]).epsilon(1e-14));
    auto raised = p;
    const auto k = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
    raised[k] = std::min(1.0, raised[k] + u(rng));
    const auto adj2 = fdr_bh(raised).adjusted;
    for (std::size_t i = 0; i < m; ++i) CHECK(adj2[i] >= adj[i]);
  }
}

TEST_CASE("region significance and ranking") {
  Matrix v(10, 2);
  for (Index f = 0; f < 10; ++f) {
    v(f, 0) = 0.1 + 0.01 * static_cast<double>(f);
    v(f, 1) = f % 2 ? 0.05 : -0.05;
  }
  RoiScores roi{{"strong", "null"}, v, {}};
  const auto rows = region_significance(roi, "syntactic");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].reject);
  CHECK_FALSE(rows[1].reject);
  CHECK(rows[0].p_raw == doctest::Approx(2.0 / 1024.0));
  CHECK(rows[0].component == "syntactic");
  const auto top = top_regions(roi, 1);
  REQUIRE(top.size() == 1);
  CHECK(top[0].region == "strong");
  CHECK(top[0].mean == doctest::Approx(0.145));
  TempDir dir;
  write_significance(dir / "sig.csv", rows);
  CHECK(synsem::test::read_file(dir / "sig.csv").rfind("region,component,p_raw,p_adj,reject\n", 0) == 0);
}

}  // TEST_SUITE
