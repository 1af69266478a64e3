#include "synsem/stats.hpp"

#include "synsem/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace synsem {
namespace {

// Midranks of |x| doubled, so ties stay integral.
std::vector<long> doubled_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(x[a]) < std::abs(x[b]); });
  std::vector<long> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(x[order[j + 1]]) == std::abs(x[order[i]])) ++j;
    const auto twice_mid = static_cast<long>(i + 1 + j + 1);  // (i+1) + (j+1)
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = twice_mid;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

RoiScores roi_average(const Matrix& scores, const ParcellationTable& parc) {
  const auto assign = parc.assignment(scores.cols());
  std::vector<std::vector<Index>> members(parc.regions.size());
  for (Index v = 0; v < scores.cols(); ++v) {
    const int r = assign[static_cast<std::size_t>(v)];
    if (r >= 0) members[static_cast<std::size_t>(r)].push_back(v);
  }
  RoiScores out;
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < members.size(); ++r) {
    if (members[r].empty()) {
      out.dropped.push_back(parc.regions[r]);
    } else {
      out.regions.push_back(parc.regions[r]);
      kept.push_back(r);
    }
  }
  out.values.resize(scores.rows(), static_cast<Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto& m = members[kept[k]];
    for (Index f = 0; f < scores.rows(); ++f) {
      double sum = 0.0;
      for (Index v : m) sum += scores(f, v);
      out.values(f, static_cast<Index>(k)) = sum / static_cast<double>(m.size());
    }
  }
  return out;
}

double wilcoxon_exact_p(std::span<const double> samples) {
  const auto ranks = doubled_ranks(samples);
  const long total = std::accumulate(ranks.begin(), ranks.end(), 0L);
  // counts[s] = number of sign assignments whose positive doubled-rank sum is s.
  std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  long reach = 0;
  for (long r : ranks) {
    reach += r;
    for (long s = reach; s >= r; --s) counts[static_cast<std::size_t>(s)] += counts[static_cast<std::size_t>(s - r)];
  }
  long t = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i] > 0) t += ranks[i];
  }
  const double all = std::ldexp(1.0, static_cast<int>(samples.size()));
  double lower = 0.0;
  double upper = 0.0;
  for (long s = 0; s <= total; ++s) {
    if (s <= t) lower += counts[static_cast<std::size_t>(s)];
    if (s >= t) upper += counts[static_cast<std::size_t>(s)];
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / all);
}

double wilcoxon_normal_p(std::span<const double> samples) {
  std::vector<double> x;
  for (double v : samples) {
    if (v != 0.0) x.push_back(v);
  }
  if (x.empty()) return 1.0;
  const auto n = static_cast<double>(x.size());
  const auto ranks = doubled_ranks(x);
  long t2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0) t2 += ranks[i];
  }
  double tie_term = 0.0;
  auto sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  if (!(var > 0.0)) return 1.0;
  double d = static_cast<double>(t2) / 2.0 - mean;
  if (d > 0) {
    d = std::max(0.0, d - 0.5);
  } else if (d < 0) {
    d = std::min(0.0, d + 0.5);
  }
  return std::min(1.0, std::erfc(std::abs(d) / std::sqrt(var) / std::sqrt(2.0)));
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> samples) {
  std::vector<double> x;
  for (double v : samples) {
    if (!std::isfinite(v)) throw ValidationError("wilcoxon: non-finite sample");
    if (v != 0.0) x.push_back(v);
  }
  WilcoxonResult res;
  if (x.empty() && !samples.empty()) {
    res.degenerate = true;
    return res;
  }
  if (x.size() < 5) {
    throw ValidationError("wilcoxon: need at least 5 nonzero samples, got " +
                          std::to_string(x.size()));
  }
  res.n = static_cast<int>(x.size());
  const auto ranks = doubled_ranks(x);
  long t2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0) t2 += ranks[i];
  }
  res.statistic = static_cast<double>(t2) / 2.0;
  if (x.size() <= 15) {
    res.exact = true;
    res.p = wilcoxon_exact_p(x);
    return res;
  }
  res.p = wilcoxon_normal_p(x);
  return res;
}

FdrResult fdr_bh(std::span<const double> pvalues, double q) {
  const std::size_t m = pvalues.size();
  for (double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p-value outside [0, 1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
  FdrResult res;
  res.adjusted.resize(m);
  res.reject.resize(m);
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const std::size_t i = order[k];
    running = std::min(running, static_cast<double>(m) * pvalues[i] / static_cast<double>(k + 1));
    res.adjusted[i] = std::min(1.0, running);
  }
  for (std::size_t i = 0; i < m; ++i) res.reject[i] = res.adjusted[i] <= q;
  return res;
}

std::vector<SignificanceRow> region_significance(const RoiScores& roi, const std::string& component,
                                                 double q) {
  std::vector<double> p(roi.regions.size());
  for (std::size_t r = 0; r < roi.regions.size(); ++r) {
    const auto col = roi.values.col(static_cast<Index>(r));
    p[r] = wilcoxon_signed_rank(std::span<const double>(col.data(), static_cast<std::size_t>(col.size()))).p;
  }
  const auto adj = fdr_bh(p, q);
  std::vector<SignificanceRow> rows;
  for (std::size_t r = 0; r < p.size(); ++r) {
    rows.push_back({roi.regions[r], component, p[r], adj.adjusted[r], adj.reject[r]});
  }
  return rows;
}

void write_significance(const std::filesystem::path& path, std::span<const SignificanceRow> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string(), path.string());
  out << "region,component,p_raw,p_adj,reject\n";
  for (const auto& r : rows) {
    out << r.region << ',' << r.component << ',' << format_double(r.p_raw) << ','
        << format_double(r.p_adj) << ',' << (r.reject ? "true" : "false") << '\n';
  }
}

std::vector<RegionSummary> top_regions(const RoiScores& roi, std::size_t count) {
  std::vector<RegionSummary> out;
  const auto folds = static_cast<double>(roi.values.rows());
  for (std::size_t r = 0; r < roi.regions.size(); ++r) {
    const auto col = roi.values.col(static_cast<Index>(r));
    const double mean = col.mean();
    double sem = 0.0;
    if (folds > 1) {
      const double var = (col.array() - mean).square().sum() / (folds - 1.0);
      sem = std::sqrt(var / folds);
    }
    out.push_back({roi.regions[r], mean, sem});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RegionSummary& a, const RegionSummary& b) { return a.mean > b.mean; });
  if (out.size() > count) out.resize(count);
  return out;
}

}  // namespace synsem
