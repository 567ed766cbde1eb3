#include "flowshift/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <numeric>

#include "flowshift/error.hpp"
#include "flowshift/kernels.hpp"

namespace flowshift {
namespace {

struct Ranked {
  std::vector<std::int64_t> doubled_ranks;  // 2 * midrank, in pooled order (before..., after...)
  std::vector<std::int64_t> tie_sizes;
};

Ranked midranks(std::span<const double> before, std::span<const double> after) {
  const std::size_t n = before.size() + after.size();
  std::vector<std::pair<double, std::size_t>> pooled;
  pooled.reserve(n);
  for (std::size_t i = 0; i < before.size(); ++i) pooled.emplace_back(before[i], i);
  for (std::size_t i = 0; i < after.size(); ++i) pooled.emplace_back(after[i], before.size() + i);
  std::sort(pooled.begin(), pooled.end());
  Ranked r;
  r.doubled_ranks.resize(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
    // Ranks i+1 .. j+1 share the midrank (i+j+2)/2.
    const auto doubled = static_cast<std::int64_t>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) r.doubled_ranks[pooled[k].second] = doubled;
    r.tie_sizes.push_back(static_cast<std::int64_t>(j - i + 1));
    i = j + 1;
  }
  return r;
}

// Number of k-subsets of `ranks` with each doubled rank sum, by dynamic programming.
std::vector<double> subset_sum_counts(const std::vector<std::int64_t>& ranks, std::size_t k) {
  const std::int64_t max_sum = std::accumulate(ranks.begin(), ranks.end(), std::int64_t{0});
  const auto width = static_cast<std::size_t>(max_sum + 1);
  std::vector<double> ways((k + 1) * width, 0.0);
  ways[0] = 1.0;
  std::int64_t reach = 0;
  for (std::size_t item = 0; item < ranks.size(); ++item) {
    const auto r = ranks[item];
    reach += r;
    const std::size_t top = std::min(k, item + 1);
    for (std::size_t j = top; j >= 1; --j) {
      double* dst = &ways[j * width];
      const double* src = &ways[(j - 1) * width];
      for (std::int64_t s = reach; s >= r; --s) dst[s] += src[s - r];
    }
  }
  return std::vector<double>(ways.begin() + static_cast<std::ptrdiff_t>(k * width), ways.end());
}

}  // namespace

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::up: return "up";
    case Direction::down: return "down";
    case Direction::none: break;
  }
  return "none";
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

WmwResult wmw_test(std::span<const double> before, std::span<const double> after, double alpha, WmwMode mode) {
  if (before.size() < 3 || after.size() < 3) {
    throw insufficient_data("insufficient data: rank test needs 3 values per period, got " +
                            std::to_string(before.size()) + " before and " + std::to_string(after.size()) + " after");
  }
  for (double v : before) {
    if (!std::isfinite(v)) throw input_error("non-finite value in before sample");
  }
  for (double v : after) {
    if (!std::isfinite(v)) throw input_error("non-finite value in after sample");
  }
  const std::size_t m = before.size(), n = after.size(), total = m + n;
  const Ranked ranked = midranks(before, after);

  std::int64_t doubled_after = 0;
  for (std::size_t i = m; i < total; ++i) doubled_after += ranked.doubled_ranks[i];
  const auto nn = static_cast<double>(n), mm = static_cast<double>(m);
  WmwResult res;
  res.u_after = double(doubled_after) / 2.0 - nn * (nn + 1.0) / 2.0;

  if (ranked.tie_sizes.size() == 1) {
    // Every value equal: no evidence either way.
    res.p_less = res.p_greater = 0.5;
    res.exact = mode != WmwMode::normal && m * n <= kExactCellLimit;
    return res;
  }

  const bool exact = mode == WmwMode::exact || (mode == WmwMode::automatic && m * n <= kExactCellLimit);
  res.exact = exact;
  if (exact) {
    // Enumerate over the smaller group; the other group's sum is the complement.
    const bool use_after = n <= m;
    const std::size_t k = use_after ? n : m;
    const auto counts = subset_sum_counts(ranked.doubled_ranks, k);
    const std::int64_t all = std::accumulate(ranked.doubled_ranks.begin(), ranked.doubled_ranks.end(), std::int64_t{0});
    const std::int64_t observed = use_after ? doubled_after : all - doubled_after;
    double le = 0.0, ge = 0.0, sum = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (counts[s] == 0.0) continue;
      sum += counts[s];
      if (static_cast<std::int64_t>(s) <= observed) le += counts[s];
      if (static_cast<std::int64_t>(s) >= observed) ge += counts[s];
    }
    // P(after sum >= obs) equals P(before sum <= complement).
    res.p_greater = (use_after ? ge : le) / sum;
    res.p_less = (use_after ? le : ge) / sum;
  } else {
    const double big_n = double(total);
    double tie_term = 0.0;
    for (auto t : ranked.tie_sizes) tie_term += double(t) * double(t) * double(t) - double(t);
    const double var = mm * nn / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    const double sd = std::sqrt(var);
    const double mu = mm * nn / 2.0;
    res.p_greater = normal_sf((res.u_after - mu - 0.5) / sd);
    res.p_less = 1.0 - normal_sf((res.u_after - mu + 0.5) / sd);
  }

  const bool up = res.p_greater < alpha;
  const bool down = res.p_less < alpha;
  if (up && down) throw internal_error("both one-sided p-values below alpha");
  res.direction = up ? Direction::up : down ? Direction::down : Direction::none;
  return res;
}

double median(std::vector<double> values) {
  if (values.empty()) throw insufficient_data("median of empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return lo + (hi - lo) / 2.0;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw insufficient_data("mean of empty sample");
  return kernels::moments_f64(values).sum / double(values.size());
}

}  // namespace flowshift
