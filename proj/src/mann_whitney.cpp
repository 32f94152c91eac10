#include "ebrake/mann_whitney.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ebrake {

namespace {

struct Ranked {
  std::vector<int> doubled_ranks;  // 2 * mid-rank, always integral
  double tie_term = 0.0;           // sum over tie groups of t^3 - t
};

Ranked rank_pooled(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size() + b.size();
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  Ranked r;
  r.doubled_ranks.resize(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    // Ranks i+1..j+1 share the mid-rank (i + j + 2) / 2.
    for (std::size_t k = i; k <= j; ++k) {
      r.doubled_ranks[order[k]] = static_cast<int>(i + j + 2);
    }
    const double t = static_cast<double>(j - i + 1);
    r.tie_term += t * t * t - t;
    i = j + 1;
  }
  return r;
}

// Probability, over all equally likely choices of which na pooled items
// belong to the first sample, that |U - mean| >= |u_obs - mean|.
double exact_two_sided(const std::vector<int>& doubled_ranks, int na,
                       int observed_doubled_sum) {
  const int total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0);
  // counts[k][s]: subsets of size k with doubled rank sum s.
  std::vector<std::vector<double>> counts(na + 1, std::vector<double>(total + 1, 0.0));
  counts[0][0] = 1.0;
  for (int r : doubled_ranks) {
    for (int k = na; k >= 1; --k) {
      for (int s = total; s >= r; --s) counts[k][s] += counts[k - 1][s - r];
    }
  }
  // n * |S - E[S]| stays integral.
  const long n = static_cast<long>(doubled_ranks.size());
  const long scaled_mean = static_cast<long>(na) * total;
  const long dev_obs = std::labs(n * observed_doubled_sum - scaled_mean);
  double hit = 0.0;
  double all = 0.0;
  for (int s = 0; s <= total; ++s) {
    const double c = counts[na][s];
    if (c == 0.0) continue;
    all += c;
    if (std::labs(n * s - scaled_mean) >= dev_obs) hit += c;
  }
  return std::min(1.0, hit / all);
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a,
                                 std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::domain_error("mann_whitney_u: empty sample");
  const int na = static_cast<int>(a.size());
  const int nb = static_cast<int>(b.size());
  const Ranked ranked = rank_pooled(a, b);
  int doubled_sum = 0;
  for (int i = 0; i < na; ++i) doubled_sum += ranked.doubled_ranks[i];

  MannWhitneyResult out;
  out.u = 0.5 * doubled_sum - 0.5 * na * (na + 1.0);

  if (na + nb <= kExactLimit) {
    out.exact = true;
    out.p_value = exact_two_sided(ranked.doubled_ranks, na, doubled_sum);
    return out;
  }

  const double n = na + nb;
  const double mean = 0.5 * na * nb;
  const double var = na * nb / 12.0 * ((n + 1.0) - ranked.tie_term / (n * (n - 1.0)));
  if (var <= 0.0) {
    out.p_value = 1.0;
    return out;
  }
  const double dev = std::max(0.0, std::abs(out.u - mean) - 0.5);
  const double z = dev / std::sqrt(var);
  out.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return out;
}

}  // namespace ebrake
