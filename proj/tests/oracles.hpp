#pragma once

// Independent reference computations used as test oracles. None of these
// call into the library code they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace second::oracle {

// Full descending sort, k-th value as threshold, strict comparison, and the
// lowest-index maximum when nothing clears the threshold.
inline std::vector<std::uint8_t> strict_topk(const std::vector<double>& v, double fraction) {
  const std::size_t n = v.size();
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction));
  if (k < 1) k = 1;
  if (k > n) k = n;
  const double threshold = sorted[k - 1];
  std::vector<std::uint8_t> keep(n, 0);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (v[i] > threshold) keep[i] = 1, any = true;
  }
  if (!any) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (v[i] > v[best]) best = i;
    }
    keep[best] = 1;
  }
  return keep;
}

// Textbook four-weight bilinear sample of a single-channel row-major grid at
// fractional source coordinates (clamped to the grid).
inline double bilinear_sample(const std::vector<double>& grid, std::size_t rows, std::size_t cols, double y, double x) {
  y = std::clamp(y, 0.0, static_cast<double>(rows - 1));
  x = std::clamp(x, 0.0, static_cast<double>(cols - 1));
  const auto y0 = static_cast<std::size_t>(std::floor(y)), x0 = static_cast<std::size_t>(std::floor(x));
  const std::size_t y1 = std::min(y0 + 1, rows - 1), x1 = std::min(x0 + 1, cols - 1);
  const double fy = y - static_cast<double>(y0), fx = x - static_cast<double>(x0);
  return (1 - fy) * (1 - fx) * grid[y0 * cols + x0] + (1 - fy) * fx * grid[y0 * cols + x1] +
         fy * (1 - fx) * grid[y1 * cols + x0] + fy * fx * grid[y1 * cols + x1];
}

inline double dice(const std::vector<double>& a, const std::vector<double>& g) {
  long double num = 0, sa = 0, sg = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += static_cast<long double>(a[i]) * g[i];
    sa += a[i];
    sg += g[i];
  }
  return static_cast<double>(2 * num / (sa + sg));
}

// -ln softmax(logits)[token] in extended precision.
inline double cross_entropy(const std::vector<double>& logits, std::size_t token) {
  long double peak = *std::max_element(logits.begin(), logits.end());
  long double sum = 0;
  for (double l : logits) sum += std::exp(static_cast<long double>(l) - peak);
  return static_cast<double>(-(static_cast<long double>(logits[token]) - peak - std::log(sum)));
}

inline std::size_t popcount(const std::vector<std::uint8_t>& bits) {
  std::size_t n = 0;
  for (auto b : bits) n += b ? 1 : 0;
  return n;
}

}  // namespace second::oracle
