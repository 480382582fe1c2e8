#include "sumlens/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sumlens/error.hpp"

namespace sumlens {

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw RangeError("quantile level outside [0,1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::array<double, 3> quartiles(std::span<const double> values) {
  return {quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)};
}

double mean(std::span<const double> values) {
  if (values.empty()) throw DataError("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace sumlens
