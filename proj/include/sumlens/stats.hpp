#pragma once

#include <array>
#include <span>

namespace sumlens {

// Linear-interpolation quantile (R type 7) of unsorted values; q in [0, 1].
double quantile(std::span<const double> values, double q);
std::array<double, 3> quartiles(std::span<const double> values);

double mean(std::span<const double> values);

}  // namespace sumlens
