#pragma once

#include "lnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace lnn {

//! Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double prob)
{
    if (sorted.empty())
        return std::numeric_limits<double>::quiet_NaN();
    if (!(prob >= 0.0 && prob <= 1.0))
        throw ArgumentError("quantile probability must lie in [0, 1]");
    const double pos = prob * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double prob)
{
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, prob);
}

inline double mean(const std::vector<double>& v)
{
    if (v.empty())
        return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

} // namespace lnn
