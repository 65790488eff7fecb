#pragma once

// Summary statistics over cross-validation runs: mean +/- sample std for the
// score tables, and linear-interpolation quartiles (the numpy default) with
// IQR for the box statistics.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ssp {

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("mean: empty input");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n-1 denominator); 0 for a single value.
inline double sample_std(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("sample_std: empty input");
    if (v.size() == 1) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Quantile by linear interpolation between order statistics: at probability
/// p the value is sorted[h] interpolated at h = (n-1)*p.
inline double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw std::invalid_argument("quantile: empty input");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must be in [0, 1]");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

struct BoxStats {
    double q1 = 0.0, median = 0.0, q3 = 0.0, iqr = 0.0;
    double min = 0.0, max = 0.0;
};

inline BoxStats box_stats(const std::vector<double>& v) {
    BoxStats b;
    b.q1 = quantile(v, 0.25);
    b.median = quantile(v, 0.5);
    b.q3 = quantile(v, 0.75);
    b.iqr = b.q3 - b.q1;
    b.min = *std::min_element(v.begin(), v.end());
    b.max = *std::max_element(v.begin(), v.end());
    return b;
}

}  // namespace ssp
