#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace epsbench {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double stddev(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double mu = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// Linear interpolation between order statistics (Hyndman-Fan type 7).
inline double quantile(std::span<const double> xs, double q) {
    if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double median(std::span<const double> xs) { return quantile(xs, 0.5); }

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;
    double q05 = 0.0;
    double q50 = 0.0;
    double q95 = 0.0;
};

inline Summary summarize(std::span<const double> xs) {
    return {mean(xs), stddev(xs), quantile(xs, 0.05), quantile(xs, 0.5), quantile(xs, 0.95)};
}

// Standard error of the mean of a correlated series by non-overlapping batch
// means.
inline double batch_means_standard_error(std::span<const double> xs, std::size_t n_batches = 100) {
    if (xs.size() < 2 * n_batches) throw std::invalid_argument("series too short for batch means");
    const std::size_t batch = xs.size() / n_batches;
    std::vector<double> means(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * batch; i < (b + 1) * batch; ++i) s += xs[i];
        means[b] = s / static_cast<double>(batch);
    }
    return stddev(means) / std::sqrt(static_cast<double>(n_batches));
}

}  // namespace epsbench
