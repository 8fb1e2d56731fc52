#include "kge/stats.hpp"

#include <algorithm>
#include <cmath>

#include "kge/error.hpp"

namespace kge {

namespace {

void check_series(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("correlation: series lengths differ");
    if (x.size() < 2) throw DataError("correlation: need at least 2 points");
    for (double v : x)
        if (!std::isfinite(v)) throw DataError("correlation: non-finite value in series");
    for (double v : y)
        if (!std::isfinite(v)) throw DataError("correlation: non-finite value in series");
}

} // namespace

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    check_series(x, y);
    const std::size_t n = x.size();

    // Two-pass: means first, then centered moments.
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;  // constant series
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

std::vector<double> fractional_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        double mean_rank = static_cast<double>(i + j) / 2.0 + 1.0;  // 1-based
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    check_series(x, y);
    std::vector<double> rx = fractional_ranks(x);
    std::vector<double> ry = fractional_ranks(y);
    return pearson(rx, ry);
}

} // namespace kge
