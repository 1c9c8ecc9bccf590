#include "xrsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace xrsim {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean of empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman needs two equal-length samples of size >= 2");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double mx = mean(rx), my = mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

double paired_permutation_p(std::span<const double> a, std::span<const double> b,
                            std::size_t resamples, std::uint64_t seed) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("paired test needs two equal-length non-empty samples");
    const std::size_t n = a.size();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
    const double observed = std::accumulate(diff.begin(), diff.end(), 0.0);
    // Small slack so sign patterns equal to the observed sum count despite rounding.
    const double tol = 1e-12 * std::max(1.0, std::abs(observed));

    std::size_t hits = 0, total = 0;
    if (n <= 20) {
        const std::uint64_t patterns = std::uint64_t{1} << n;
        for (std::uint64_t mask = 0; mask < patterns; ++mask) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1U) ? -diff[i] : diff[i];
            hits += s >= observed - tol;
        }
        total = patterns;
    } else {
        std::mt19937_64 rng(seed);
        std::bernoulli_distribution coin(0.5);
        for (std::size_t r = 0; r < resamples; ++r) {
            double s = 0.0;
            for (double d : diff) s += coin(rng) ? -d : d;
            hits += s >= observed - tol;
        }
        // Count the observed arrangement so p is never 0.
        hits += 1;
        total = resamples + 1;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace xrsim
