#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace xrsim {

[[nodiscard]] double mean(std::span<const double> xs);

/// Ranks starting at 1; tied values share the average of their ranks.
[[nodiscard]] std::vector<double> average_ranks(std::span<const double> xs);

/// Pearson correlation of the average ranks. NaN if either side is constant.
[[nodiscard]] double spearman(std::span<const double> x, std::span<const double> y);

/// One-sided paired sign-flip permutation test for mean(a - b) > 0. Exact
/// enumeration for up to 20 pairs, otherwise `resamples` random flips.
[[nodiscard]] double paired_permutation_p(std::span<const double> a, std::span<const double> b,
                                          std::size_t resamples = 100000,
                                          std::uint64_t seed = 1);

}  // namespace xrsim
