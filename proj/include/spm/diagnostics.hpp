#pragma once

#include <span>
#include <vector>

namespace spm {

// Percentile of already sorted data, linear interpolation between order
// statistics (h = (n - 1) q).
double sorted_percentile(std::span<const double> sorted, double q);
double percentile(std::vector<double> values, double q);

// Split-Rhat: each chain is halved and the classic potential scale
// reduction is computed over the 2 * chains halves. Returns 1 for
// constant draws and NaN when fewer than 4 draws per chain exist.
double split_rhat(const std::vector<std::vector<double>>& chains);

// Multi-chain effective sample size with Geyer's initial monotone sequence
// over the combined autocorrelation (as in Stan).
double effective_sample_size(const std::vector<std::vector<double>>& chains);

}  // namespace spm
