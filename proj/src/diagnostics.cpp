#include "spm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spm/errors.hpp"

namespace spm {
namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double var_of(std::span<const double> x, double mean) {
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

}  // namespace

double sorted_percentile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("percentile level must lie in [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return sorted_percentile(values, q);
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::span<const double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    if (h < 2) return std::numeric_limits<double>::quiet_NaN();
    halves.emplace_back(c.data(), h);
    halves.emplace_back(c.data() + (c.size() - h), h);
  }
  const std::size_t m = halves.size();
  const std::size_t n = halves.front().size();
  for (const auto& h : halves)
    if (h.size() != n) return std::numeric_limits<double>::quiet_NaN();

  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = mean_of(halves[j]);
    vars[j] = var_of(halves[j], means[j]);
  }
  const double grand = mean_of(means);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(n) / static_cast<double>(m - 1);
  const double w = mean_of(vars);
  if (w <= 0.0) return b <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (static_cast<double>(n - 1) / static_cast<double>(n)) * w + b / static_cast<double>(n);
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) return 0.0;
  const std::size_t m = chains.size();
  std::size_t n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 4) return static_cast<double>(m * n);

  std::vector<double> means(m), vars(m);
  std::vector<std::vector<double>> acov(m, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < m; ++j) {
    std::span<const double> x(chains[j].data(), n);
    means[j] = mean_of(x);
    vars[j] = var_of(x, means[j]);
  }
  const double w = mean_of(vars);
  if (w <= 0.0) return static_cast<double>(m * n);
  const double grand = mean_of(means);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b = m > 1 ? b * static_cast<double>(n) / static_cast<double>(m - 1) : 0.0;
  const double var_plus = (static_cast<double>(n - 1) / static_cast<double>(n)) * w + b / static_cast<double>(n);

  // Autocovariances are computed lazily lag by lag; the sum stops at the
  // first negative pair anyway.
  auto rho = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto& x = chains[j];
      double s = 0.0;
      for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - means[j]) * (x[t + lag] - means[j]);
      acc += s / static_cast<double>(n);
    }
    acc /= static_cast<double>(m);
    return 1.0 - (w - acc) / var_plus;
  };

  double tau = -1.0;  // -1 + 2 * sum of Geyer pair sums
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    const double pair = (t == 0 ? 1.0 : rho(t)) + rho(t + 1);
    if (pair < 0.0) break;
    const double mono = std::min(pair, prev_pair);
    tau += 2.0 * mono;
    prev_pair = mono;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
  return static_cast<double>(m * n) / tau;
}

}  // namespace spm
