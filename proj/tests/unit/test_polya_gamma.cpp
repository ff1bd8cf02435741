#include <doctest.h>

#include <cmath>
#include <numbers>

#include "spm/polya_gamma.hpp"

using namespace spm;

namespace {

// Moments from the infinite-convolution representation
//   PG(1, z) = (1 / (2 pi^2)) sum_k g_k / ((k - 1/2)^2 + z^2 / (4 pi^2)),  g_k ~ Exp(1).
double series_mean(double z) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  double s = 0.0;
  for (int k = 1; k < 2000000; ++k) s += 1.0 / ((k - 0.5) * (k - 0.5) + z * z / (4 * pi2));
  return s / (2 * pi2);
}

double series_variance(double z) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  double s = 0.0;
  for (int k = 1; k < 200000; ++k) {
    const double d = (k - 0.5) * (k - 0.5) + z * z / (4 * pi2);
    s += 1.0 / (d * d);
  }
  return s / (4 * pi2 * pi2);
}

}  // namespace

TEST_CASE("closed-form mean agrees with the series") {
  for (double z : {0.0, 0.3, 1.0, 2.5, 7.0}) CHECK(polya_gamma_mean(z) == doctest::Approx(series_mean(z)).epsilon(1e-6));
  CHECK(polya_gamma_mean(-1.3) == polya_gamma_mean(1.3));
}

TEST_CASE("sampler moments match the series") {
  for (double z : {0.0, 0.8, 3.0, 9.0}) {
    RngStream r(17, static_cast<std::uint64_t>(z * 10));
    const int n = 100000;
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = sample_polya_gamma(r, z);
      REQUIRE(w > 0.0);
      s += w;
      ss += w * w;
    }
    const double m = s / n;
    const double v = ss / n - m * m;
    const double se = std::sqrt(series_variance(z) / n);
    CHECK(std::abs(m - series_mean(z)) < 4.0 * se);
    CHECK(v == doctest::Approx(series_variance(z)).epsilon(0.05));
  }
}
